#include "probelens/probe.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "probelens/error.hpp"
#include "probelens/synth.hpp"

using namespace probelens;

namespace {

LinearModel random_model(std::mt19937_64& gen, int C, int d, double scale = 0.5) {
  std::normal_distribution<double> n(0.0, scale);
  LinearModel m;
  m.weights.resize(C, d);
  m.bias.resize(C);
  for (int i = 0; i < C; ++i) {
    m.bias[i] = n(gen);
    for (int j = 0; j < d; ++j) m.weights(i, j) = n(gen);
  }
  return m;
}

// Two Gaussian blobs centred at (-2,-2) and (2,2).
void blobs(std::mt19937_64& gen, int n, Eigen::MatrixXd& X, Labels& y, double sigma = 0.5) {
  std::normal_distribution<double> noise(0.0, sigma);
  X.resize(n, 2);
  y.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double c = (i % 2 == 0) ? -2.0 : 2.0;
    X(i, 0) = c + noise(gen);
    X(i, 1) = c + noise(gen);
    y[static_cast<std::size_t>(i)] = static_cast<std::uint32_t>(i % 2);
  }
}

Eigen::MatrixXd layer_matrix(const EmbeddingArchive& a, std::uint32_t layer) {
  return slice_layer(a, layer).features.cast<double>();
}

}  // namespace

TEST(Softmax, ClosedForms) {
  const Eigen::VectorXd u = softmax(Eigen::VectorXd::Zero(3));
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(u[i], 1.0 / 3.0, 1e-15);
  Eigen::VectorXd v(2);
  v << std::log(2.0), 0.0;
  const auto s = softmax(v);
  EXPECT_NEAR(s[0], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(s[1], 1.0 / 3.0, 1e-15);
  Eigen::VectorXd big(2);
  big << 1000.0, 0.0;
  const auto t = softmax(big);
  EXPECT_TRUE(std::isfinite(t[0]));
  EXPECT_NEAR(t[0], 1.0, 1e-15);
  EXPECT_GE(t[1], 0.0);
  EXPECT_LT(t[1], 1e-300);
}

TEST(Loss, UniformPredictions) {
  std::mt19937_64 gen(1);
  const Eigen::MatrixXd X = Eigen::MatrixXd::Random(7, 5);
  LinearModel m2{Eigen::MatrixXd::Zero(2, 5), Eigen::VectorXd::Zero(2)};
  EXPECT_NEAR(loss(m2, X, {0, 1, 1, 0, 0, 1, 1}), std::log(2.0), 1e-12);
  LinearModel m11{Eigen::MatrixXd::Zero(11, 5), Eigen::VectorXd::Zero(11)};
  EXPECT_NEAR(loss(m11, X, {0, 1, 2, 3, 4, 5, 10}), std::log(11.0), 1e-12);
  EXPECT_NEAR(std::log(11.0), 2.397895, 1e-6);
}

TEST(Loss, SaturatedTrueClass) {
  const Eigen::MatrixXd X = Eigen::MatrixXd::Random(4, 3);
  LinearModel m{Eigen::MatrixXd::Zero(3, 3), Eigen::VectorXd::Zero(3)};
  m.bias[2] = 40.0;
  EXPECT_LT(loss(m, X, {2, 2, 2, 2}), 1e-12);
}

TEST(Loss, ShapeMismatch) {
  LinearModel m{Eigen::MatrixXd::Zero(3, 3), Eigen::VectorXd::Zero(3)};
  EXPECT_THROW(loss(m, Eigen::MatrixXd::Zero(2, 4), {0, 1}), DimensionError);
  EXPECT_THROW(loss(m, Eigen::MatrixXd::Zero(2, 3), {0}), DimensionError);
  EXPECT_THROW(loss(m, Eigen::MatrixXd::Zero(2, 3), {0, 3}), DimensionError);
}

TEST(Gradient, ClosedFormAtUniform) {
  LinearModel m{Eigen::MatrixXd::Zero(2, 3), Eigen::VectorXd::Zero(2)};
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(1, 3);
  X(0, 0) = 1.0;
  const auto g = loss_gradient(m, X, {1});
  EXPECT_DOUBLE_EQ(g.weights(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(g.weights(1, 0), -0.5);
  EXPECT_DOUBLE_EQ(g.weights(0, 1), 0.0);
  EXPECT_DOUBLE_EQ(g.bias[0], 0.5);
  EXPECT_DOUBLE_EQ(g.bias[1], -0.5);
}

TEST(Gradient, MatchesCentralFiniteDifferences) {
  std::mt19937_64 gen(2024);
  std::uniform_int_distribution<int> cdist(2, 11);
  std::uniform_int_distribution<int> ddist(1, 32);
  const double h = 1e-4;
  for (int inst = 0; inst < 20; ++inst) {
    const int C = cdist(gen);
    const int d = ddist(gen);
    const int N = 2 * C + 3;
    auto m = random_model(gen, C, d);
    const Eigen::MatrixXd X = Eigen::MatrixXd::Random(N, d);
    Labels y(static_cast<std::size_t>(N));
    for (int i = 0; i < N; ++i) y[static_cast<std::size_t>(i)] = static_cast<std::uint32_t>(gen() % C);
    const double l2 = (inst % 2 == 0) ? 0.0 : 1e-2;
    const auto g = loss_gradient(m, X, y, l2);
    Eigen::MatrixXd fw(C, d);
    Eigen::VectorXd fb(C);
    for (int i = 0; i < C; ++i) {
      for (int j = 0; j < d; ++j) {
        auto plus = m;
        auto minus = m;
        plus.weights(i, j) += h;
        minus.weights(i, j) -= h;
        fw(i, j) = (loss(plus, X, y, l2) - loss(minus, X, y, l2)) / (2 * h);
        EXPECT_NEAR(g.weights(i, j), fw(i, j), 1e-8);
      }
      auto plus = m;
      auto minus = m;
      plus.bias[i] += h;
      minus.bias[i] -= h;
      fb[i] = (loss(plus, X, y, l2) - loss(minus, X, y, l2)) / (2 * h);
      EXPECT_NEAR(g.bias[i], fb[i], 1e-8);
    }
    const double diff = std::sqrt((g.weights - fw).squaredNorm() + (g.bias - fb).squaredNorm());
    const double norm = std::sqrt(g.weights.squaredNorm() + g.bias.squaredNorm());
    EXPECT_LT(diff / norm, 1e-5) << "instance " << inst;
  }
}

TEST(Gradient, VanishesAtRegularisedMinimum) {
  std::mt19937_64 gen(5);
  Eigen::MatrixXd X;
  Labels y;
  blobs(gen, 40, X, y);
  TrainConfig cfg;
  cfg.learning_rate = 0.5;
  cfg.epochs = 3000;
  cfg.batch_size = 40;
  cfg.l2_penalty = 0.1;
  cfg.standardize = false;
  const auto model = train_probe(X, y, 2, cfg);
  const auto g = loss_gradient(model.linear, X, y, cfg.l2_penalty);
  EXPECT_LT(std::sqrt(g.weights.squaredNorm() + g.bias.squaredNorm()), 1e-6);
}

TEST(Train, SeparableBlobsAgreeWithNearestCentroid) {
  std::mt19937_64 gen(7);
  Eigen::MatrixXd X;
  Labels y;
  blobs(gen, 200, X, y);
  const auto model = train_probe(X, y, 2, TrainConfig{});
  const double probe_acc = evaluate(model, X, y, 2).accuracy;
  const double nc_acc = oracles::nearest_centroid_accuracy(X, y, X, y, 2);
  EXPECT_GE(nc_acc, 0.99);
  EXPECT_GE(probe_acc, 0.99);
  EXPECT_GE(probe_acc, nc_acc - 0.01);
}

TEST(Train, ShuffledLabelsStayAtChance) {
  std::mt19937_64 gen(8);
  const int C = 11;
  const int n = 1100;
  std::normal_distribution<double> g(0.0, 1.0);
  auto draw = [&](Eigen::MatrixXd& X, Labels& y) {
    X.resize(n, 16);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < 16; ++j) X(i, j) = g(gen);
    }
    y.resize(n);
    for (int i = 0; i < n; ++i) y[static_cast<std::size_t>(i)] = static_cast<std::uint32_t>(i % C);
    std::shuffle(y.begin(), y.end(), gen);
  };
  Eigen::MatrixXd Xtr;
  Eigen::MatrixXd Xte;
  Labels ytr;
  Labels yte;
  draw(Xtr, ytr);
  draw(Xte, yte);
  const auto model = train_probe(Xtr, ytr, C, TrainConfig{});
  const double acc = evaluate(model, Xte, yte, C).accuracy;
  const auto [lo, hi] = oracles::binomial_interval(n, 1.0 / C);
  EXPECT_GE(acc, static_cast<double>(lo) / n);
  EXPECT_LE(acc, static_cast<double>(hi) / n);
}

TEST(Train, DeterministicBitForBit) {
  std::mt19937_64 gen(9);
  Eigen::MatrixXd X;
  Labels y;
  blobs(gen, 300, X, y, 2.0);
  TrainConfig cfg;
  cfg.batch_size = 32;
  cfg.seed = 77;
  const auto a = train_probe(X, y, 2, cfg);
  const auto b = train_probe(X, y, 2, cfg);
  EXPECT_TRUE((a.linear.weights.array() == b.linear.weights.array()).all());
  EXPECT_TRUE((a.linear.bias.array() == b.linear.bias.array()).all());
  cfg.seed = 78;
  const auto c = train_probe(X, y, 2, cfg);
  EXPECT_FALSE((a.linear.weights.array() == c.linear.weights.array()).all());
}

TEST(Train, LossDecreasesOverEpochs) {
  std::mt19937_64 gen(10);
  Eigen::MatrixXd X;
  Labels y;
  blobs(gen, 200, X, y, 1.5);
  TrainTrace trace;
  TrainConfig cfg;
  cfg.epochs = 20;
  train_probe(X, y, 2, cfg, &trace);
  ASSERT_EQ(trace.epoch_loss.size(), 20u);
  EXPECT_LT(trace.epoch_loss.back(), trace.epoch_loss.front());
  EXPECT_LT(trace.epoch_loss.front(), std::log(2.0));
}

TEST(Train, RejectsDegenerateInput) {
  const Eigen::MatrixXd X = Eigen::MatrixXd::Random(5, 2);
  EXPECT_THROW(train_probe(X, {1, 1, 1, 1, 1}, 3, TrainConfig{}), DegenerateInputError);
  EXPECT_THROW(train_probe(X.topRows(2), {0, 1}, 3, TrainConfig{}), DegenerateInputError);
  EXPECT_THROW(train_probe(X, {0, 1, 0, 1, 0}, 1, TrainConfig{}), DegenerateInputError);
  TrainConfig bad;
  bad.learning_rate = 0.0;
  EXPECT_THROW(train_probe(X, {0, 1, 0, 1, 0}, 2, bad), ConfigError);
}

TEST(Standardizer, ZeroVarianceFeaturesKeepUnitScale) {
  Eigen::MatrixXd X(3, 2);
  X << 1, 5, 2, 5, 3, 5;
  const auto s = Standardizer::fit(X);
  EXPECT_DOUBLE_EQ(s.scale[1], 1.0);
  const auto Z = s.apply(X);
  EXPECT_DOUBLE_EQ(Z(0, 1), 0.0);
  EXPECT_NEAR(Z.col(0).mean(), 0.0, 1e-15);
  EXPECT_NEAR(Z.col(0).squaredNorm() / 3.0, 1.0, 1e-12);
}

TEST(Evaluate, ConstantClassZero) {
  ProbeModel m;
  m.linear = {Eigen::MatrixXd::Zero(11, 2), Eigen::VectorXd::Zero(11)};
  m.linear.bias[0] = 1.0;
  const Eigen::MatrixXd X = Eigen::MatrixXd::Random(22, 2);
  Labels y;
  for (int i = 0; i < 22; ++i) y.push_back(static_cast<std::uint32_t>(i % 11));
  const auto e = evaluate(m, X, y, 11);
  EXPECT_DOUBLE_EQ(e.accuracy, 1.0 / 11.0);
  EXPECT_DOUBLE_EQ(e.per_class_accuracy[0], 1.0);
  EXPECT_DOUBLE_EQ(e.per_class_accuracy[5], 0.0);
}

TEST(Evaluate, TiesGoToSmallerClass) {
  ProbeModel m;
  m.linear = {Eigen::MatrixXd::Zero(3, 1), Eigen::VectorXd::Zero(3)};
  EXPECT_EQ(m.predict(Eigen::MatrixXd::Ones(2, 1)), (Labels{0, 0}));
}

TEST(Evaluate, HandCountedThreeSamples) {
  ProbeModel m;
  m.linear = {Eigen::MatrixXd::Zero(2, 1), Eigen::VectorXd::Zero(2)};
  m.linear.weights(1, 0) = 1.0;
  Eigen::MatrixXd X(3, 1);
  X << -1, 1, 2;
  const auto e = evaluate(m, X, {0, 1, 0}, 2);
  EXPECT_DOUBLE_EQ(e.accuracy, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(e.per_class_accuracy[0], 0.5);
  EXPECT_DOUBLE_EQ(e.per_class_accuracy[1], 1.0);
}

TEST(Evaluate, PerfectMarginOnTrainingSet) {
  std::mt19937_64 gen(11);
  Eigen::MatrixXd X;
  Labels y;
  blobs(gen, 100, X, y, 0.1);
  const auto model = train_probe(X, y, 2, TrainConfig{});
  EXPECT_DOUBLE_EQ(evaluate(model, X, y, 2).accuracy, 1.0);
}

TEST(RepeatTrain, SingleRepeatHasZeroStd) {
  std::mt19937_64 gen(12);
  Eigen::MatrixXd X;
  Labels y;
  blobs(gen, 100, X, y, 2.0);
  TrainConfig cfg;
  cfg.repeats = 1;
  const auto m = repeat_train(X, y, X, y, 2, cfg);
  EXPECT_EQ(m.repeats, 1u);
  EXPECT_EQ(m.std_accuracy, 0.0);
}

TEST(RepeatTrain, SeparableDataHasSmallStd) {
  std::mt19937_64 gen(13);
  Eigen::MatrixXd X;
  Labels y;
  blobs(gen, 200, X, y, 0.5);
  Eigen::MatrixXd Xt;
  Labels yt;
  blobs(gen, 200, Xt, yt, 0.5);
  const auto m = repeat_train(X, y, Xt, yt, 2, TrainConfig{});
  EXPECT_EQ(m.run_accuracies.size(), 10u);
  EXPECT_LT(m.std_accuracy, 0.01);
  double mean = 0.0;
  for (const double a : m.run_accuracies) mean += a;
  mean /= 10.0;
  double var = 0.0;
  for (const double a : m.run_accuracies) var += (a - mean) * (a - mean);
  EXPECT_NEAR(m.mean_accuracy, mean, 1e-12);
  EXPECT_NEAR(m.std_accuracy, std::sqrt(var / 10.0), 1e-12);
}

TEST(PeakIndex, EarliestMaximum) {
  const std::vector<double> v{0.2, 0.9, 0.9};
  EXPECT_EQ(peak_index(v), 1u);
  EXPECT_THROW(peak_index(std::vector<double>{}), InsufficientDataError);
}

TEST(LayerSweep, PlantedSignalLayerFive) {
  PlantSpec spec;
  spec.signal_layer = 5;
  spec.seed = 21;
  const auto train = planted_archive(spec);
  spec.sample_stream = 1;
  const auto test = planted_archive(spec);
  TrainConfig cfg;
  cfg.repeats = 3;
  const auto report = layer_sweep(train, test, cfg);
  EXPECT_EQ(report.peak_layer, 5u);
  EXPECT_GE(report.peak_accuracy, 0.99);
  const auto [lo, hi] = oracles::binomial_interval(test.header.n_prompts, 1.0 / 11.0);
  for (std::uint32_t l = 0; l < 8; ++l) {
    const auto Xtr = layer_matrix(train, l);
    const auto Xte = layer_matrix(test, l);
    const double nc = oracles::nearest_centroid_accuracy(Xtr, train.manifest.gold_classes, Xte,
                                                         test.manifest.gold_classes, 11);
    const double probe = report.metrics[l].mean_accuracy;
    if (l >= 5) {
      EXPECT_GE(nc, 0.99) << l;
      EXPECT_GE(probe, nc - 0.01) << l;
    } else {
      EXPECT_GE(probe * test.header.n_prompts, lo - 1e-9) << l;
      EXPECT_LE(probe * test.header.n_prompts, hi + 1e-9) << l;
    }
  }
}

TEST(LayerSweep, ChanceArchiveStaysInsideInterval) {
  const auto train = chance_archive(4, 16, 11, 100, 31);
  const auto test = chance_archive(4, 16, 11, 100, 32);
  TrainConfig cfg;
  cfg.repeats = 3;
  const auto report = layer_sweep(train, test, cfg);
  const auto [lo, hi] = oracles::binomial_interval(1100, 1.0 / 11.0);
  for (const auto& m : report.metrics) {
    EXPECT_GE(m.mean_accuracy * 1100, lo - 1e-9);
    EXPECT_LE(m.mean_accuracy * 1100, hi + 1e-9);
  }
}

TEST(LayerSweep, ThreadCountDoesNotChangeResults) {
  PlantSpec spec;
  spec.n_prompts_per_class = 20;
  spec.seed = 4;
  const auto train = planted_archive(spec);
  spec.sample_stream = 1;
  const auto test = planted_archive(spec);
  TrainConfig cfg;
  cfg.repeats = 2;
  cfg.epochs = 5;
  const auto a = layer_sweep(train, test, cfg, SweepOptions{1});
  const auto b = layer_sweep(train, test, cfg, SweepOptions{3});
  ASSERT_EQ(a.metrics.size(), b.metrics.size());
  for (std::size_t l = 0; l < a.metrics.size(); ++l) {
    EXPECT_EQ(a.metrics[l].run_accuracies, b.metrics[l].run_accuracies);
    EXPECT_EQ(a.metrics[l].per_class_accuracy, b.metrics[l].per_class_accuracy);
  }
}

TEST(LayerSweep, MismatchedArchivesAreIncompatible) {
  const auto a = fixtures::make_archive(10, 2, 4);
  const auto b = fixtures::make_archive(10, 2, 5);
  EXPECT_THROW(layer_sweep(a, b, TrainConfig{}), CompatibilityError);
  auto c = fixtures::make_archive(10, 2, 4, 5);
  EXPECT_THROW(layer_sweep(a, c, TrainConfig{}), CompatibilityError);
}

TEST(PositionCurves, OnePerScheduledPosition) {
  LayerSweepReport r;
  r.schedule_positions = {1, 5, 9};
  for (std::uint32_t l = 0; l < 3; ++l) {
    ProbeMetrics m;
    m.layer = l;
    m.per_class_accuracy = {0.1 * l, 0.5, l == 1 ? 0.9 : 0.3};
    r.metrics.push_back(m);
  }
  const auto curves = position_curves(r);
  ASSERT_EQ(curves.size(), 3u);
  EXPECT_EQ(curves[0].peak_layer, 2u);
  EXPECT_EQ(curves[1].peak_layer, 0u);
  EXPECT_EQ(curves[2].peak_layer, 1u);
  EXPECT_EQ(curves[2].gold_position, 9u);
  EXPECT_DOUBLE_EQ(curves[2].peak_accuracy, 0.9);
}
