#include "probelens/analysis.hpp"

#include <cmath>
#include <random>

#include <Eigen/QR>
#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "probelens/error.hpp"
#include "probelens/synth.hpp"

using namespace probelens;

namespace {

GenerationRecord gen(std::string id, std::string out, std::string answer, std::vector<std::string> aliases = {}) {
  return {std::move(id), std::move(out), std::move(answer), std::move(aliases)};
}

std::vector<PositionCurve> curves(const std::vector<std::uint32_t>& positions, const std::vector<double>& peaks,
                                  const std::vector<std::uint32_t>& layers) {
  std::vector<PositionCurve> out;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    PositionCurve c;
    c.gold_class = static_cast<std::uint32_t>(i);
    c.gold_position = positions[i];
    c.peak_accuracy = peaks[i];
    c.peak_layer = layers[i];
    out.push_back(c);
  }
  return out;
}

std::vector<PositionAccuracy> gen_acc(const std::vector<std::uint32_t>& positions, const std::vector<double>& acc) {
  std::vector<PositionAccuracy> out;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    PositionAccuracy p;
    p.gold_class = static_cast<std::uint32_t>(i);
    p.gold_position = positions[i];
    p.accuracy = acc[i];
    out.push_back(p);
  }
  return out;
}

// Hand-rolled lens: optional RMS norm, dense product, softmax, all in long double.
double lens_oracle(const WeightMatrix& head, const std::vector<double>& x, const std::vector<float>* scale,
                   std::uint32_t target, double eps) {
  std::vector<long double> h(x.begin(), x.end());
  if (scale) {
    long double ms = 0;
    for (const auto v : h) ms += v * v;
    ms /= h.size();
    const long double r = std::sqrt(ms + eps);
    for (std::size_t i = 0; i < h.size(); ++i) h[i] = h[i] / r * (*scale)[i];
  }
  std::vector<long double> logits(head.rows);
  long double mx = -1e300L;
  for (std::uint32_t v = 0; v < head.rows; ++v) {
    long double s = 0;
    for (std::uint32_t j = 0; j < head.cols; ++j) s += head.data[v * head.cols + j] * h[j];
    logits[v] = s;
    mx = std::max(mx, s);
  }
  long double z = 0;
  for (const auto l : logits) z += std::exp(l - mx);
  return static_cast<double>(std::exp(logits[target] - mx) / z);
}

}  // namespace

TEST(GenerationCorrect, Examples) {
  const std::string uuid = "a14d0f17-7375-48a6-87a8-3ef533a80b43";
  EXPECT_TRUE(is_generation_correct(gen("p", uuid, uuid), Task::kKv));
  EXPECT_TRUE(is_generation_correct(gen("p", " \"" + uuid + "\".", uuid), Task::kKv));
  EXPECT_FALSE(is_generation_correct(gen("p", "I cannot find the value.", uuid), Task::kKv));
  EXPECT_FALSE(is_generation_correct(gen("p", uuid.substr(0, 30), uuid), Task::kKv));
  EXPECT_TRUE(is_generation_correct(
      gen("p", "The first prize was awarded to Wilhelm Conrad Röntgen in 1901.", "Wilhelm Conrad Röntgen",
          {"Wilhelm Conrad Röntgen"}),
      Task::kMdqa));
  EXPECT_TRUE(is_generation_correct(gen("p", "it was röntgen", "Wilhelm Conrad Röntgen", {"Röntgen"}), Task::kMdqa));
  EXPECT_FALSE(is_generation_correct(gen("p", "I cannot find the answer.", "Paris", {"Paris"}), Task::kMdqa));
}

TEST(GenerationAccuracy, PerPositionCounts) {
  auto a = fixtures::make_archive(6, 1, 1, 3);
  a.manifest.generations = std::vector<GenerationRecord>{
      gen("p0", "x", "x"), gen("p1", "x", "x"), gen("p2", "no", "x"),
      gen("p3", "no", "x"), gen("p4", "x", "x"), gen("p5", "no", "x"),
  };
  const auto acc = generation_accuracy(a.manifest);
  ASSERT_EQ(acc.size(), 3u);
  EXPECT_DOUBLE_EQ(acc[0].accuracy, 0.5);
  EXPECT_DOUBLE_EQ(acc[1].accuracy, 1.0);
  EXPECT_DOUBLE_EQ(acc[2].accuracy, 0.0);
  EXPECT_EQ(acc[2].gold_position, 3u);

  a.manifest.generations->push_back(gen("ghost", "x", "x"));
  EXPECT_THROW(generation_accuracy(a.manifest), ConsistencyError);
  a.manifest.generations.reset();
  EXPECT_THROW(generation_accuracy(a.manifest), ConsistencyError);
}

TEST(Gap, ConstantGap) {
  const std::vector<std::uint32_t> pos{1, 10, 20};
  const auto r = ktdt_gap(curves(pos, {1.0, 1.0, 1.0}, {3, 4, 5}), gen_acc(pos, {0.6, 0.6, 0.6}));
  for (const auto& e : r.per_position) EXPECT_NEAR(e.gap, 0.4, 1e-15);
  EXPECT_NEAR(r.mean_gap, 0.4, 1e-15);
}

TEST(Gap, ZeroWhenEqual) {
  const std::vector<std::uint32_t> pos{1, 2};
  const auto r = ktdt_gap(curves(pos, {0.7, 0.3}, {0, 1}), gen_acc(pos, {0.7, 0.3}));
  for (const auto& e : r.per_position) EXPECT_EQ(e.gap, 0.0);
}

TEST(Gap, HandFixture) {
  const std::vector<std::uint32_t> pos{1, 15, 30};
  const auto r = ktdt_gap(curves(pos, {0.95, 0.875, 0.75}, {2, 6, 9}), gen_acc(pos, {0.5, 0.25, 0.75}));
  EXPECT_DOUBLE_EQ(r.per_position[0].gap, 0.45);
  EXPECT_DOUBLE_EQ(r.per_position[1].gap, 0.625);
  EXPECT_DOUBLE_EQ(r.per_position[2].gap, 0.0);
  EXPECT_EQ(r.per_position[1].peak_layer, 6u);
  EXPECT_NEAR(r.mean_gap, (0.45 + 0.625) / 3.0, 1e-15);
}

TEST(Gap, ScheduleMismatch) {
  EXPECT_THROW(ktdt_gap(curves({1, 2}, {1, 1}, {0, 0}), gen_acc({1, 3}, {1, 1})), CompatibilityError);
  EXPECT_THROW(ktdt_gap(curves({1, 2}, {1, 1}, {0, 0}), gen_acc({1}, {1})), CompatibilityError);
}

TEST(PeakRegression, FilterIsStrict) {
  std::vector<PeakPoint> pts{{1, 0.6, 0.9}, {2, 0.61, 0.8}, {3, 0.9, 0.7}, {4, 0.2, 0.1}};
  try {
    peak_layer_regression(pts, 0.6);
    FAIL();
  } catch (const InsufficientDataError& e) {
    EXPECT_NE(std::string(e.what()).find("insufficient data after 0.6 filter"), std::string::npos);
  }
  pts.push_back({5, 0.99, 0.65});
  const auto r = peak_layer_regression(pts, 0.6);
  EXPECT_EQ(r.points.size(), 3u);
  EXPECT_EQ(r.dof, 1u);
}

TEST(PeakRegression, ZeroVarianceRegressor) {
  std::vector<PeakPoint> pts{{3, 0.9, 0.9}, {3, 0.9, 0.8}, {3, 0.9, 0.7}};
  EXPECT_THROW(peak_layer_regression(pts), DegenerateInputError);
}

TEST(DistanceCurve, PlantedLineSpacing) {
  PlantSpec spec;
  spec.layout = ClassLayout::kLine;
  spec.signal_layer = 3;
  spec.decay_start = 5;
  spec.seed = 8;
  spec.n_prompts_per_class = 5;
  const auto archive = planted_archive(spec);
  DistanceOptions opt;
  opt.repetitions = 5;
  const auto curve = distance_curve(archive, opt);
  ASSERT_EQ(curve.per_layer.size(), 8u);
  for (std::uint32_t l = 0; l < 8; ++l) {
    const double expected = planted_alpha(spec, l) * spec.separation;
    if (expected > 0) {
      EXPECT_NEAR(curve.per_layer[l], expected, 0.05 * spec.separation) << l;
    } else {
      EXPECT_LT(curve.per_layer[l], 5 * spec.noise_sigma) << l;
    }
  }
  opt.representative = Representative::kClassMean;
  const auto means = distance_curve(archive, opt);
  EXPECT_NEAR(means.per_layer[4], spec.separation, 0.02 * spec.separation);
  opt.space = DistanceSpace::kAmbient;
  const auto ambient = distance_curve(archive, opt);
  EXPECT_NEAR(ambient.per_layer[4], spec.separation, 0.05 * spec.separation);
}

TEST(DistanceCurve, IdenticalEmbeddingsGiveZero) {
  auto a = fixtures::make_archive(6, 2, 3, 3);
  for (std::uint32_t p = 0; p < 6; ++p) {
    for (std::uint32_t i = 0; i < 3; ++i) a.data[(p * 2 + 0) * 3 + i] = 1.25f;
  }
  const auto curve = distance_curve(a);
  EXPECT_EQ(curve.per_layer[0], 0.0);
  EXPECT_GT(curve.per_layer[1], 0.0);
}

TEST(DistanceCurve, InvariantUnderOrthogonalTransform) {
  PlantSpec spec;
  spec.layout = ClassLayout::kLine;
  spec.seed = 21;
  spec.n_prompts_per_class = 4;
  const auto archive = planted_archive(spec);
  const auto d = archive.header.hidden_dim;
  std::mt19937_64 gen(99);
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd G(d, d);
  for (std::uint32_t i = 0; i < d; ++i) {
    for (std::uint32_t j = 0; j < d; ++j) G(i, j) = n(gen);
  }
  const Eigen::MatrixXd Q = Eigen::HouseholderQR<Eigen::MatrixXd>(G).householderQ();
  auto rotated = archive;
  const auto rows = static_cast<std::size_t>(archive.header.n_prompts) * archive.header.n_layers;
  for (std::size_t r = 0; r < rows; ++r) {
    Eigen::VectorXd v(d);
    for (std::uint32_t i = 0; i < d; ++i) v[i] = archive.data[r * d + i];
    const Eigen::VectorXd w = Q * v;
    for (std::uint32_t i = 0; i < d; ++i) rotated.data[r * d + i] = static_cast<float>(w[i]);
  }
  for (auto rep : {Representative::kSinglePromptPerPosition, Representative::kClassMean}) {
    DistanceOptions opt;
    opt.representative = rep;
    opt.repetitions = 4;
    const auto a = distance_curve(archive, opt);
    const auto b = distance_curve(rotated, opt);
    for (std::size_t l = 0; l < a.per_layer.size(); ++l) EXPECT_NEAR(a.per_layer[l], b.per_layer[l], 1e-6) << l;
  }
}

TEST(DistanceCurve, CoverageErrors) {
  EXPECT_THROW(distance_curve(fixtures::make_archive(4, 1, 3, 1)), CoverageError);
  auto a = fixtures::make_archive(4, 1, 3, 3);  // class 2 has a single prompt
  DistanceOptions opt;
  opt.repetitions = 2;
  EXPECT_THROW(distance_curve(a, opt), CoverageError);
  a.manifest.schedule.positions.push_back(4);  // class 3 has none
  EXPECT_THROW(distance_curve(a), CoverageError);
}

TEST(LogitLens, IdentityHeadClosedForm) {
  WeightMatrix head{"lm_head", 3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1}, std::nullopt};
  const Eigen::VectorXd e1 = Eigen::VectorXd::Unit(3, 0);
  EXPECT_NEAR(logit_lens(e1, head, nullptr, 0), std::exp(1.0) / (std::exp(1.0) + 2.0), 1e-15);
  EXPECT_NEAR(std::exp(1.0) / (std::exp(1.0) + 2.0), 0.576117, 1e-6);
  EXPECT_EQ(logit_lens(Eigen::VectorXd::Zero(3), head, nullptr, 2), 1.0 / 3.0);
}

TEST(LogitLens, MatchesDenseOracle) {
  std::mt19937_64 rng(99);
  std::normal_distribution<float> n(0.0f, 1.0f);
  WeightMatrix head{"lm_head", 8, 4, {}, std::nullopt};
  for (int i = 0; i < 32; ++i) head.data.push_back(n(rng));
  WeightMatrix scale{"final_norm_scale", 1, 4, {}, std::nullopt};
  for (int i = 0; i < 4; ++i) scale.data.push_back(0.5f + std::abs(n(rng)));
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> x(4);
    for (auto& v : x) v = 3.0 * n(rng);
    const Eigen::VectorXd xv = Eigen::Map<Eigen::VectorXd>(x.data(), 4);
    for (std::uint32_t t = 0; t < 8; ++t) {
      EXPECT_NEAR(logit_lens(xv, head, nullptr, t), lens_oracle(head, x, nullptr, t, 1e-5), 1e-7);
      EXPECT_NEAR(logit_lens(xv, head, &scale, t), lens_oracle(head, x, &scale.data, t, 1e-5), 1e-7);
    }
    LensOptions skip;
    skip.apply_norm = false;
    EXPECT_NEAR(logit_lens(xv, head, &scale, 1, skip), lens_oracle(head, x, nullptr, 1, 0), 1e-7);
  }
}

TEST(LogitLens, DimensionErrors) {
  WeightMatrix head{"lm_head", 2, 3, {1, 2, 3, 4, 5, 6}, std::nullopt};
  EXPECT_THROW(logit_lens(Eigen::VectorXd::Zero(4), head, nullptr, 0), DimensionError);
  EXPECT_THROW(logit_lens(Eigen::VectorXd::Zero(3), head, nullptr, 2), DimensionError);
  WeightMatrix scale{"final_norm_scale", 1, 2, {1, 1}, std::nullopt};
  EXPECT_THROW(logit_lens(Eigen::VectorXd::Zero(3), head, &scale, 0), DimensionError);
}

TEST(LogitLensCurve, SinglePromptEqualsDirectCalls) {
  auto a = fixtures::make_archive(1, 2, 3, 1);
  for (auto& v : a.data) v *= 0.1f;
  a.manifest.first_answer_token_rows = std::vector<std::uint32_t>{1};
  WeightMatrix head{"lm_head", 4, 3, {0.1f, 0.2f, 0.3f, -1, 0, 1, 2, 2, 2, 0, 0, -0.5f}, std::nullopt};
  WeightMatrix scale{"final_norm_scale", 1, 3, {1, 2, 0.5f}, std::nullopt};
  const auto curve = logit_lens_curve(a, head, &scale);
  ASSERT_EQ(curve.per_layer_per_position.size(), 2u);
  EXPECT_TRUE(curve.norm_applied);
  for (std::uint32_t l = 0; l < 2; ++l) {
    const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXf>(a.embedding(0, l), 3).cast<double>();
    EXPECT_EQ(curve.per_layer_per_position[l][0], logit_lens(x, head, &scale, 1));
  }
}

TEST(LogitLensCurve, ZeroLayerIsUniformAndEmptyClassIsNan) {
  auto a = fixtures::make_archive(4, 2, 3, 2);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::uint32_t p = 0; p < 4; ++p) a.data[(p * 2 + 1) * 3 + i] = 0.0f;
  }
  a.manifest.schedule.positions.push_back(3);
  a.manifest.first_answer_token_rows = std::vector<std::uint32_t>{0, 1, 2, 3};
  WeightMatrix head{"lm_head", 5, 3, std::vector<float>(15, 0.3f), std::nullopt};
  head.data[4] = -2.0f;
  const auto curve = logit_lens_curve(a, head, nullptr);
  EXPECT_FALSE(curve.norm_applied);
  EXPECT_EQ(curve.per_layer_per_position[1][0], 1.0 / 5.0);
  EXPECT_EQ(curve.per_layer_per_position[1][1], 1.0 / 5.0);
  EXPECT_TRUE(std::isnan(curve.per_layer_per_position[1][2]));
}

TEST(LogitLensCurve, NeedsTargetRows) {
  const auto a = fixtures::make_archive(2, 1, 3);
  WeightMatrix head{"lm_head", 2, 3, std::vector<float>(6, 1.0f), std::nullopt};
  EXPECT_THROW(logit_lens_curve(a, head, nullptr), ConsistencyError);
  const std::vector<std::uint32_t> wrong{0};
  EXPECT_THROW(logit_lens_curve(a, head, nullptr, {}, &wrong), ConsistencyError);
}

TEST(PairwiseSum, StableAcrossOrderings) {
  std::vector<double> v;
  for (int i = 0; i < 1000; ++i) v.push_back(1.0 / (i + 1));
  const double a = pairwise_sum(v);
  std::reverse(v.begin(), v.end());
  EXPECT_NEAR(pairwise_sum(v), a, 1e-13);
  EXPECT_EQ(pairwise_sum(std::vector<double>{}), 0.0);
}
