#include "probelens/probe.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include "probelens/error.hpp"
#include "probelens/rng.hpp"

namespace probelens {
namespace {

void check_shapes(const LinearModel& model, const Eigen::MatrixXd& X, const Labels& y) {
  if (static_cast<std::size_t>(X.rows()) != y.size()) {
    throw DimensionError("X has " + std::to_string(X.rows()) + " rows but y has " + std::to_string(y.size()) +
                         " labels");
  }
  if (X.cols() != model.weights.cols()) {
    throw DimensionError("X has " + std::to_string(X.cols()) + " features, model expects " +
                         std::to_string(model.weights.cols()));
  }
  if (model.bias.size() != model.weights.rows()) {
    throw DimensionError("bias length does not match weight rows");
  }
  for (const auto label : y) {
    if (label >= model.num_classes()) {
      throw DimensionError("label " + std::to_string(label) + " outside " + std::to_string(model.num_classes()) +
                           " classes");
    }
  }
}

// Row-wise softmax of logits in place.
void softmax_rows(Eigen::MatrixXd& logits) {
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    auto row = logits.row(i);
    const double m = row.maxCoeff();
    row = (row.array() - m).exp();
    row /= row.sum();
  }
}

}  // namespace

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  if (logits.size() == 0) return logits;
  const double m = logits.maxCoeff();
  Eigen::VectorXd e = (logits.array() - m).exp();
  return e / e.sum();
}

double loss(const LinearModel& model, const Eigen::MatrixXd& X, const Labels& y, double l2_penalty) {
  check_shapes(model, X, y);
  if (y.empty()) throw DimensionError("loss needs at least one sample");
  Eigen::MatrixXd z = X * model.weights.transpose();
  z.rowwise() += model.bias.transpose();
  double total = 0.0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double m = z.row(i).maxCoeff();
    const double lse = m + std::log((z.row(i).array() - m).exp().sum());
    total += lse - z(i, y[static_cast<std::size_t>(i)]);
  }
  double value = total / static_cast<double>(y.size());
  if (l2_penalty != 0.0) value += 0.5 * l2_penalty * model.weights.squaredNorm();
  return value;
}

LossGradient loss_gradient(const LinearModel& model, const Eigen::MatrixXd& X, const Labels& y, double l2_penalty) {
  check_shapes(model, X, y);
  if (y.empty()) throw DimensionError("loss_gradient needs at least one sample");
  Eigen::MatrixXd p = X * model.weights.transpose();
  p.rowwise() += model.bias.transpose();
  softmax_rows(p);
  for (std::size_t i = 0; i < y.size(); ++i) p(static_cast<Eigen::Index>(i), y[i]) -= 1.0;
  const double inv_n = 1.0 / static_cast<double>(y.size());
  LossGradient g;
  g.weights = (p.transpose() * X) * inv_n;
  if (l2_penalty != 0.0) g.weights += l2_penalty * model.weights;
  g.bias = p.colwise().sum().transpose() * inv_n;
  return g;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be > 0");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(l2_penalty >= 0.0) || !std::isfinite(l2_penalty)) throw ConfigError("l2_penalty must be >= 0");
  if (repeats < 1) throw ConfigError("repeats must be >= 1");
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& X) {
  Standardizer s;
  const double n = static_cast<double>(X.rows());
  s.mean = X.colwise().mean();
  const Eigen::MatrixXd centered = X.rowwise() - s.mean;
  s.scale = (centered.array().square().colwise().sum() / n).sqrt().matrix();
  for (Eigen::Index j = 0; j < s.scale.size(); ++j) {
    if (!(s.scale[j] > 0.0)) s.scale[j] = 1.0;
  }
  return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& X) const {
  if (X.cols() != mean.size()) throw DimensionError("standardizer fitted on a different feature count");
  return ((X.rowwise() - mean).array().rowwise() / scale.array()).matrix();
}

Eigen::MatrixXd ProbeModel::logits(const Eigen::MatrixXd& X) const {
  Eigen::MatrixXd z = standardizer ? standardizer->apply(X) * linear.weights.transpose()
                                   : X * linear.weights.transpose();
  z.rowwise() += linear.bias.transpose();
  return z;
}

Labels ProbeModel::predict(const Eigen::MatrixXd& X) const {
  if (X.cols() != linear.weights.cols()) {
    throw DimensionError("X has " + std::to_string(X.cols()) + " features, probe expects " +
                         std::to_string(linear.weights.cols()));
  }
  const Eigen::MatrixXd z = logits(X);
  Labels out(static_cast<std::size_t>(z.rows()));
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < z.cols(); ++c) {
      if (z(i, c) > z(i, best)) best = c;
    }
    out[static_cast<std::size_t>(i)] = static_cast<std::uint32_t>(best);
  }
  return out;
}

ProbeModel train_probe(const Eigen::MatrixXd& X, const Labels& y, std::size_t num_classes,
                       const TrainConfig& config, TrainTrace* trace) {
  config.validate();
  const auto n = static_cast<std::size_t>(X.rows());
  const auto d = static_cast<Eigen::Index>(X.cols());
  if (n != y.size()) throw DimensionError("X rows and label count differ");
  if (num_classes < 2) throw DegenerateInputError("a probe needs at least 2 classes");
  if (n < num_classes) {
    throw DegenerateInputError("need at least as many samples (" + std::to_string(n) + ") as classes (" +
                               std::to_string(num_classes) + ")");
  }
  std::vector<bool> seen(num_classes, false);
  for (const auto label : y) {
    if (label >= num_classes) throw DimensionError("label " + std::to_string(label) + " outside class range");
    seen[label] = true;
  }
  if (std::count(seen.begin(), seen.end(), true) < 2) {
    throw DegenerateInputError("training labels cover a single class");
  }

  ProbeModel model;
  model.seed = config.seed;
  model.linear.weights = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(num_classes), d);
  model.linear.bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(num_classes));

  Eigen::MatrixXd features;
  if (config.standardize) {
    model.standardizer = Standardizer::fit(X);
    features = model.standardizer->apply(X);
  } else {
    features = X;
  }

  Rng rng(config.seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t batch = std::min(config.batch_size, n);
  Eigen::MatrixXd xb;
  Labels yb;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t stop = std::min(start + batch, n);
      xb.resize(static_cast<Eigen::Index>(stop - start), d);
      yb.resize(stop - start);
      for (std::size_t k = start; k < stop; ++k) {
        xb.row(static_cast<Eigen::Index>(k - start)) = features.row(static_cast<Eigen::Index>(order[k]));
        yb[k - start] = y[order[k]];
      }
      const auto g = loss_gradient(model.linear, xb, yb, config.l2_penalty);
      model.linear.weights -= config.learning_rate * g.weights;
      model.linear.bias -= config.learning_rate * g.bias;
    }
    if (trace != nullptr) trace->epoch_loss.push_back(loss(model.linear, features, y, config.l2_penalty));
  }
  return model;
}

Evaluation evaluate(const ProbeModel& model, const Eigen::MatrixXd& X, const Labels& y, std::size_t num_classes) {
  if (static_cast<std::size_t>(X.rows()) != y.size()) throw DimensionError("X rows and label count differ");
  if (y.empty()) throw DimensionError("evaluate needs at least one sample");
  const Labels predicted = model.predict(X);
  std::vector<std::size_t> hits(num_classes, 0);
  std::vector<std::size_t> totals(num_classes, 0);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] >= num_classes) throw DimensionError("label " + std::to_string(y[i]) + " outside class range");
    ++totals[y[i]];
    if (predicted[i] == y[i]) {
      ++correct;
      ++hits[y[i]];
    }
  }
  Evaluation e;
  e.accuracy = static_cast<double>(correct) / static_cast<double>(y.size());
  e.per_class_accuracy.resize(num_classes, 0.0);
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (totals[c] > 0) e.per_class_accuracy[c] = static_cast<double>(hits[c]) / static_cast<double>(totals[c]);
  }
  return e;
}

ProbeMetrics repeat_train(const Eigen::MatrixXd& X_train, const Labels& y_train, const Eigen::MatrixXd& X_test,
                          const Labels& y_test, std::size_t num_classes, const TrainConfig& config) {
  config.validate();
  ProbeMetrics metrics;
  metrics.repeats = config.repeats;
  metrics.per_class_accuracy.assign(num_classes, 0.0);
  for (std::size_t r = 0; r < config.repeats; ++r) {
    TrainConfig run = config;
    run.seed = config.seed + r;
    const auto model = train_probe(X_train, y_train, num_classes, run);
    const auto e = evaluate(model, X_test, y_test, num_classes);
    metrics.run_accuracies.push_back(e.accuracy);
    for (std::size_t c = 0; c < num_classes; ++c) metrics.per_class_accuracy[c] += e.per_class_accuracy[c];
  }
  const double reps = static_cast<double>(config.repeats);
  for (auto& v : metrics.per_class_accuracy) v /= reps;
  const double mean = std::accumulate(metrics.run_accuracies.begin(), metrics.run_accuracies.end(), 0.0) / reps;
  double ss = 0.0;
  for (const double a : metrics.run_accuracies) ss += (a - mean) * (a - mean);
  metrics.mean_accuracy = mean;
  metrics.std_accuracy = std::sqrt(ss / reps);
  return metrics;
}

std::uint32_t peak_index(std::span<const double> values) {
  if (values.empty()) throw InsufficientDataError("peak of an empty curve");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return static_cast<std::uint32_t>(best);
}

LayerSweepReport layer_sweep(const EmbeddingArchive& train, const EmbeddingArchive& test,
                             const TrainConfig& config, const SweepOptions& options) {
  config.validate();
  const auto& ht = train.header;
  const auto& hs = test.header;
  if (ht.n_layers != hs.n_layers || ht.hidden_dim != hs.hidden_dim) {
    throw CompatibilityError("train archive is " + std::to_string(ht.n_layers) + " layers x " +
                             std::to_string(ht.hidden_dim) + " dims, test archive is " +
                             std::to_string(hs.n_layers) + " x " + std::to_string(hs.hidden_dim));
  }
  if (train.manifest.schedule != test.manifest.schedule) {
    throw CompatibilityError("train and test archives use different position schedules");
  }
  const std::size_t num_classes = train.manifest.schedule.num_classes();
  const std::uint32_t n_layers = ht.n_layers;

  LayerSweepReport report;
  report.metrics.resize(n_layers);
  report.schedule_positions = train.manifest.schedule.positions;

  std::atomic<std::uint32_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::uint32_t layer = next++; layer < n_layers; layer = next++) {
      try {
        const auto tr = slice_layer(train, layer);
        const auto te = slice_layer(test, layer);
        TrainConfig layer_config = config;
        layer_config.seed = derive_seed(config.seed, streams::kProbeLayer, layer);
        auto m = repeat_train(tr.features.cast<double>(), tr.labels, te.features.cast<double>(), te.labels,
                              num_classes, layer_config);
        m.layer = layer;
        report.metrics[layer] = std::move(m);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n_layers;
      }
    }
  };

  const std::size_t threads = std::clamp<std::size_t>(options.threads, 1, n_layers);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<double> means;
  for (const auto& m : report.metrics) means.push_back(m.mean_accuracy);
  report.peak_layer = peak_index(means);
  report.peak_accuracy = means[report.peak_layer];
  return report;
}

std::vector<PositionCurve> position_curves(const LayerSweepReport& report) {
  std::vector<PositionCurve> curves;
  if (report.metrics.empty()) return curves;
  const std::size_t num_classes = report.metrics.front().per_class_accuracy.size();
  for (std::size_t c = 0; c < num_classes; ++c) {
    PositionCurve curve;
    curve.gold_class = static_cast<std::uint32_t>(c);
    curve.gold_position = c < report.schedule_positions.size() ? report.schedule_positions[c] : 0;
    for (const auto& m : report.metrics) curve.per_layer_accuracy.push_back(m.per_class_accuracy.at(c));
    curve.peak_layer = peak_index(curve.per_layer_accuracy);
    curve.peak_accuracy = curve.per_layer_accuracy[curve.peak_layer];
    curves.push_back(std::move(curve));
  }
  return curves;
}

}  // namespace probelens
