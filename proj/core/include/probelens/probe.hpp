#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "probelens/tensor_store.hpp"

namespace probelens {

using Labels = std::vector<std::uint32_t>;

/// Softmax with max-subtraction; the result sums to 1 for any finite input.
Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

/// Multinomial logistic regression parameters: weights is C x d, bias is C.
struct LinearModel {
  Eigen::MatrixXd weights;
  Eigen::VectorXd bias;

  std::size_t num_classes() const { return static_cast<std::size_t>(weights.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(weights.cols()); }
};

/// Mean negative log-likelihood of the labels under softmax(W x + b), plus
/// (l2_penalty / 2) * ||W||^2.
double loss(const LinearModel& model, const Eigen::MatrixXd& X, const Labels& y, double l2_penalty = 0.0);

struct LossGradient {
  Eigen::MatrixXd weights;  // C x d
  Eigen::VectorXd bias;     // C
};

/// dW = (P - Y)^T X / N + l2 * W, db = colsum(P - Y) / N.
LossGradient loss_gradient(const LinearModel& model, const Eigen::MatrixXd& X, const Labels& y,
                           double l2_penalty = 0.0);

struct TrainConfig {
  double learning_rate = 0.05;
  std::size_t epochs = 50;
  std::size_t batch_size = 256;
  double l2_penalty = 1e-4;
  bool standardize = true;
  std::uint64_t seed = 0;
  std::size_t repeats = 10;

  /// Throws ConfigError for out-of-range fields.
  void validate() const;
};

/// Per-feature affine map fitted on the training split only.
struct Standardizer {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;  // zero-variance features get scale 1

  static Standardizer fit(const Eigen::MatrixXd& X);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& X) const;
};

struct ProbeModel {
  LinearModel linear;
  std::optional<Standardizer> standardizer;
  std::uint32_t layer = 0;
  std::uint64_t seed = 0;

  Eigen::MatrixXd logits(const Eigen::MatrixXd& X) const;
  /// Argmax class per row; ties go to the smaller class index.
  Labels predict(const Eigen::MatrixXd& X) const;
};

/// Optional per-epoch record of the full training objective.
struct TrainTrace {
  std::vector<double> epoch_loss;
};

/// Zero-initialised mini-batch gradient descent; the batch order is
/// reshuffled every epoch from config.seed. Deterministic given inputs.
ProbeModel train_probe(const Eigen::MatrixXd& X, const Labels& y, std::size_t num_classes,
                       const TrainConfig& config, TrainTrace* trace = nullptr);

struct Evaluation {
  double accuracy = 0.0;
  std::vector<double> per_class_accuracy;  // 0 for classes absent from the test set
};

Evaluation evaluate(const ProbeModel& model, const Eigen::MatrixXd& X, const Labels& y,
                    std::size_t num_classes);

struct ProbeMetrics {
  std::uint32_t layer = 0;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;  // population std over repeats
  std::vector<double> per_class_accuracy;  // mean over repeats
  std::vector<double> run_accuracies;
  std::size_t repeats = 0;
};

/// Trains `config.repeats` probes with seeds seed, seed+1, ... and reports
/// test accuracy statistics.
ProbeMetrics repeat_train(const Eigen::MatrixXd& X_train, const Labels& y_train, const Eigen::MatrixXd& X_test,
                          const Labels& y_test, std::size_t num_classes, const TrainConfig& config);

struct LayerSweepReport {
  std::vector<ProbeMetrics> metrics;  // one per layer
  std::uint32_t peak_layer = 0;
  double peak_accuracy = 0.0;
  std::vector<std::uint32_t> schedule_positions;
};

/// Smallest index attaining the maximum; throws InsufficientDataError on empty input.
std::uint32_t peak_index(std::span<const double> values);

struct SweepOptions {
  std::size_t threads = 1;
};

/// Repeats training on every layer. Layer l uses derive_seed(config.seed,
/// kProbeLayer, l) as its base seed, so results do not depend on threads.
LayerSweepReport layer_sweep(const EmbeddingArchive& train, const EmbeddingArchive& test,
                             const TrainConfig& config, const SweepOptions& options = {});

/// Per gold position (class): accuracy curve across layers and its peak.
struct PositionCurve {
  std::uint32_t gold_class = 0;
  std::uint32_t gold_position = 0;
  std::vector<double> per_layer_accuracy;
  std::uint32_t peak_layer = 0;
  double peak_accuracy = 0.0;
};

std::vector<PositionCurve> position_curves(const LayerSweepReport& report);

}  // namespace probelens
