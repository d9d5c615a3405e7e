#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "probelens/pca.hpp"
#include "probelens/probe.hpp"
#include "probelens/stats.hpp"
#include "probelens/tensor_store.hpp"

namespace probelens {

// ---------------------------------------------------------------------------
// Generation accuracy and the probe/generation gap

/// KV: the normalised output must contain the full value as a whole token.
/// MDQA: some normalised alias must be a substring of the normalised output.
bool is_generation_correct(const GenerationRecord& record, Task task);

struct PositionAccuracy {
  std::uint32_t gold_class = 0;
  std::uint32_t gold_position = 0;
  std::size_t total = 0;
  std::size_t correct = 0;
  double accuracy = 0.0;
};

/// One entry per schedule position, in schedule order. Throws
/// ConsistencyError when a generation has no manifest entry or the manifest
/// carries no generations.
std::vector<PositionAccuracy> generation_accuracy(const Manifest& manifest);

struct GapEntry {
  std::uint32_t gold_position = 0;
  double generation_accuracy = 0.0;
  double peak_probe_accuracy = 0.0;
  std::uint32_t peak_layer = 0;
  double gap = 0.0;  // peak - generation
};

struct GapReport {
  std::vector<GapEntry> per_position;
  double mean_gap = 0.0;
};

/// Positionwise peak probing accuracy minus generation accuracy. Inputs must
/// list the same positions in the same order (CompatibilityError otherwise).
GapReport ktdt_gap(const std::vector<PositionCurve>& probe_curves, const std::vector<PositionAccuracy>& generation);

// ---------------------------------------------------------------------------
// Peak layer vs generation accuracy

struct PeakPoint {
  double peak_layer = 0.0;
  double peak_probe_accuracy = 0.0;
  double generation_accuracy = 0.0;
};

struct RegressionResult {
  double slope = 0.0;
  double intercept = 0.0;
  double t_statistic = 0.0;
  double p_value = 1.0;     // floored at stats::kPValueFloor
  bool p_floored = false;   // true means "p < 1e-12"
  std::size_t dof = 0;
  double threshold = 0.6;
  std::vector<PeakPoint> points;  // survivors of the accuracy filter
};

/// Keeps points whose peak probing accuracy exceeds `min_probe_accuracy`,
/// then regresses generation accuracy on peak layer with a two-sided t-test.
/// Throws InsufficientDataError when fewer than 3 points survive.
RegressionResult peak_layer_regression(const std::vector<PeakPoint>& points, double min_probe_accuracy = 0.6);

/// Peak points for every schedule position of one experiment.
std::vector<PeakPoint> peak_points(const GapReport& gap);

// ---------------------------------------------------------------------------
// PCA distance curves

enum class Representative { kSinglePromptPerPosition, kClassMean };
enum class DistanceSpace { kProjected, kAmbient };

struct DistanceOptions {
  Representative representative = Representative::kSinglePromptPerPosition;
  DistanceSpace space = DistanceSpace::kProjected;
  std::size_t components = 2;
  // Single-prompt mode averages over this many prompt sets (the r-th prompt
  // of every class forms set r). Ignored for class means.
  std::size_t repetitions = 1;
};

struct DistanceCurve {
  std::vector<double> per_layer;
};

/// Per layer: one point per gold class (ordered by class), PCA to
/// `components` dimensions, then adjacent_distance. Throws CoverageError
/// when a class has too few prompts.
DistanceCurve distance_curve(const EmbeddingArchive& archive, const DistanceOptions& options = {});

/// Representative points at one layer, one row per class.
Eigen::MatrixXd class_points(const EmbeddingArchive& archive, std::uint32_t layer, Representative representative,
                             std::size_t repetition = 0);

// ---------------------------------------------------------------------------
// Logit lens

struct LensOptions {
  bool apply_norm = true;   // used only when a norm scale is supplied
  double norm_epsilon = 1e-5;
};

/// RMS-normalises x (x / sqrt(mean(x^2) + eps) * scale).
Eigen::VectorXd rms_normalize(const Eigen::VectorXd& x, const Eigen::VectorXd& scale, double epsilon);

/// Full next-token distribution softmax(lm_head * x_hat).
Eigen::VectorXd logit_lens_distribution(const Eigen::VectorXd& x, const WeightMatrix& lm_head,
                                        const WeightMatrix* norm_scale, const LensOptions& options = {});

/// Probability of `target_row` under the lens distribution.
double logit_lens(const Eigen::VectorXd& x, const WeightMatrix& lm_head, const WeightMatrix* norm_scale,
                  std::uint32_t target_row, const LensOptions& options = {});

struct LogitLensCurve {
  // [layer][class] mean probability over the prompts of that class; classes
  // without prompts hold NaN.
  std::vector<std::vector<double>> per_layer_per_position;
  std::vector<std::uint32_t> positions;
  bool norm_applied = false;
};

/// Targets come from manifest.first_answer_token_rows unless overridden.
LogitLensCurve logit_lens_curve(const EmbeddingArchive& archive, const WeightMatrix& lm_head,
                                const WeightMatrix* norm_scale, const LensOptions& options = {},
                                const std::vector<std::uint32_t>* target_rows = nullptr);

/// Pairwise summation, stable under reordering to within rounding.
double pairwise_sum(std::span<const double> values);

}  // namespace probelens
