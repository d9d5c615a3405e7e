#include "probelens/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <unordered_map>

#include "probelens/error.hpp"
#include "probelens/text.hpp"

namespace probelens {

bool is_generation_correct(const GenerationRecord& record, Task task) {
  if (task == Task::kKv) return contains_normalized_token(record.output_text, record.answer);
  if (contains_normalized(record.output_text, record.answer)) return true;
  return std::any_of(record.answer_aliases.begin(), record.answer_aliases.end(),
                     [&](const std::string& alias) { return contains_normalized(record.output_text, alias); });
}

std::vector<PositionAccuracy> generation_accuracy(const Manifest& manifest) {
  if (!manifest.generations) throw ConsistencyError("manifest carries no generation records");
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < manifest.prompt_ids.size(); ++i) index.emplace(manifest.prompt_ids[i], i);

  const auto& positions = manifest.schedule.positions;
  std::vector<PositionAccuracy> out(positions.size());
  for (std::size_t c = 0; c < positions.size(); ++c) {
    out[c].gold_class = static_cast<std::uint32_t>(c);
    out[c].gold_position = positions[c];
  }
  for (const auto& g : *manifest.generations) {
    const auto it = index.find(g.prompt_id);
    if (it == index.end()) throw ConsistencyError("generation for unknown prompt id '" + g.prompt_id + "'");
    const std::uint32_t cls = manifest.gold_classes.at(it->second);
    if (cls >= out.size()) throw ConsistencyError("prompt '" + g.prompt_id + "' has out-of-range gold class");
    ++out[cls].total;
    if (is_generation_correct(g, manifest.task)) ++out[cls].correct;
  }
  for (auto& p : out) {
    p.accuracy = p.total == 0 ? 0.0 : static_cast<double>(p.correct) / static_cast<double>(p.total);
  }
  return out;
}

GapReport ktdt_gap(const std::vector<PositionCurve>& probe_curves, const std::vector<PositionAccuracy>& generation) {
  if (probe_curves.size() != generation.size()) {
    throw CompatibilityError("probe curves cover " + std::to_string(probe_curves.size()) +
                             " positions, generation accuracy covers " + std::to_string(generation.size()));
  }
  GapReport report;
  double total = 0.0;
  for (std::size_t i = 0; i < probe_curves.size(); ++i) {
    if (probe_curves[i].gold_position != generation[i].gold_position) {
      throw CompatibilityError("position schedules differ at entry " + std::to_string(i));
    }
    GapEntry e;
    e.gold_position = generation[i].gold_position;
    e.generation_accuracy = generation[i].accuracy;
    e.peak_probe_accuracy = probe_curves[i].peak_accuracy;
    e.peak_layer = probe_curves[i].peak_layer;
    e.gap = e.peak_probe_accuracy - e.generation_accuracy;
    total += e.gap;
    report.per_position.push_back(e);
  }
  report.mean_gap = report.per_position.empty() ? 0.0 : total / static_cast<double>(report.per_position.size());
  return report;
}

std::vector<PeakPoint> peak_points(const GapReport& gap) {
  std::vector<PeakPoint> points;
  for (const auto& e : gap.per_position) {
    points.push_back({static_cast<double>(e.peak_layer), e.peak_probe_accuracy, e.generation_accuracy});
  }
  return points;
}

RegressionResult peak_layer_regression(const std::vector<PeakPoint>& points, double min_probe_accuracy) {
  RegressionResult result;
  result.threshold = min_probe_accuracy;
  for (const auto& p : points) {
    if (p.peak_probe_accuracy > min_probe_accuracy) result.points.push_back(p);
  }
  if (result.points.size() < 3) {
    char threshold[32];
    std::snprintf(threshold, sizeof(threshold), "%g", min_probe_accuracy);
    throw InsufficientDataError("insufficient data after " + std::string(threshold) + " filter: " +
                                std::to_string(result.points.size()) + " point(s) remain, need 3");
  }
  std::vector<double> x;
  std::vector<double> y;
  for (const auto& p : result.points) {
    x.push_back(p.peak_layer);
    y.push_back(p.generation_accuracy);
  }
  const auto fit = stats::ols(x, y);
  result.slope = fit.slope;
  result.intercept = fit.intercept;
  result.t_statistic = fit.t_statistic;
  result.dof = fit.dof;
  result.p_floored = fit.p_value < stats::kPValueFloor;
  result.p_value = result.p_floored ? stats::kPValueFloor : fit.p_value;
  return result;
}

namespace {

std::vector<std::vector<std::size_t>> prompts_by_class(const EmbeddingArchive& archive) {
  const std::size_t n_classes = archive.manifest.schedule.num_classes();
  std::vector<std::vector<std::size_t>> groups(n_classes);
  for (std::size_t p = 0; p < archive.manifest.gold_classes.size(); ++p) {
    groups.at(archive.manifest.gold_classes[p]).push_back(p);
  }
  return groups;
}

}  // namespace

Eigen::MatrixXd class_points(const EmbeddingArchive& archive, std::uint32_t layer, Representative representative,
                             std::size_t repetition) {
  if (layer >= archive.header.n_layers) throw RangeError("layer " + std::to_string(layer) + " out of range");
  const auto groups = prompts_by_class(archive);
  if (groups.size() < 2) throw CoverageError("distance curves need at least 2 gold classes");
  const auto d = static_cast<Eigen::Index>(archive.header.hidden_dim);
  Eigen::MatrixXd points(static_cast<Eigen::Index>(groups.size()), d);
  for (std::size_t c = 0; c < groups.size(); ++c) {
    const auto& members = groups[c];
    const std::size_t needed = representative == Representative::kClassMean ? 1 : repetition + 1;
    if (members.size() < needed) {
      throw CoverageError("gold class " + std::to_string(c) + " has " + std::to_string(members.size()) +
                          " prompt(s), need " + std::to_string(needed));
    }
    auto row = points.row(static_cast<Eigen::Index>(c));
    if (representative == Representative::kClassMean) {
      row.setZero();
      for (const auto p : members) {
        row += Eigen::Map<const Eigen::RowVectorXf>(archive.embedding(p, layer), d).cast<double>();
      }
      row /= static_cast<double>(members.size());
    } else {
      row = Eigen::Map<const Eigen::RowVectorXf>(archive.embedding(members[repetition], layer), d).cast<double>();
    }
  }
  return points;
}

DistanceCurve distance_curve(const EmbeddingArchive& archive, const DistanceOptions& options) {
  if (options.components < 1) throw ConfigError("PCA components must be >= 1");
  const std::size_t reps =
      options.representative == Representative::kClassMean ? 1 : std::max<std::size_t>(options.repetitions, 1);
  DistanceCurve curve;
  for (std::uint32_t layer = 0; layer < archive.header.n_layers; ++layer) {
    std::vector<double> values;
    for (std::size_t r = 0; r < reps; ++r) {
      const Eigen::MatrixXd points = class_points(archive, layer, options.representative, r);
      if (options.space == DistanceSpace::kAmbient) {
        values.push_back(adjacent_distance(points));
        continue;
      }
      const std::size_t k = std::min<std::size_t>(
          {options.components, static_cast<std::size_t>(points.rows()) - 1, static_cast<std::size_t>(points.cols())});
      const auto model = pca_fit(points, k);
      values.push_back(adjacent_distance(pca_project(model, points)));
    }
    curve.per_layer.push_back(pairwise_sum(values) / static_cast<double>(values.size()));
  }
  return curve;
}

Eigen::VectorXd rms_normalize(const Eigen::VectorXd& x, const Eigen::VectorXd& scale, double epsilon) {
  if (scale.size() != x.size()) throw DimensionError("norm scale length differs from hidden size");
  const double rms = std::sqrt(x.squaredNorm() / static_cast<double>(x.size()) + epsilon);
  return (x.array() / rms * scale.array()).matrix();
}

Eigen::VectorXd logit_lens_distribution(const Eigen::VectorXd& x, const WeightMatrix& lm_head,
                                        const WeightMatrix* norm_scale, const LensOptions& options) {
  const auto d = static_cast<Eigen::Index>(lm_head.cols);
  if (x.size() != d) {
    throw DimensionError("embedding has " + std::to_string(x.size()) + " dims, LM head expects " +
                         std::to_string(lm_head.cols));
  }
  Eigen::VectorXd xh = x;
  if (norm_scale != nullptr && options.apply_norm) {
    if (norm_scale->rows != 1 || norm_scale->cols != lm_head.cols) {
      throw DimensionError("final norm scale must be 1 x " + std::to_string(lm_head.cols));
    }
    const Eigen::VectorXd scale = Eigen::Map<const Eigen::VectorXf>(norm_scale->data.data(), d).cast<double>();
    xh = rms_normalize(x, scale, options.norm_epsilon);
  }
  Eigen::VectorXd logits(static_cast<Eigen::Index>(lm_head.rows));
  for (std::uint32_t v = 0; v < lm_head.rows; ++v) {
    const float* row = lm_head.data.data() + static_cast<std::size_t>(v) * lm_head.cols;
    double acc = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) acc += static_cast<double>(row[j]) * xh[j];
    logits[v] = acc;
  }
  return softmax(logits);
}

double logit_lens(const Eigen::VectorXd& x, const WeightMatrix& lm_head, const WeightMatrix* norm_scale,
                  std::uint32_t target_row, const LensOptions& options) {
  if (target_row >= lm_head.rows) {
    throw DimensionError("target row " + std::to_string(target_row) + " outside vocabulary of " +
                         std::to_string(lm_head.rows));
  }
  return logit_lens_distribution(x, lm_head, norm_scale, options)[target_row];
}

LogitLensCurve logit_lens_curve(const EmbeddingArchive& archive, const WeightMatrix& lm_head,
                                const WeightMatrix* norm_scale, const LensOptions& options,
                                const std::vector<std::uint32_t>* target_rows) {
  const std::vector<std::uint32_t>* rows = target_rows;
  if (rows == nullptr && archive.manifest.first_answer_token_rows) rows = &*archive.manifest.first_answer_token_rows;
  if (rows == nullptr) throw ConsistencyError("no first-answer-token rows in the manifest");
  if (rows->size() != archive.header.n_prompts) {
    throw ConsistencyError("have " + std::to_string(rows->size()) + " target rows for " +
                           std::to_string(archive.header.n_prompts) + " prompts");
  }
  if (lm_head.cols != archive.header.hidden_dim) {
    throw DimensionError("LM head has " + std::to_string(lm_head.cols) + " columns, archive hidden_dim is " +
                         std::to_string(archive.header.hidden_dim));
  }

  LogitLensCurve curve;
  curve.positions = archive.manifest.schedule.positions;
  curve.norm_applied = norm_scale != nullptr && options.apply_norm;
  const auto groups = prompts_by_class(archive);
  const auto d = static_cast<Eigen::Index>(archive.header.hidden_dim);
  for (std::uint32_t layer = 0; layer < archive.header.n_layers; ++layer) {
    std::vector<double> row(groups.size(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t c = 0; c < groups.size(); ++c) {
      if (groups[c].empty()) continue;
      std::vector<double> probs;
      probs.reserve(groups[c].size());
      for (const auto p : groups[c]) {
        const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXf>(archive.embedding(p, layer), d).cast<double>();
        probs.push_back(logit_lens(x, lm_head, norm_scale, (*rows)[p], options));
      }
      row[c] = pairwise_sum(probs) / static_cast<double>(probs.size());
    }
    curve.per_layer_per_position.push_back(std::move(row));
  }
  return curve;
}

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (const double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

}  // namespace probelens
