#include "probelens/report_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>

#include "json.hpp"
#include "probelens/error.hpp"

namespace probelens {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

// NaN and infinities have no JSON spelling; they become null.
ordered_json number_or_null(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

const char* representative_name(Representative r) {
  return r == Representative::kClassMean ? "class_mean" : "single_prompt_per_position";
}

}  // namespace

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", value);
  return buf;
}

std::string sweep_to_json(const LayerSweepReport& report, const TrainConfig& config) {
  ordered_json j;
  j["peak_layer"] = report.peak_layer;
  j["peak_accuracy"] = report.peak_accuracy;
  j["schedule_positions"] = report.schedule_positions;
  j["train_config"] = {{"learning_rate", config.learning_rate}, {"epochs", config.epochs},
                       {"batch_size", config.batch_size},       {"l2_penalty", config.l2_penalty},
                       {"standardize", config.standardize},     {"seed", config.seed},
                       {"repeats", config.repeats}};
  ordered_json layers = ordered_json::array();
  for (const auto& m : report.metrics) {
    layers.push_back({{"layer", m.layer},
                      {"mean_accuracy", m.mean_accuracy},
                      {"std_accuracy", m.std_accuracy},
                      {"repeats", m.repeats},
                      {"run_accuracies", m.run_accuracies},
                      {"per_class_accuracy", m.per_class_accuracy}});
  }
  j["layers"] = std::move(layers);
  return dump(j);
}

std::string sweep_to_csv(const LayerSweepReport& report) {
  std::string out = "layer,mean_acc,std_acc";
  for (const auto p : report.schedule_positions) out += ",acc_pos" + std::to_string(p);
  out += "\n";
  for (const auto& m : report.metrics) {
    out += std::to_string(m.layer) + "," + format_number(m.mean_accuracy) + "," + format_number(m.std_accuracy);
    for (const double a : m.per_class_accuracy) out += "," + format_number(a);
    out += "\n";
  }
  return out;
}

LayerSweepReport sweep_from_json(const std::string& text) {
  try {
    const auto j = json::parse(text);
    LayerSweepReport r;
    r.peak_layer = j.at("peak_layer").get<std::uint32_t>();
    r.peak_accuracy = j.at("peak_accuracy").get<double>();
    r.schedule_positions = j.at("schedule_positions").get<std::vector<std::uint32_t>>();
    for (const auto& l : j.at("layers")) {
      ProbeMetrics m;
      m.layer = l.at("layer").get<std::uint32_t>();
      m.mean_accuracy = l.at("mean_accuracy").get<double>();
      m.std_accuracy = l.at("std_accuracy").get<double>();
      m.repeats = l.value("repeats", std::size_t{0});
      m.run_accuracies = l.value("run_accuracies", std::vector<double>{});
      m.per_class_accuracy = l.at("per_class_accuracy").get<std::vector<double>>();
      r.metrics.push_back(std::move(m));
    }
    return r;
  } catch (const json::exception& e) {
    throw FormatError(std::string("layer sweep report: ") + e.what());
  }
}

std::string gap_to_json(const GapReport& report) {
  ordered_json j;
  j["mean_gap"] = report.mean_gap;
  ordered_json rows = ordered_json::array();
  for (const auto& e : report.per_position) {
    rows.push_back({{"gold_position", e.gold_position},
                    {"generation_accuracy", e.generation_accuracy},
                    {"peak_probe_accuracy", e.peak_probe_accuracy},
                    {"peak_layer", e.peak_layer},
                    {"gap", e.gap}});
  }
  j["per_position"] = std::move(rows);
  return dump(j);
}

std::string gap_to_csv(const GapReport& report) {
  std::string out = "gold_position,generation_accuracy,peak_probe_accuracy,peak_layer,gap\n";
  for (const auto& e : report.per_position) {
    out += std::to_string(e.gold_position) + "," + format_number(e.generation_accuracy) + "," +
           format_number(e.peak_probe_accuracy) + "," + std::to_string(e.peak_layer) + "," + format_number(e.gap) +
           "\n";
  }
  return out;
}

GapReport gap_from_json(const std::string& text) {
  try {
    const auto j = json::parse(text);
    GapReport r;
    r.mean_gap = j.at("mean_gap").get<double>();
    for (const auto& e : j.at("per_position")) {
      GapEntry g;
      g.gold_position = e.at("gold_position").get<std::uint32_t>();
      g.generation_accuracy = e.at("generation_accuracy").get<double>();
      g.peak_probe_accuracy = e.at("peak_probe_accuracy").get<double>();
      g.peak_layer = e.at("peak_layer").get<std::uint32_t>();
      g.gap = e.at("gap").get<double>();
      r.per_position.push_back(g);
    }
    return r;
  } catch (const json::exception& e) {
    throw FormatError(std::string("gap report: ") + e.what());
  }
}

std::string regression_to_json(const RegressionResult& result) {
  ordered_json j;
  j["slope"] = result.slope;
  j["intercept"] = result.intercept;
  j["t_statistic"] = number_or_null(result.t_statistic);
  j["p_value"] = result.p_value;
  j["p_value_text"] = result.p_floored ? "< 1e-12" : format_number(result.p_value);
  j["dof"] = result.dof;
  j["min_probe_accuracy"] = result.threshold;
  ordered_json pts = ordered_json::array();
  for (const auto& p : result.points) {
    pts.push_back({{"peak_layer", p.peak_layer},
                   {"peak_probe_accuracy", p.peak_probe_accuracy},
                   {"generation_accuracy", p.generation_accuracy}});
  }
  j["points"] = std::move(pts);
  return dump(j);
}

std::string regression_to_csv(const RegressionResult& result) {
  std::string out = "peak_layer,peak_probe_accuracy,generation_accuracy\n";
  for (const auto& p : result.points) {
    out += format_number(p.peak_layer) + "," + format_number(p.peak_probe_accuracy) + "," +
           format_number(p.generation_accuracy) + "\n";
  }
  return out;
}

std::string distance_to_json(const DistanceCurve& curve, const DistanceOptions& options) {
  ordered_json j;
  j["representative"] = representative_name(options.representative);
  j["space"] = options.space == DistanceSpace::kAmbient ? "ambient" : "pca";
  j["components"] = options.components;
  j["repetitions"] = options.repetitions;
  j["per_layer"] = curve.per_layer;
  return dump(j);
}

std::string distance_to_csv(const DistanceCurve& curve) {
  std::string out = "layer,average_distance\n";
  for (std::size_t l = 0; l < curve.per_layer.size(); ++l) {
    out += std::to_string(l) + "," + format_number(curve.per_layer[l]) + "\n";
  }
  return out;
}

std::string lens_to_json(const LogitLensCurve& curve, const LensOptions& options) {
  ordered_json j;
  j["quantity"] = "probability of the first answer token";
  j["norm_applied"] = curve.norm_applied;
  j["norm_epsilon"] = options.norm_epsilon;
  j["positions"] = curve.positions;
  ordered_json rows = ordered_json::array();
  for (const auto& row : curve.per_layer_per_position) {
    ordered_json r = ordered_json::array();
    for (const double v : row) r.push_back(number_or_null(v));
    rows.push_back(std::move(r));
  }
  j["per_layer_per_position"] = std::move(rows);
  return dump(j);
}

std::string lens_to_csv(const LogitLensCurve& curve) {
  std::string out = "layer";
  for (const auto p : curve.positions) out += ",prob_pos" + std::to_string(p);
  out += "\n";
  for (std::size_t l = 0; l < curve.per_layer_per_position.size(); ++l) {
    out += std::to_string(l);
    for (const double v : curve.per_layer_per_position[l]) out += "," + format_number(v);
    out += "\n";
  }
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace probelens
