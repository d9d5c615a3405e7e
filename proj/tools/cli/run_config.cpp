#include "cli/run_config.hpp"

#include <set>

#include "json.hpp"
#include "probelens/error.hpp"
#include "probelens/report_io.hpp"

namespace probelens::cli {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw ConfigError("unknown config key '" + where + key + "'");
  }
}

template <typename T>
void read_if(const json& j, const char* key, T& dst) {
  if (j.contains(key)) dst = j.at(key).get<T>();
}

template <typename T>
void read_if(const json& j, const char* key, std::optional<T>& dst) {
  if (j.contains(key) && !j.at(key).is_null()) dst = j.at(key).get<T>();
}

void read_path(const json& j, const char* key, std::optional<std::filesystem::path>& dst) {
  if (j.contains(key) && !j.at(key).is_null()) dst = j.at(key).get<std::string>();
}

std::string_view layout_name(ClassLayout layout) {
  return layout == ClassLayout::kLine ? "line" : "orthogonal";
}

ordered_json path_or_null(const std::optional<std::filesystem::path>& p) {
  if (!p) return nullptr;
  return p->generic_string();
}

}  // namespace

Representative parse_representative(const std::string& text) {
  if (text == "single_prompt_per_position" || text == "single") return Representative::kSinglePromptPerPosition;
  if (text == "class_mean" || text == "mean") return Representative::kClassMean;
  throw ConfigError("unknown representative mode '" + text + "' (single_prompt_per_position | class_mean)");
}

DistanceSpace parse_distance_space(const std::string& text) {
  if (text == "pca" || text == "projected") return DistanceSpace::kProjected;
  if (text == "ambient") return DistanceSpace::kAmbient;
  throw ConfigError("unknown distance space '" + text + "' (pca | ambient)");
}

void apply_json(RunConfig& c, const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  try {
    reject_unknown(j,
                   {"task", "n_items", "iterations", "seed", "test_fraction", "max_document_chars", "threads",
                    "probe", "analysis", "synth", "paths"},
                   "");
    if (j.contains("task")) c.task = parse_task(j["task"].get<std::string>());
    read_if(j, "n_items", c.n_items);
    read_if(j, "iterations", c.iterations);
    read_if(j, "seed", c.seed);
    read_if(j, "test_fraction", c.test_fraction);
    read_if(j, "max_document_chars", c.max_document_chars);
    read_if(j, "threads", c.threads);

    if (j.contains("probe")) {
      const auto& p = j["probe"];
      reject_unknown(p, {"learning_rate", "epochs", "batch_size", "l2_penalty", "standardize", "seed", "repeats"},
                     "probe.");
      read_if(p, "learning_rate", c.probe.learning_rate);
      read_if(p, "epochs", c.probe.epochs);
      read_if(p, "batch_size", c.probe.batch_size);
      read_if(p, "l2_penalty", c.probe.l2_penalty);
      read_if(p, "standardize", c.probe.standardize);
      read_if(p, "seed", c.probe.seed);
      read_if(p, "repeats", c.probe.repeats);
    }
    if (j.contains("analysis")) {
      const auto& a = j["analysis"];
      reject_unknown(a,
                     {"min_probe_accuracy", "representative", "distance_space", "components", "repetitions",
                      "norm_mode", "norm_epsilon"},
                     "analysis.");
      read_if(a, "min_probe_accuracy", c.analysis.min_probe_accuracy);
      if (a.contains("representative")) {
        c.analysis.distance.representative = parse_representative(a["representative"].get<std::string>());
      }
      if (a.contains("distance_space")) {
        c.analysis.distance.space = parse_distance_space(a["distance_space"].get<std::string>());
      }
      read_if(a, "components", c.analysis.distance.components);
      read_if(a, "repetitions", c.analysis.distance.repetitions);
      if (a.contains("norm_mode")) {
        const auto mode = a["norm_mode"].get<std::string>();
        if (mode != "apply" && mode != "skip") throw ConfigError("norm_mode must be 'apply' or 'skip'");
        c.analysis.lens.apply_norm = mode == "apply";
      }
      read_if(a, "norm_epsilon", c.analysis.lens.norm_epsilon);
    }
    if (j.contains("synth")) {
      const auto& s = j["synth"];
      reject_unknown(s,
                     {"kind", "n_layers", "hidden_dim", "n_classes", "signal_layer", "decay_start", "noise_sigma",
                      "separation", "n_prompts_per_class", "seed", "layout"},
                     "synth.");
      auto& p = c.synth.plant;
      read_if(s, "kind", c.synth.kind);
      read_if(s, "n_layers", p.n_layers);
      read_if(s, "hidden_dim", p.hidden_dim);
      read_if(s, "n_classes", p.n_classes);
      read_if(s, "signal_layer", p.signal_layer);
      read_if(s, "decay_start", p.decay_start);
      read_if(s, "noise_sigma", p.noise_sigma);
      read_if(s, "separation", p.separation);
      read_if(s, "n_prompts_per_class", p.n_prompts_per_class);
      read_if(s, "seed", p.seed);
      if (s.contains("layout")) {
        const auto layout = s["layout"].get<std::string>();
        if (layout == "orthogonal") p.layout = ClassLayout::kOrthogonal;
        else if (layout == "line") p.layout = ClassLayout::kLine;
        else throw ConfigError("synth.layout must be 'orthogonal' or 'line'");
      }
    }
    if (j.contains("paths")) {
      const auto& p = j["paths"];
      reject_unknown(p,
                     {"out", "pool", "train_archive", "test_archive", "archive", "sweep", "lm_head", "norm_scale",
                      "gap_reports"},
                     "paths.");
      if (p.contains("out")) c.paths.out = p["out"].get<std::string>();
      read_path(p, "pool", c.paths.pool);
      read_path(p, "train_archive", c.paths.train_archive);
      read_path(p, "test_archive", c.paths.test_archive);
      read_path(p, "archive", c.paths.archive);
      read_path(p, "sweep", c.paths.sweep);
      read_path(p, "lm_head", c.paths.lm_head);
      read_path(p, "norm_scale", c.paths.norm_scale);
      if (p.contains("gap_reports")) {
        c.paths.gap_reports.clear();
        for (const auto& g : p["gap_reports"]) c.paths.gap_reports.emplace_back(g.get<std::string>());
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field has the wrong type: ") + e.what());
  }
}

RunConfig load_run_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("config file not found: " + path.string());
  RunConfig c;
  apply_json(c, read_text_file(path));
  return c;
}

void RunConfig::validate() const {
  if (n_items < 1) throw ConfigError("n_items must be >= 1");
  if (iterations < 1) throw ConfigError("iterations must be >= 1");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("test_fraction must lie in (0, 1)");
  if (max_document_chars < 1) throw ConfigError("max_document_chars must be >= 1");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  probe.validate();
  if (!(analysis.min_probe_accuracy >= 0.0 && analysis.min_probe_accuracy <= 1.0)) {
    throw ConfigError("min_probe_accuracy must lie in [0, 1]");
  }
  if (analysis.distance.components < 1) throw ConfigError("components must be >= 1");
  if (analysis.distance.repetitions < 1) throw ConfigError("repetitions must be >= 1");
  if (!(analysis.lens.norm_epsilon >= 0.0)) throw ConfigError("norm_epsilon must be >= 0");
  if (synth.kind != "planted" && synth.kind != "chance") throw ConfigError("synth kind must be planted or chance");
}

std::string resolved_json(const RunConfig& c) {
  ordered_json j;
  j["task"] = to_string(c.task);
  j["n_items"] = c.n_items;
  j["iterations"] = c.iterations;
  j["seed"] = c.seed;
  j["test_fraction"] = c.test_fraction;
  j["max_document_chars"] = c.max_document_chars;
  j["threads"] = c.threads;
  j["probe"] = {{"learning_rate", c.probe.learning_rate}, {"epochs", c.probe.epochs},
                {"batch_size", c.probe.batch_size},       {"l2_penalty", c.probe.l2_penalty},
                {"standardize", c.probe.standardize},     {"seed", c.probe.seed},
                {"repeats", c.probe.repeats}};
  j["analysis"] = {
      {"min_probe_accuracy", c.analysis.min_probe_accuracy},
      {"representative", c.analysis.distance.representative == Representative::kClassMean
                             ? "class_mean"
                             : "single_prompt_per_position"},
      {"distance_space", c.analysis.distance.space == DistanceSpace::kAmbient ? "ambient" : "pca"},
      {"components", c.analysis.distance.components},
      {"repetitions", c.analysis.distance.repetitions},
      {"norm_mode", c.analysis.lens.apply_norm ? "apply" : "skip"},
      {"norm_epsilon", c.analysis.lens.norm_epsilon}};
  const auto& p = c.synth.plant;
  j["synth"] = {{"kind", c.synth.kind},
                {"n_layers", p.n_layers},
                {"hidden_dim", p.hidden_dim},
                {"n_classes", p.n_classes},
                {"signal_layer", p.signal_layer},
                {"decay_start", p.decay_start ? ordered_json(*p.decay_start) : ordered_json(nullptr)},
                {"noise_sigma", p.noise_sigma},
                {"separation", p.separation},
                {"n_prompts_per_class", p.n_prompts_per_class},
                {"seed", p.seed},
                {"layout", layout_name(p.layout)}};
  ordered_json gaps = ordered_json::array();
  for (const auto& g : c.paths.gap_reports) gaps.push_back(g.generic_string());
  j["paths"] = {{"out", c.paths.out.generic_string()},
                {"pool", path_or_null(c.paths.pool)},
                {"train_archive", path_or_null(c.paths.train_archive)},
                {"test_archive", path_or_null(c.paths.test_archive)},
                {"archive", path_or_null(c.paths.archive)},
                {"sweep", path_or_null(c.paths.sweep)},
                {"lm_head", path_or_null(c.paths.lm_head)},
                {"norm_scale", path_or_null(c.paths.norm_scale)},
                {"gap_reports", gaps}};
  return j.dump(2) + "\n";
}

}  // namespace probelens::cli
