#include "cli/commands.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <memory>
#include <ostream>
#include <utility>

#include "CLI11.hpp"
#include "cli/run_config.hpp"
#include "cli/svg_plot.hpp"
#include "json.hpp"
#include "probelens/analysis.hpp"
#include "probelens/corpus.hpp"
#include "probelens/error.hpp"
#include "probelens/probe.hpp"
#include "probelens/report_io.hpp"
#include "probelens/rng.hpp"
#include "probelens/synth.hpp"
#include "probelens/tensor_store.hpp"

namespace probelens::cli {
namespace {

namespace fs = std::filesystem;

// Carries an exit code out of a command body.
struct Failure {
  int code;
  std::string message;
};

[[noreturn]] void fail(int code, std::string message) { throw Failure{code, std::move(message)}; }

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(kExitConfig, "cannot create output directory " + dir.string() + ": " + ec.message());
}

void echo_config(const RunConfig& config, const fs::path& dir) {
  write_text_file(dir / "config.resolved.json", resolved_json(config));
}

const fs::path& require_path(const std::optional<fs::path>& p, const char* flag, int code) {
  if (!p) fail(code, std::string("missing required input ") + flag);
  if (!fs::exists(*p)) fail(code, std::string("input for ") + flag + " not found: " + p->string());
  return *p;
}

EmbeddingArchive load_archive(const fs::path& path) {
  try {
    return read_archive(path);
  } catch (const Error& e) {
    fail(kExitArchive, std::string("archive ") + path.string() + ": " + e.what());
  }
}

Manifest load_manifest_for(const fs::path& path) {
  const std::string s = path.string();
  const std::string suffix = ".manifest.json";
  const fs::path mpath = (s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0)
                             ? path
                             : manifest_path(path);
  if (!fs::exists(mpath)) fail(kExitAnalysis, "manifest not found: " + mpath.string());
  try {
    return read_manifest(mpath);
  } catch (const Error& e) {
    fail(kExitArchive, e.what());
  }
}

WeightMatrix load_weights(const fs::path& path) {
  try {
    return read_weight_matrix(path);
  } catch (const Error& e) {
    fail(kExitArchive, std::string("weight file ") + path.string() + ": " + e.what());
  }
}

std::vector<double> iota_doubles(std::size_t n) {
  std::vector<double> xs(n);
  for (std::size_t i = 0; i < n; ++i) xs[i] = static_cast<double>(i);
  return xs;
}

// --- subcommand bodies ----------------------------------------------------

int do_gen_corpus(const RunConfig& config, std::ostream& out) {
  config.validate();
  std::vector<QaPoolEntry> pool;
  if (config.task == Task::kMdqa) {
    if (!config.paths.pool) fail(kExitConfig, "MDQA corpora need --pool <qa_pool.jsonl>");
    if (!fs::exists(*config.paths.pool)) fail(kExitConfig, "QA pool file not found: " + config.paths.pool->string());
    try {
      pool = read_qa_pool(*config.paths.pool);
    } catch (const Error& e) {
      fail(kExitConfig, "QA pool " + config.paths.pool->string() + ": " + e.what());
    }
    if (pool.empty()) fail(kExitConfig, "QA pool " + config.paths.pool->string() + " is empty");
  }
  ensure_dir(config.paths.out);

  std::pair<Corpus, Corpus> halves;
  try {
    CorpusRequest request;
    request.task = config.task;
    request.n_items = config.n_items;
    request.iterations = config.iterations;
    request.seed = config.seed;
    request.mdqa.max_document_chars = config.max_document_chars;
    const Corpus corpus = generate_corpus(request, config.task == Task::kMdqa ? &pool : nullptr);
    halves = split_corpus(corpus, config.test_fraction, config.seed);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    fail(kExitGeneration, std::string("corpus generation failed: ") + e.what());
  }
  write_corpus_jsonl(halves.first, config.paths.out / "train.jsonl");
  write_corpus_jsonl(halves.second, config.paths.out / "test.jsonl");
  echo_config(config, config.paths.out);
  out << "records: " << halves.first.records.size() + halves.second.records.size() << "\n";
  out << "train: " << halves.first.records.size() << "\n";
  out << "test: " << halves.second.records.size() << "\n";
  return kExitOk;
}

int do_synth(const RunConfig& config, std::ostream& out) {
  config.validate();
  ensure_dir(config.paths.out);
  EmbeddingArchive train;
  EmbeddingArchive test;
  try {
    const auto& spec = config.synth.plant;
    if (config.synth.kind == "planted") {
      PlantSpec s = spec;
      s.sample_stream = 0;
      train = planted_archive(s);
      s.sample_stream = 1;
      test = planted_archive(s);
    } else {
      train = chance_archive(spec.n_layers, spec.hidden_dim, spec.n_classes, spec.n_prompts_per_class, spec.seed);
      test = chance_archive(spec.n_layers, spec.hidden_dim, spec.n_classes, spec.n_prompts_per_class,
                            derive_seed(spec.seed, streams::kSplit));
    }
  } catch (const ValidationError& e) {
    fail(kExitConfig, std::string("invalid synth spec: ") + e.what());
  }
  write_archive(train, config.paths.out / "train.prbe");
  write_archive(test, config.paths.out / "test.prbe");
  echo_config(config, config.paths.out);
  out << "wrote " << (config.paths.out / "train.prbe").string() << " and " << (config.paths.out / "test.prbe").string()
      << " (" << train.header.n_prompts << " prompts, " << train.header.n_layers << " layers, "
      << train.header.hidden_dim << " dims)\n";
  return kExitOk;
}

int do_validate(const fs::path& path, std::ostream& out) {
  if (!fs::exists(path)) fail(kExitArchive, "archive not found: " + path.string());
  ValidationReport report;
  try {
    report = validate_archive(path);
  } catch (const Error& e) {
    fail(kExitArchive, e.what());
  }
  if (report.ok()) {
    out << path.string() << ": ok\n";
    return kExitOk;
  }
  out << path.string() << ": " << report.failures.size() << " problem(s)\n";
  for (const auto& f : report.failures) out << "  [" << f.kind << "] " << f.message << "\n";
  return kExitArchive;
}

LinePlot probing_plot(const LayerSweepReport& report) {
  LinePlot plot;
  plot.title = "Probing accuracy per layer";
  plot.x_label = "layer";
  plot.y_label = "probing accuracy";
  plot.fixed_y = true;
  const auto xs = iota_doubles(report.metrics.size());
  Series mean{"all positions", xs, {}, false};
  for (const auto& m : report.metrics) mean.ys.push_back(m.mean_accuracy);
  plot.series.push_back(std::move(mean));
  for (const auto& curve : position_curves(report)) {
    plot.series.push_back({"position " + std::to_string(curve.gold_position), xs, curve.per_layer_accuracy, false});
  }
  return plot;
}

void write_sweep_outputs(const LayerSweepReport& report, const RunConfig& config, const fs::path& dir) {
  write_text_file(dir / "sweep.json", sweep_to_json(report, config.probe));
  write_text_file(dir / "sweep.csv", sweep_to_csv(report));
  std::string peaks = "gold_position,peak_layer,peak_accuracy\n";
  for (const auto& c : position_curves(report)) {
    peaks += std::to_string(c.gold_position) + "," + std::to_string(c.peak_layer) + "," +
             format_number(c.peak_accuracy) + "\n";
  }
  write_text_file(dir / "position_peaks.csv", peaks);
  write_text_file(dir / "probing_layers.svg", render_svg(probing_plot(report)));
}

LayerSweepReport run_sweep(const RunConfig& config, const fs::path& dir, std::ostream& out) {
  const auto& train_path = require_path(config.paths.train_archive, "--train", kExitConfig);
  const auto& test_path = require_path(config.paths.test_archive, "--test", kExitConfig);
  const auto train = load_archive(train_path);
  const auto test = load_archive(test_path);
  LayerSweepReport report;
  try {
    report = layer_sweep(train, test, config.probe, SweepOptions{config.threads});
  } catch (const CompatibilityError& e) {
    fail(kExitArchive, std::string("archives are incompatible: ") + e.what());
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    fail(kExitArchive, std::string("probe training failed: ") + e.what());
  }
  ensure_dir(dir);
  write_sweep_outputs(report, config, dir);
  out << "peak layer " << report.peak_layer << " (mean accuracy " << format_number(report.peak_accuracy) << ")\n";
  return report;
}

int do_train_probes(const RunConfig& config, std::ostream& out) {
  config.validate();
  run_sweep(config, config.paths.out, out);
  echo_config(config, config.paths.out);
  return kExitOk;
}

GapReport run_gap(const LayerSweepReport& sweep, const Manifest& manifest, const fs::path& dir, std::ostream& out) {
  GapReport gap;
  try {
    gap = ktdt_gap(position_curves(sweep), generation_accuracy(manifest));
  } catch (const Error& e) {
    fail(kExitAnalysis, std::string("gap analysis failed: ") + e.what());
  }
  ensure_dir(dir);
  write_text_file(dir / "gap.json", gap_to_json(gap));
  write_text_file(dir / "gap.csv", gap_to_csv(gap));
  LinePlot plot;
  plot.title = "Peak probing vs generation accuracy";
  plot.x_label = "gold position";
  plot.y_label = "accuracy";
  plot.fixed_y = true;
  Series probe{"peak probing", {}, {}, false};
  Series gen{"generation", {}, {}, false};
  for (const auto& e : gap.per_position) {
    probe.xs.push_back(e.gold_position);
    probe.ys.push_back(e.peak_probe_accuracy);
    gen.xs.push_back(e.gold_position);
    gen.ys.push_back(e.generation_accuracy);
  }
  plot.series = {std::move(probe), std::move(gen)};
  write_text_file(dir / "gap.svg", render_svg(plot));
  out << "mean gap " << format_number(gap.mean_gap) << " over " << gap.per_position.size() << " positions\n";
  return gap;
}

int do_analyze_gap(const RunConfig& config, std::ostream& out) {
  config.validate();
  const auto& sweep_path = require_path(config.paths.sweep, "--sweep", kExitAnalysis);
  const auto& archive_path = require_path(config.paths.archive, "--archive", kExitAnalysis);
  LayerSweepReport sweep;
  try {
    sweep = sweep_from_json(read_text_file(sweep_path));
  } catch (const Error& e) {
    fail(kExitAnalysis, e.what());
  }
  const Manifest manifest = load_manifest_for(archive_path);
  run_gap(sweep, manifest, config.paths.out, out);
  echo_config(config, config.paths.out);
  return kExitOk;
}

RegressionResult run_regression(const std::vector<PeakPoint>& points, double threshold, const fs::path& dir,
                                std::ostream& out) {
  RegressionResult result;
  try {
    result = peak_layer_regression(points, threshold);
  } catch (const Error& e) {
    fail(kExitAnalysis, e.what());
  }
  ensure_dir(dir);
  write_text_file(dir / "regression.json", regression_to_json(result));
  write_text_file(dir / "regression.csv", regression_to_csv(result));
  LinePlot plot;
  plot.title = "Peak layer vs generation accuracy";
  plot.x_label = "layer of peak probing accuracy";
  plot.y_label = "generation accuracy";
  Series pts{"positions", {}, {}, true};
  double lo = result.points.front().peak_layer;
  double hi = lo;
  for (const auto& p : result.points) {
    pts.xs.push_back(p.peak_layer);
    pts.ys.push_back(p.generation_accuracy);
    lo = std::min(lo, p.peak_layer);
    hi = std::max(hi, p.peak_layer);
  }
  Series fit{"OLS fit", {lo, hi}, {result.intercept + result.slope * lo, result.intercept + result.slope * hi}, false};
  plot.series = {std::move(pts), std::move(fit)};
  write_text_file(dir / "regression.svg", render_svg(plot));
  out << "slope " << format_number(result.slope) << ", t " << format_number(result.t_statistic) << ", p "
      << (result.p_floored ? std::string("< 1e-12") : format_number(result.p_value)) << " (dof " << result.dof
      << ")\n";
  return result;
}

int do_analyze_regression(const RunConfig& config, std::ostream& out) {
  config.validate();
  if (config.paths.gap_reports.empty()) fail(kExitAnalysis, "missing required input --gap (one or more gap.json)");
  std::vector<PeakPoint> points;
  for (const auto& path : config.paths.gap_reports) {
    if (!fs::exists(path)) fail(kExitAnalysis, "gap report not found: " + path.string());
    try {
      for (const auto& p : peak_points(gap_from_json(read_text_file(path)))) points.push_back(p);
    } catch (const Error& e) {
      fail(kExitAnalysis, e.what());
    }
  }
  run_regression(points, config.analysis.min_probe_accuracy, config.paths.out, out);
  echo_config(config, config.paths.out);
  return kExitOk;
}

void run_distance(const EmbeddingArchive& archive, const RunConfig& config, const fs::path& dir, std::ostream& out) {
  DistanceCurve curve;
  try {
    curve = distance_curve(archive, config.analysis.distance);
  } catch (const Error& e) {
    fail(kExitAnalysis, std::string("distance curve failed: ") + e.what());
  }
  ensure_dir(dir);
  write_text_file(dir / "distance.json", distance_to_json(curve, config.analysis.distance));
  write_text_file(dir / "distance.csv", distance_to_csv(curve));
  LinePlot plot;
  plot.title = "Average distance between adjacent positions";
  plot.x_label = "layer";
  plot.y_label = "average distance d_l";
  plot.series = {{"d_l", iota_doubles(curve.per_layer.size()), curve.per_layer, false}};
  write_text_file(dir / "distance.svg", render_svg(plot));
  const auto peak = peak_index(curve.per_layer);
  out << "distance curve over " << curve.per_layer.size() << " layers, peak at layer " << peak << "\n";
}

int do_analyze_distance(const RunConfig& config, std::ostream& out) {
  config.validate();
  const auto& path = require_path(config.paths.archive, "--archive", kExitAnalysis);
  run_distance(load_archive(path), config, config.paths.out, out);
  echo_config(config, config.paths.out);
  return kExitOk;
}

void run_lens(const EmbeddingArchive& archive, const RunConfig& config, const fs::path& dir, std::ostream& out) {
  const auto& head_path = require_path(config.paths.lm_head, "--lm-head", kExitAnalysis);
  const WeightMatrix head = load_weights(head_path);
  std::optional<WeightMatrix> norm;
  if (config.paths.norm_scale) norm = load_weights(require_path(config.paths.norm_scale, "--norm-scale", kExitAnalysis));
  LogitLensCurve curve;
  try {
    curve = logit_lens_curve(archive, head, norm ? &*norm : nullptr, config.analysis.lens);
  } catch (const Error& e) {
    fail(kExitAnalysis, std::string("logit lens failed: ") + e.what());
  }
  ensure_dir(dir);
  write_text_file(dir / "lens.json", lens_to_json(curve, config.analysis.lens));
  write_text_file(dir / "lens.csv", lens_to_csv(curve));
  LinePlot plot;
  plot.title = curve.norm_applied ? "Logit lens (final norm applied)" : "Logit lens (no final norm)";
  plot.x_label = "layer";
  plot.y_label = "probability of first answer token";
  const auto xs = iota_doubles(curve.per_layer_per_position.size());
  for (std::size_t c = 0; c < curve.positions.size(); ++c) {
    Series s{"position " + std::to_string(curve.positions[c]), xs, {}, false};
    for (const auto& row : curve.per_layer_per_position) s.ys.push_back(row[c]);
    plot.series.push_back(std::move(s));
  }
  write_text_file(dir / "lens.svg", render_svg(plot));
  out << "logit lens over " << curve.per_layer_per_position.size() << " layers (norm "
      << (curve.norm_applied ? "applied" : "not applied") << ")\n";
}

int do_analyze_lens(const RunConfig& config, std::ostream& out) {
  config.validate();
  const auto& path = require_path(config.paths.archive, "--archive", kExitAnalysis);
  run_lens(load_archive(path), config, config.paths.out, out);
  echo_config(config, config.paths.out);
  return kExitOk;
}

int do_report(const RunConfig& config, std::ostream& out) {
  config.validate();
  const fs::path root = config.paths.out;
  ensure_dir(root);
  nlohmann::ordered_json index;

  const auto sweep = run_sweep(config, root / "probes", out);
  index["probes"] = "probes/sweep.json";

  const auto test = load_archive(*config.paths.test_archive);
  std::vector<PeakPoint> points;
  if (test.manifest.generations) {
    const auto gap = run_gap(sweep, test.manifest, root / "gap", out);
    index["gap"] = "gap/gap.json";
    points = peak_points(gap);
  } else {
    index["gap"] = "skipped: test manifest has no generations";
  }

  for (const auto& path : config.paths.gap_reports) {
    if (!fs::exists(path)) fail(kExitAnalysis, "gap report not found: " + path.string());
    for (const auto& p : peak_points(gap_from_json(read_text_file(path)))) points.push_back(p);
  }
  const auto survivors = std::count_if(points.begin(), points.end(), [&](const PeakPoint& p) {
    return p.peak_probe_accuracy > config.analysis.min_probe_accuracy;
  });
  if (survivors >= 3) {
    run_regression(points, config.analysis.min_probe_accuracy, root / "peak-regression", out);
    index["peak_regression"] = "peak-regression/regression.json";
  } else {
    index["peak_regression"] = "skipped: fewer than 3 positions pass the probe-accuracy filter";
  }

  run_distance(test, config, root / "pca-distance", out);
  index["pca_distance"] = "pca-distance/distance.json";

  if (config.paths.lm_head && test.manifest.first_answer_token_rows) {
    run_lens(test, config, root / "logit-lens", out);
    index["logit_lens"] = "logit-lens/lens.json";
  } else {
    index["logit_lens"] = "skipped: needs --lm-head and first-answer-token rows in the manifest";
  }

  write_text_file(root / "report.json", index.dump(2) + "\n");
  echo_config(config, root);
  return kExitOk;
}

// --- flag plumbing --------------------------------------------------------

class Overrides {
 public:
  template <typename T, typename Apply>
  CLI::Option* option(CLI::App* app, const std::string& name, const std::string& desc, Apply apply) {
    auto value = std::make_shared<T>();
    CLI::Option* opt = app->add_option(name, *value, desc);
    items_.push_back({opt, [value, apply](RunConfig& c) { apply(c, *value); }});
    return opt;
  }

  template <typename Apply>
  CLI::Option* flag(CLI::App* app, const std::string& name, const std::string& desc, Apply apply) {
    CLI::Option* opt = app->add_flag(name, desc);
    items_.push_back({opt, [apply](RunConfig& c) { apply(c); }});
    return opt;
  }

  void apply(RunConfig& config) const {
    for (const auto& [opt, fn] : items_) {
      if (opt->count() > 0) fn(config);
    }
  }

 private:
  std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&)>>> items_;
};

void add_out(Overrides& o, CLI::App* app) {
  o.option<std::string>(app, "-o,--out", "Output directory", [](RunConfig& c, const std::string& v) { c.paths.out = v; });
}

void add_probe_flags(Overrides& o, CLI::App* app) {
  o.option<std::size_t>(app, "--repeats", "Trainings per layer (default 10)",
                        [](RunConfig& c, std::size_t v) { c.probe.repeats = v; });
  o.option<double>(app, "--lr,--learning-rate", "Learning rate (default 0.05)",
                   [](RunConfig& c, double v) { c.probe.learning_rate = v; });
  o.option<std::size_t>(app, "--epochs", "Epochs (default 50)", [](RunConfig& c, std::size_t v) { c.probe.epochs = v; });
  o.option<std::size_t>(app, "--batch-size", "Mini-batch size (default 256)",
                        [](RunConfig& c, std::size_t v) { c.probe.batch_size = v; });
  o.option<double>(app, "--l2", "L2 penalty (default 1e-4)", [](RunConfig& c, double v) { c.probe.l2_penalty = v; });
  o.flag(app, "--no-standardize", "Train on raw features", [](RunConfig& c) { c.probe.standardize = false; });
  o.option<std::uint64_t>(app, "--probe-seed", "Probe seed (default 0)",
                          [](RunConfig& c, std::uint64_t v) { c.probe.seed = v; });
}

void add_train_test(Overrides& o, CLI::App* app) {
  o.option<std::string>(app, "--train", "Training archive (.prbe)",
                        [](RunConfig& c, const std::string& v) { c.paths.train_archive = v; });
  o.option<std::string>(app, "--test", "Test archive (.prbe)",
                        [](RunConfig& c, const std::string& v) { c.paths.test_archive = v; });
}

void add_archive(Overrides& o, CLI::App* app, const std::string& desc) {
  o.option<std::string>(app, "--archive", desc, [](RunConfig& c, const std::string& v) { c.paths.archive = v; });
}

void add_lens_flags(Overrides& o, CLI::App* app) {
  o.option<std::string>(app, "--lm-head", "LM head weights (.wmat)",
                        [](RunConfig& c, const std::string& v) { c.paths.lm_head = v; });
  o.option<std::string>(app, "--norm-scale", "Final norm scale (.wmat, 1 x d)",
                        [](RunConfig& c, const std::string& v) { c.paths.norm_scale = v; });
  o.option<std::string>(app, "--norm-mode", "apply | skip (default apply)", [](RunConfig& c, const std::string& v) {
    if (v != "apply" && v != "skip") throw ConfigError("--norm-mode must be apply or skip");
    c.analysis.lens.apply_norm = v == "apply";
  });
  o.option<double>(app, "--norm-epsilon", "RMS norm epsilon (default 1e-5)",
                   [](RunConfig& c, double v) { c.analysis.lens.norm_epsilon = v; });
}

void add_distance_flags(Overrides& o, CLI::App* app) {
  o.option<std::string>(app, "--representative", "single_prompt_per_position | class_mean",
                        [](RunConfig& c, const std::string& v) {
                          c.analysis.distance.representative = parse_representative(v);
                        });
  o.option<std::string>(app, "--space", "pca | ambient", [](RunConfig& c, const std::string& v) {
    c.analysis.distance.space = parse_distance_space(v);
  });
  o.option<std::size_t>(app, "--components", "PCA components (default 2)",
                        [](RunConfig& c, std::size_t v) { c.analysis.distance.components = v; });
  o.option<std::size_t>(app, "--repetitions", "Prompt sets averaged in single-prompt mode (default 1)",
                        [](RunConfig& c, std::size_t v) { c.analysis.distance.repetitions = v; });
}

void add_gap_list(Overrides& o, CLI::App* app) {
  o.option<std::vector<std::string>>(app, "--gap", "gap.json report(s); repeatable",
                                     [](RunConfig& c, const std::vector<std::string>& v) {
                                       c.paths.gap_reports.assign(v.begin(), v.end());
                                     });
  o.option<double>(app, "--min-probe-accuracy", "Keep positions whose peak probe accuracy exceeds this (default 0.6)",
                   [](RunConfig& c, double v) { c.analysis.min_probe_accuracy = v; });
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"probelens: layer-wise position probing for long-context retrieval", "probelens"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  app.add_option("--config", config_path, "JSON run configuration; flags override its values");
  Overrides o;
  o.option<std::size_t>(&app, "--threads", "Worker threads (also PROBELENS_THREADS)",
                        [](RunConfig& c, std::size_t v) { c.threads = v; });

  auto* gen = app.add_subcommand("gen-corpus", "Generate train/test prompt corpora");
  o.option<std::string>(gen, "--task", "kv | mdqa", [](RunConfig& c, const std::string& v) { c.task = parse_task(v); });
  o.option<std::uint32_t>(gen, "-n,--n", "Items per prompt", [](RunConfig& c, std::uint32_t v) { c.n_items = v; });
  o.option<std::uint32_t>(gen, "--iterations", "Content draws (each yields one prompt per position)",
                          [](RunConfig& c, std::uint32_t v) { c.iterations = v; });
  o.option<std::uint64_t>(gen, "--seed", "Root seed", [](RunConfig& c, std::uint64_t v) { c.seed = v; });
  o.option<double>(gen, "--test-fraction", "Share of iterations held out (default 0.2)",
                   [](RunConfig& c, double v) { c.test_fraction = v; });
  o.option<std::size_t>(gen, "--max-doc-chars", "MDQA document truncation (default 1500)",
                        [](RunConfig& c, std::size_t v) { c.max_document_chars = v; });
  o.option<std::string>(gen, "--pool", "QA pool (.jsonl) for MDQA",
                        [](RunConfig& c, const std::string& v) { c.paths.pool = v; });
  add_out(o, gen);

  auto* synth = app.add_subcommand("synth", "Write synthetic train/test archives");
  o.option<std::string>(synth, "--kind", "planted | chance", [](RunConfig& c, const std::string& v) { c.synth.kind = v; });
  o.option<std::uint32_t>(synth, "--layers", "Layers", [](RunConfig& c, std::uint32_t v) { c.synth.plant.n_layers = v; });
  o.option<std::uint32_t>(synth, "--dim", "Hidden size", [](RunConfig& c, std::uint32_t v) { c.synth.plant.hidden_dim = v; });
  o.option<std::uint32_t>(synth, "--classes", "Gold classes",
                          [](RunConfig& c, std::uint32_t v) { c.synth.plant.n_classes = v; });
  o.option<std::uint32_t>(synth, "--signal-layer", "First layer carrying the signal",
                          [](RunConfig& c, std::uint32_t v) { c.synth.plant.signal_layer = v; });
  o.option<std::uint32_t>(synth, "--decay-start", "Layer where the signal starts fading",
                          [](RunConfig& c, std::uint32_t v) { c.synth.plant.decay_start = v; });
  o.option<double>(synth, "--sigma", "Noise standard deviation",
                   [](RunConfig& c, double v) { c.synth.plant.noise_sigma = v; });
  o.option<double>(synth, "--separation", "Norm of each class mean",
                   [](RunConfig& c, double v) { c.synth.plant.separation = v; });
  o.option<std::uint32_t>(synth, "--per-class", "Prompts per class",
                          [](RunConfig& c, std::uint32_t v) { c.synth.plant.n_prompts_per_class = v; });
  o.option<std::uint64_t>(synth, "--seed", "Seed", [](RunConfig& c, std::uint64_t v) { c.synth.plant.seed = v; });
  o.option<std::string>(synth, "--layout", "orthogonal | line", [](RunConfig& c, const std::string& v) {
    if (v == "orthogonal") c.synth.plant.layout = ClassLayout::kOrthogonal;
    else if (v == "line") c.synth.plant.layout = ClassLayout::kLine;
    else throw ConfigError("--layout must be orthogonal or line");
  });
  add_out(o, synth);

  auto* validate = app.add_subcommand("validate-archive", "Check a .prbe archive and its manifest");
  std::string validate_path;
  validate->add_option("path", validate_path, "Archive path")->required();

  auto* train = app.add_subcommand("train-probes", "Train per-layer probes and write the sweep report");
  add_train_test(o, train);
  add_probe_flags(o, train);
  add_out(o, train);

  auto* analyze = app.add_subcommand("analyze", "Run one analysis");
  analyze->require_subcommand(1);
  analyze->fallthrough();
  auto* gap = analyze->add_subcommand("gap", "Peak probing accuracy vs generation accuracy per position");
  o.option<std::string>(gap, "--sweep", "sweep.json from train-probes",
                        [](RunConfig& c, const std::string& v) { c.paths.sweep = v; });
  add_archive(o, gap, "Archive (or manifest) carrying generation records");
  add_out(o, gap);
  auto* regression = analyze->add_subcommand("peak-regression", "Regress generation accuracy on peak layer");
  add_gap_list(o, regression);
  add_out(o, regression);
  auto* distance = analyze->add_subcommand("pca-distance", "Adjacent-position distance per layer");
  add_archive(o, distance, "Archive to analyse");
  add_distance_flags(o, distance);
  add_out(o, distance);
  auto* lens = analyze->add_subcommand("logit-lens", "First-answer-token probability per layer");
  add_archive(o, lens, "Archive to analyse");
  add_lens_flags(o, lens);
  add_out(o, lens);

  auto* report = app.add_subcommand("report", "Train probes and run every applicable analysis");
  add_train_test(o, report);
  add_probe_flags(o, report);
  add_distance_flags(o, report);
  add_lens_flags(o, report);
  add_gap_list(o, report);
  add_out(o, report);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  int default_code = kExitConfig;
  try {
    RunConfig config;
    if (!config_path.empty()) config = load_run_config(config_path);
    if (const char* env = std::getenv("PROBELENS_THREADS"); env != nullptr && *env != '\0') {
      try {
        config.threads = static_cast<std::size_t>(std::stoul(env));
      } catch (const std::exception&) {
        throw ConfigError(std::string("PROBELENS_THREADS is not a number: ") + env);
      }
    }
    o.apply(config);

    if (*gen) {
      default_code = kExitGeneration;
      return do_gen_corpus(config, out);
    }
    if (*synth) {
      default_code = kExitGeneration;
      return do_synth(config, out);
    }
    if (*validate) {
      default_code = kExitArchive;
      return do_validate(validate_path, out);
    }
    if (*train) {
      default_code = kExitArchive;
      return do_train_probes(config, out);
    }
    if (*report) {
      default_code = kExitAnalysis;
      return do_report(config, out);
    }
    default_code = kExitAnalysis;
    if (*gap) return do_analyze_gap(config, out);
    if (*regression) return do_analyze_regression(config, out);
    if (*distance) return do_analyze_distance(config, out);
    if (*lens) return do_analyze_lens(config, out);
  } catch (const Failure& f) {
    err << "error: " << f.message << "\n";
    return f.code;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return default_code;
  }
  return kExitConfig;
}

}  // namespace probelens::cli
