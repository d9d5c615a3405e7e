#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "probelens/analysis.hpp"
#include "probelens/corpus.hpp"
#include "probelens/probe.hpp"
#include "probelens/synth.hpp"

namespace probelens::cli {

struct SynthOptions {
  std::string kind = "planted";  // planted | chance
  PlantSpec plant;
};

struct AnalysisOptions {
  double min_probe_accuracy = 0.6;
  DistanceOptions distance;
  LensOptions lens;
};

struct Paths {
  std::filesystem::path out = ".";
  std::optional<std::filesystem::path> pool;
  std::optional<std::filesystem::path> train_archive;
  std::optional<std::filesystem::path> test_archive;
  std::optional<std::filesystem::path> archive;
  std::optional<std::filesystem::path> sweep;
  std::optional<std::filesystem::path> lm_head;
  std::optional<std::filesystem::path> norm_scale;
  std::vector<std::filesystem::path> gap_reports;
};

struct RunConfig {
  Task task = Task::kKv;
  std::uint32_t n_items = 100;
  std::uint32_t iterations = 10;
  std::uint64_t seed = 0;
  double test_fraction = 0.2;
  std::size_t max_document_chars = 1500;
  TrainConfig probe;
  AnalysisOptions analysis;
  SynthOptions synth;
  Paths paths;
  std::size_t threads = 1;

  /// Range checks owned by the modules; throws ConfigError.
  void validate() const;
};

/// Fields absent from the JSON keep their defaults. Unknown keys are
/// rejected so typos do not silently fall back to defaults.
RunConfig load_run_config(const std::filesystem::path& path);
void apply_json(RunConfig& config, const std::string& json_text);

/// Effective configuration, written as config.resolved.json.
std::string resolved_json(const RunConfig& config);

Representative parse_representative(const std::string& text);
DistanceSpace parse_distance_space(const std::string& text);

}  // namespace probelens::cli
