#pragma once

#include <filesystem>
#include <string>

#include "probelens/analysis.hpp"
#include "probelens/probe.hpp"

namespace probelens {

// JSON and CSV renderings of every report type. Output is a pure function of
// the report, so rerunning a command rewrites byte-identical files.

std::string format_number(double value);

std::string sweep_to_json(const LayerSweepReport& report, const TrainConfig& config);
/// Columns: layer, mean_acc, std_acc, then acc_pos<k> per scheduled position.
std::string sweep_to_csv(const LayerSweepReport& report);
LayerSweepReport sweep_from_json(const std::string& text);

std::string gap_to_json(const GapReport& report);
std::string gap_to_csv(const GapReport& report);
GapReport gap_from_json(const std::string& text);

std::string regression_to_json(const RegressionResult& result);
std::string regression_to_csv(const RegressionResult& result);

std::string distance_to_json(const DistanceCurve& curve, const DistanceOptions& options);
std::string distance_to_csv(const DistanceCurve& curve);

std::string lens_to_json(const LogitLensCurve& curve, const LensOptions& options);
std::string lens_to_csv(const LogitLensCurve& curve);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace probelens
