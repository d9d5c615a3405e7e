#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace probelens::cli {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitGeneration = 3;
inline constexpr int kExitArchive = 4;
inline constexpr int kExitAnalysis = 5;

/// Runs the probelens command line. `args` excludes the program name.
/// Never throws; every failure maps to one of the exit codes above.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace probelens::cli
