#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace arraycal::cli {

/// Stable process exit codes.
enum ExitCode : int {
  kSuccess = 0,
  kFailure = 1,
  kValidation = 2,
  kIo = 3,
  kDegenerate = 4,
  kProvenance = 5,
};

/// Environment variable holding the default --parallel degree.
inline constexpr char kParallelismEnv[] = "ARRAYCAL_PARALLELISM";

/// Parses "start:step:stop" (inclusive) or a comma-separated list of dB values.
std::vector<double> parse_snr_grid(const std::string& text);

/// Runs one command line (args[0] is the program name). Tables go to `out`
/// as comma-separated text, or column-aligned when `aligned` is set.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, bool aligned = false);

}  // namespace arraycal::cli
