#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace dvtk {

inline constexpr const char* kToolkitVersion = "dvtk 0.1.0";

// Exit codes of the CLI surface.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitNumericalError = 3;

struct RunOptions {
  std::string config_path;             // empty = built-in defaults
  std::vector<std::string> overrides;  // section.key=value assignments
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::string> format;   // csv | svg | both
};

// Runs one subcommand end to end: load + validate config, produce the
// deterministic CSV/SVG artifacts and the run manifest under the output
// directory. Subcommands: solve-field, stark-sweep, ple, charge-map,
// step-response, telegraph, readout, fit.
int run_subcommand(const std::string& subcommand, const RunOptions& options, std::ostream& log);

}  // namespace dvtk
