#pragma once

#include <stdexcept>
#include <string>

namespace dvtk {

// Invalid configuration or malformed input file.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Iterative solver failed to reach its tolerance; carries the final residual.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double residual)
      : std::runtime_error(what + " (final residual " + std::to_string(residual) + ")"),
        final_residual(residual) {}
  double final_residual;
};

// Normal equations of a least-squares problem are singular.
class RankDeficiencyError : public std::runtime_error {
 public:
  explicit RankDeficiencyError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace dvtk
