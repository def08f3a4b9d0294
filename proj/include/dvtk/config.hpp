#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dvtk/charge_state.hpp"
#include "dvtk/geometry.hpp"
#include "dvtk/kinetics.hpp"
#include "dvtk/photon_stats.hpp"
#include "dvtk/stark.hpp"

namespace dvtk {

// Sectioned key-value config text: [section] headers, key = value lines,
// '#' comments. Unknown sections or keys are rejected with line diagnostics.
class ConfigFile {
 public:
  static ConfigFile parse_file(const std::string& path);
  static ConfigFile parse_text(const std::string& text, const std::string& origin = "<config>");

  // Applies a "section.key=value" override string.
  void apply_override(const std::string& assignment);

  bool has_section(const std::string& section) const;
  std::vector<std::string> section_names(const std::string& prefix) const;

  // Typed getters; mark keys consumed. Throw ConfigError with the line
  // number when the value does not parse.
  double get_number(const std::string& section, const std::string& key, double fallback);
  std::optional<double> get_number_opt(const std::string& section, const std::string& key);
  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback);
  std::int64_t get_integer(const std::string& section, const std::string& key,
                           std::int64_t fallback);

  // Throws if any parsed key was never consumed (catches typos).
  void reject_unknown() const;

  // FNV-1a hash of the canonical (sorted) key-value content.
  std::uint64_t content_hash() const;

 private:
  struct Entry {
    std::string value;
    int line = 0;
    mutable bool consumed = false;
  };
  std::map<std::string, std::map<std::string, Entry>> sections_;
  std::string origin_;
};

struct SweepConfig {
  double v_start = 0.0;
  double v_stop = -300.0;
  std::size_t v_points = 61;
  LaserScan scan;
  FieldModel field_model = FieldModel::Uniform;
  GridSpec grid;
  double distance_min = 0.5;  // um, charge-map transition table
  double distance_max = 20.0;
  std::size_t distance_points = 40;

  std::vector<double> voltages() const;
};

struct OutputConfig {
  std::string directory = "out";
  std::string format = "csv";  // csv | svg | both
  std::uint64_t seed = 1;

  bool want_csv() const { return format == "csv" || format == "both"; }
  bool want_svg() const { return format == "svg" || format == "both"; }
};

struct FitJobConfig {
  std::string input;
  std::string model = "exp_decay";
};

// The full toolkit configuration.
struct ExperimentConfig {
  DeviceGeometry device;
  BandParameters bands;
  ChargeLevels levels;
  std::vector<DefectConfig> defects;
  RateModel rates;
  double power = 2.5;  // mW um^-2
  PopulationStack photon;
  SweepConfig sweep;
  FitJobConfig fit_job;
  OutputConfig output;
  std::uint64_t config_hash = 0;

  static ExperimentConfig load(ConfigFile& file);
};

}  // namespace dvtk
