#include "dvtk/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "dvtk/errors.hpp"

namespace dvtk {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

}  // namespace

ConfigFile ConfigFile::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file '" + path + "'");
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_text(ss.str(), path);
}

ConfigFile ConfigFile::parse_text(const std::string& text, const std::string& origin) {
  ConfigFile cfg;
  cfg.origin_ = origin;
  std::stringstream ss(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']') {
        throw ConfigError(origin + ":" + std::to_string(line_no) + ": malformed section header");
      }
      section = trim(t.substr(1, t.size() - 2));
      if (section.empty()) {
        throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty section name");
      }
      cfg.sections_[section];  // a section may be empty
      continue;
    }
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected key = value");
    }
    if (section.empty()) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": key outside any section");
    }
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
    }
    cfg.sections_[section][key] = Entry{value, line_no, false};
  }
  return cfg;
}

void ConfigFile::apply_override(const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  const std::size_t dot = assignment.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
    throw ConfigError("override must look like section.key=value: '" + assignment + "'");
  }
  const std::string section = trim(assignment.substr(0, dot));
  const std::string key = trim(assignment.substr(dot + 1, eq - dot - 1));
  const std::string value = trim(assignment.substr(eq + 1));
  if (section.empty() || key.empty()) {
    throw ConfigError("override must look like section.key=value: '" + assignment + "'");
  }
  sections_[section][key] = Entry{value, 0, false};
}

bool ConfigFile::has_section(const std::string& section) const {
  return sections_.count(section) > 0;
}

std::vector<std::string> ConfigFile::section_names(const std::string& prefix) const {
  std::vector<std::string> names;
  for (const auto& [name, _] : sections_) {
    if (name.rfind(prefix, 0) == 0) names.push_back(name);
  }
  return names;
}

std::optional<double> ConfigFile::get_number_opt(const std::string& section,
                                                 const std::string& key) {
  auto sit = sections_.find(section);
  if (sit == sections_.end()) return std::nullopt;
  auto kit = sit->second.find(key);
  if (kit == sit->second.end()) return std::nullopt;
  kit->second.consumed = true;
  try {
    std::size_t pos = 0;
    const double v = std::stod(kit->second.value, &pos);
    if (pos != kit->second.value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(origin_ + ":" + std::to_string(kit->second.line) + ": value of " +
                      section + "." + key + " is not a number: '" + kit->second.value + "'");
  }
}

double ConfigFile::get_number(const std::string& section, const std::string& key,
                              double fallback) {
  const auto v = get_number_opt(section, key);
  return v ? *v : fallback;
}

std::int64_t ConfigFile::get_integer(const std::string& section, const std::string& key,
                                     std::int64_t fallback) {
  const auto v = get_number_opt(section, key);
  if (!v) return fallback;
  const auto i = static_cast<std::int64_t>(*v);
  if (static_cast<double>(i) != *v) {
    throw ConfigError("value of " + section + "." + key + " must be an integer");
  }
  return i;
}

std::string ConfigFile::get_string(const std::string& section, const std::string& key,
                                   const std::string& fallback) {
  auto sit = sections_.find(section);
  if (sit == sections_.end()) return fallback;
  auto kit = sit->second.find(key);
  if (kit == sit->second.end()) return fallback;
  kit->second.consumed = true;
  return kit->second.value;
}

void ConfigFile::reject_unknown() const {
  for (const auto& [section, keys] : sections_) {
    for (const auto& [key, entry] : keys) {
      if (!entry.consumed) {
        throw ConfigError(origin_ + ":" + std::to_string(entry.line) + ": unknown key " +
                          section + "." + key);
      }
    }
  }
}

std::uint64_t ConfigFile::content_hash() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ull;
    }
    h ^= 0x1f;
    h *= 0x100000001b3ull;
  };
  for (const auto& [section, keys] : sections_) {
    mix(section);
    for (const auto& [key, entry] : keys) {
      // The output location does not affect results; excluding it lets runs
      // into different directories share a hash.
      if (section == "output" && key == "directory") continue;
      mix(key);
      mix(entry.value);
    }
  }
  return h;
}

std::vector<double> SweepConfig::voltages() const {
  std::vector<double> out;
  out.reserve(v_points);
  if (v_points == 1) {
    out.push_back(v_start);
    return out;
  }
  for (std::size_t i = 0; i < v_points; ++i) {
    out.push_back(v_start + (v_stop - v_start) * static_cast<double>(i) /
                                static_cast<double>(v_points - 1));
  }
  return out;
}

ExperimentConfig ExperimentConfig::load(ConfigFile& file) {
  ExperimentConfig cfg;

  cfg.device.membrane_thickness = file.get_number("device", "thickness_um", 120.0);
  cfg.device.lateral_extent = file.get_number("device", "lateral_extent_um", 240.0);
  cfg.device.dielectric_constant = file.get_number("device", "dielectric_constant", 9.6);
  cfg.device.donor_density = file.get_number("device", "donor_density_cm3", 2.5e14);
  cfg.device.back_plane_voltage = file.get_number("device", "back_plane_voltage_v", 0.0);
  for (const std::string& name : file.section_names("gate.")) {
    GatePatch g;
    g.x0 = file.get_number(name, "x0_um", 0.0);
    g.x1 = file.get_number(name, "x1_um", 0.0);
    g.y0 = file.get_number(name, "y0_um", 0.0);
    g.y1 = file.get_number(name, "y1_um", 0.0);
    g.voltage = file.get_number(name, "voltage_v", 0.0);
    cfg.device.gates.push_back(g);
  }
  cfg.device.validate();

  cfg.bands.electron_affinity = file.get_number("bands", "electron_affinity_ev", 4.17);
  cfg.bands.metal_work_function = file.get_number("bands", "metal_work_function_ev", 4.3);
  cfg.bands.bias_polarity =
      static_cast<int>(file.get_integer("bands", "bias_polarity", 1));
  cfg.bands.bulk_ec_offset = file.get_number("bands", "bulk_ec_offset_ev", 0.1);
  cfg.bands.validate();

  cfg.levels.level_plus_0 = file.get_number("levels", "plus_0_ev", 1.1);
  cfg.levels.level_0_minus = file.get_number("levels", "zero_minus_ev", 2.1);
  cfg.levels.level_minus_2minus = file.get_number("levels", "minus_2minus_ev", 2.6);
  cfg.levels.validate();

  for (const std::string& name : file.section_names("defect.")) {
    DefectConfig d;
    d.x = file.get_number(name, "x_um", 0.0);
    d.y = file.get_number(name, "y_um", 0.0);
    d.z = file.get_number(name, "depth_um", 1.5);
    d.zpl_center = file.get_number(name, "zpl_center_ghz", 264830.0);
    d.delta_d_parallel = file.get_number(name, "delta_d_parallel_ghz_per_mvm", 10.0);
    d.delta_d_perp = file.get_number(name, "delta_d_perp_ghz_per_mvm", 10.0);
    d.strain_x = file.get_number(name, "strain_x_ghz", 15.0);
    d.strain_y = file.get_number(name, "strain_y_ghz", 0.0);
    d.quench_field = file.get_number(name, "quench_field_mvm", 1.0);
    d.linewidth = file.get_number(name, "linewidth_ghz", 0.05);
    d.validate();
    cfg.defects.push_back(d);
  }
  if (cfg.defects.empty()) {
    cfg.defects.push_back(DefectConfig{});
  }

  cfg.rates.slope_0_minus = file.get_number("kinetics", "slope_0_minus_us_per_mw_um2", 1.0 / 3.0);
  cfg.rates.slope_minus_0 = file.get_number("kinetics", "slope_minus_0_us_per_mw_um2", 1.0 / 3.0);
  cfg.rates.delay_alpha = file.get_number("kinetics", "delay_alpha_us_mw_um2", 1.0);
  cfg.rates.delay_beta = file.get_number("kinetics", "delay_beta_us_mw_um2_per_v", 0.5);
  cfg.rates.v_low = file.get_number("kinetics", "v_low_v", 4.0);
  cfg.rates.v_high = file.get_number("kinetics", "v_high_v", 8.0);
  cfg.rates.v_threshold = file.get_number("kinetics", "v_threshold_v", 6.0);
  cfg.rates.validate();
  cfg.power = file.get_number("kinetics", "power_mw_um2", 2.5);
  if (!(cfg.power >= 0.0)) {
    throw ConfigError("kinetics.power_mw_um2 must be non-negative");
  }

  cfg.photon.rates = cfg.rates;
  cfg.photon.power = cfg.power;
  cfg.photon.lambda_bright = file.get_number("photon", "lambda_bright_per_ms", 0.6);
  cfg.photon.lambda_dark = file.get_number("photon", "lambda_dark_per_ms", 0.0125);
  cfg.photon.bin_ms = file.get_number("photon", "bin_ms", 8.0);
  cfg.photon.n_bins = static_cast<std::size_t>(file.get_integer("photon", "n_bins", 2000));
  if (!(cfg.photon.bin_ms > 0.0) || cfg.photon.n_bins == 0) {
    throw ConfigError("photon.bin_ms and photon.n_bins must be positive");
  }

  cfg.sweep.v_start = file.get_number("sweep", "v_start_v", 0.0);
  cfg.sweep.v_stop = file.get_number("sweep", "v_stop_v", -300.0);
  const std::int64_t points = file.get_integer("sweep", "v_points", 61);
  if (points <= 0) {
    throw ConfigError("sweep.v_points must be a positive integer");
  }
  cfg.sweep.v_points = static_cast<std::size_t>(points);
  cfg.sweep.scan.start = file.get_number("sweep", "scan_start_ghz", -40.0);
  cfg.sweep.scan.stop = file.get_number("sweep", "scan_stop_ghz", 40.0);
  cfg.sweep.scan.step = file.get_number("sweep", "scan_step_ghz", 0.05);
  if (!(cfg.sweep.scan.step > 0.0)) {
    throw ConfigError("sweep.scan_step_ghz must be positive");
  }
  const std::string model = file.get_string("sweep", "field_model", "uniform");
  if (model == "uniform") {
    cfg.sweep.field_model = FieldModel::Uniform;
  } else if (model == "laplace") {
    cfg.sweep.field_model = FieldModel::Laplace;
  } else {
    throw ConfigError("sweep.field_model must be uniform or laplace, got '" + model + "'");
  }
  cfg.sweep.grid.nx = static_cast<std::size_t>(file.get_integer("sweep", "grid_nx", 256));
  cfg.sweep.grid.nz = static_cast<std::size_t>(file.get_integer("sweep", "grid_nz", 128));
  cfg.sweep.distance_min = file.get_number("sweep", "distance_min_um", 0.5);
  cfg.sweep.distance_max = file.get_number("sweep", "distance_max_um", 20.0);
  cfg.sweep.distance_points =
      static_cast<std::size_t>(file.get_integer("sweep", "distance_points", 40));
  if (!(cfg.sweep.distance_min > 0.0) || !(cfg.sweep.distance_max >= cfg.sweep.distance_min)) {
    throw ConfigError("sweep distance range must satisfy 0 < min <= max");
  }

  cfg.fit_job.input = file.get_string("fit", "input", "");
  cfg.fit_job.model = file.get_string("fit", "model", "exp_decay");

  cfg.output.directory = file.get_string("output", "directory", "out");
  cfg.output.format = file.get_string("output", "format", "csv");
  if (cfg.output.format != "csv" && cfg.output.format != "svg" && cfg.output.format != "both") {
    throw ConfigError("output.format must be csv, svg or both");
  }
  cfg.output.seed = static_cast<std::uint64_t>(file.get_integer("output", "seed", 1));
  cfg.photon.seed = cfg.output.seed;

  file.reject_unknown();
  cfg.config_hash = file.content_hash();
  return cfg;
}

}  // namespace dvtk
