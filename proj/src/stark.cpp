#include "dvtk/stark.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace dvtk {

void DefectConfig::validate() const {
  if (!(linewidth > 0.0)) {
    throw std::invalid_argument("linewidth must be positive");
  }
  if (!(quench_field > 0.0)) {
    throw std::invalid_argument("quench field must be positive");
  }
  if (!std::isfinite(delta_d_parallel) || !std::isfinite(delta_d_perp) ||
      !std::isfinite(strain_x) || !std::isfinite(strain_y)) {
    throw std::invalid_argument("dipole and strain parameters must be finite");
  }
  if (!(z >= 0.0)) {
    throw std::invalid_argument("defect depth must be non-negative");
  }
}

std::vector<double> LaserScan::offsets() const {
  if (!(step > 0.0)) {
    throw std::invalid_argument("laser scan step must be positive");
  }
  std::vector<double> out;
  if (start > stop) return out;
  const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(start + step * static_cast<double>(i));
  }
  return out;
}

TransitionPair transition_frequencies(const DefectConfig& defect, const FieldVector& field) {
  defect.validate();
  if (!std::isfinite(field.f_parallel) || !std::isfinite(field.f_perp_x) ||
      !std::isfinite(field.f_perp_y)) {
    throw std::invalid_argument("field components must be finite");
  }
  TransitionPair pair;
  if (field.perp_magnitude() >= defect.quench_field) {
    pair.bright = false;
    pair.nu_ex = pair.nu_ey = std::numeric_limits<double>::quiet_NaN();
    return pair;
  }
  const double common = defect.delta_d_parallel * field.f_parallel;
  const double vx = defect.strain_x + defect.delta_d_perp * field.f_perp_x;
  const double vy = defect.strain_y + defect.delta_d_perp * field.f_perp_y;
  const double half_splitting = std::hypot(vx, vy);
  pair.nu_ex = defect.zpl_center + common + half_splitting;
  pair.nu_ey = defect.zpl_center + common - half_splitting;
  pair.bright = true;
  return pair;
}

std::pair<double, double> linearized_shift(const DefectConfig& defect, const FieldVector& field) {
  defect.validate();
  const double strain_mag = std::hypot(defect.strain_x, defect.strain_y);
  const double perp_term = defect.delta_d_perp * field.perp_magnitude();
  if (!(perp_term < 0.2 * strain_mag)) {
    throw std::domain_error(
        "transverse dipole term is not small against the strain splitting; "
        "use transition_frequencies for the exact 2x2 model");
  }
  const double common = defect.delta_d_parallel * field.f_parallel;
  // Transverse field projected on the strain principal axis.
  double projected = 0.0;
  if (strain_mag > 0.0) {
    projected = defect.delta_d_perp *
                (field.f_perp_x * defect.strain_x + field.f_perp_y * defect.strain_y) /
                strain_mag;
  }
  return {common + projected, common - projected};
}

std::vector<std::pair<double, double>> ple_spectrum(const DefectConfig& defect,
                                                    const FieldVector& field,
                                                    const LaserScan& scan) {
  const TransitionPair pair = transition_frequencies(defect, field);
  const std::vector<double> offsets = scan.offsets();
  std::vector<std::pair<double, double>> out;
  out.reserve(offsets.size());
  const double hwhm = 0.5 * defect.linewidth;
  for (double off : offsets) {
    double intensity = 0.0;
    if (pair.bright) {
      const double nu = defect.zpl_center + off;
      for (double center : {pair.nu_ex, pair.nu_ey}) {
        const double d = nu - center;
        intensity += hwhm / (std::numbers::pi * (d * d + hwhm * hwhm));
      }
    }
    out.emplace_back(off, intensity);
  }
  return out;
}

StarkMap stark_map(const DefectConfig& defect, const DeviceGeometry& geometry,
                   const BandParameters& bands, const ChargeLevels& levels,
                   const std::vector<GateSetting>& sweep, const LaserScan& scan,
                   FieldModel model, const GridSpec& grid) {
  if (sweep.empty()) {
    throw std::invalid_argument("voltage sweep must be nonempty");
  }
  defect.validate();
  geometry.validate();

  StarkMap map;
  map.offsets = scan.offsets();
  map.rows.reserve(sweep.size());

  for (const GateSetting& setting : sweep) {
    DeviceGeometry biased = geometry;
    double v_common = 0.0;
    if (!biased.gates.empty()) {
      if (setting.voltages.size() != biased.gates.size()) {
        throw std::invalid_argument("gate setting size does not match gate count");
      }
      for (std::size_t i = 0; i < biased.gates.size(); ++i) {
        biased.gates[i].voltage = setting.voltages[i];
        v_common += setting.voltages[i];
      }
      v_common /= static_cast<double>(biased.gates.size());
    } else {
      if (setting.voltages.size() != 1) {
        throw std::invalid_argument("gateless geometry takes a single common-mode voltage");
      }
      v_common = setting.voltages[0];
    }

    FieldVector field;
    if (model == FieldModel::Uniform) {
      field = uniform_vertical_field(v_common, geometry);
    } else {
      const FieldSolution solution = solve_laplace(biased, grid);
      field = field_at(solution, defect.x, defect.z);
    }

    StarkMapRow row;
    row.v_common = v_common;
    row.transitions = transition_frequencies(defect, field);
    const ChargeState state = steady_charge_state(defect, v_common, geometry, bands, levels);
    row.bright = row.transitions.bright && is_bright(state);

    row.intensity.reserve(map.offsets.size());
    if (row.bright) {
      const auto spectrum = ple_spectrum(defect, field, scan);
      for (const auto& [off, val] : spectrum) row.intensity.push_back(val);
    } else {
      row.intensity.assign(map.offsets.size(), 0.0);
    }
    map.rows.push_back(std::move(row));
  }
  return map;
}

}  // namespace dvtk
