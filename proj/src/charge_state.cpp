#include "dvtk/charge_state.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "dvtk/constants.hpp"
#include "dvtk/stark.hpp"

namespace dvtk {

std::string to_string(ChargeState state) {
  switch (state) {
    case ChargeState::VV_plus: return "VV+";
    case ChargeState::VV_0: return "VV0";
    case ChargeState::VV_minus: return "VV-";
    case ChargeState::VV_2minus: return "VV2-";
  }
  return "?";
}

bool is_bright(ChargeState state) { return state == ChargeState::VV_0; }

void ChargeLevels::validate() const {
  if (!(level_plus_0 < level_0_minus && level_0_minus < level_minus_2minus)) {
    throw std::invalid_argument("charge-transition levels must be strictly increasing");
  }
  if (!(level_plus_0 > 0.0 && level_minus_2minus < constants::band_gap_ev)) {
    throw std::invalid_argument("charge-transition levels must lie inside the band gap");
  }
}

BandProfile band_profile(double v_gate, const DeviceGeometry& geometry,
                         const BandParameters& bands, std::size_t n_samples) {
  geometry.validate();
  bands.validate();
  BandProfile profile;
  profile.barrier =
      bands.built_in_barrier() + static_cast<double>(bands.bias_polarity) * v_gate;
  profile.depletion_width = depletion_width(profile.barrier, geometry);

  const double span = std::max(1.5 * profile.depletion_width, 1.0);
  profile.samples.reserve(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    const double x = span * static_cast<double>(i) / static_cast<double>(n_samples - 1);
    double edge = bands.bulk_ec_offset;
    if (profile.depletion_width > 0.0 && x < profile.depletion_width) {
      const double taper = 1.0 - x / profile.depletion_width;
      edge += profile.barrier * taper * taper;
    }
    profile.samples.push_back({x, edge});
  }
  return profile;
}

double distance_to_nearest_gate(const DeviceGeometry& geometry, double x, double y, double z) {
  if (geometry.gates.empty()) {
    // Fall back on the depth below the (gated) top surface.
    return z;
  }
  double best = std::numeric_limits<double>::infinity();
  for (const GatePatch& g : geometry.gates) {
    const double dx = std::max({g.x0 - x, 0.0, x - g.x1});
    const double dy = std::max({g.y0 - y, 0.0, y - g.y1});
    best = std::min(best, std::sqrt(dx * dx + dy * dy + z * z));
  }
  return best;
}

double local_fermi_level(double distance, double v_gate, const DeviceGeometry& geometry,
                         const BandParameters& bands) {
  const double phi =
      bands.built_in_barrier() + static_cast<double>(bands.bias_polarity) * v_gate;
  const double w = depletion_width(phi, geometry);
  const double bulk_fermi = constants::band_gap_ev - bands.bulk_ec_offset;
  if (!(w > 0.0) || distance >= w) {
    return bulk_fermi;
  }
  // Gate-induced Fermi shift at the defect: rises with s*v_gate and tapers
  // quadratically to zero at the depletion edge. Note the sign relative to
  // the Schottky diagram of band_profile: the observed polarity is that
  // increasingly positive bias converts VV0 to VV-, i.e. the local Fermi
  // level rises toward the gate at positive effective barrier.
  const double taper = 1.0 - distance / w;
  return bulk_fermi + phi * taper * taper;
}

ChargeState steady_charge_state(const DefectConfig& defect, double v_gate,
                                const DeviceGeometry& geometry, const BandParameters& bands,
                                const ChargeLevels& levels) {
  geometry.validate();
  bands.validate();
  levels.validate();
  const double d = distance_to_nearest_gate(geometry, defect.x, defect.y, defect.z);
  const double fermi = local_fermi_level(d, v_gate, geometry, bands);
  // Ties at a transition level break toward VV_0.
  if (fermi < levels.level_plus_0) return ChargeState::VV_plus;
  if (fermi <= levels.level_0_minus) return ChargeState::VV_0;
  if (fermi <= levels.level_minus_2minus) return ChargeState::VV_minus;
  return ChargeState::VV_2minus;
}

double charge_transition_voltage(const DefectConfig& defect, const DeviceGeometry& geometry,
                                 const BandParameters& bands, const ChargeLevels& levels,
                                 double v_max) {
  auto dark_above = [&](double v) {
    const ChargeState s = steady_charge_state(defect, v, geometry, bands, levels);
    return s == ChargeState::VV_minus || s == ChargeState::VV_2minus;
  };
  double lo = 0.0;
  if (dark_above(lo)) lo = -v_max;
  if (dark_above(lo)) return -std::numeric_limits<double>::infinity();
  if (!dark_above(v_max)) return std::numeric_limits<double>::infinity();
  double hi = v_max;
  for (int i = 0; i < 80; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (dark_above(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

bool is_quenched_by_transverse_field(const DefectConfig& defect, const FieldVector& field) {
  return field.perp_magnitude() >= defect.quench_field;
}

}  // namespace dvtk
