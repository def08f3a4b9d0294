#pragma once

#include <string>
#include <vector>

#include "dvtk/electrostatics.hpp"
#include "dvtk/geometry.hpp"

namespace dvtk {

struct DefectConfig;  // stark.hpp

// Stable charge states of the divacancy within the band gap. Only VV_0 is
// optically bright in this model.
enum class ChargeState { VV_plus, VV_0, VV_minus, VV_2minus };

std::string to_string(ChargeState state);
bool is_bright(ChargeState state);

// Charge-transition levels, eV above the valence band maximum. Values are
// config inputs; the defaults are placeholders, not measured quantities.
struct ChargeLevels {
  double level_plus_0 = 1.1;
  double level_0_minus = 2.1;
  double level_minus_2minus = 2.6;

  void validate() const;  // strictly increasing, inside the gap
};

// Conduction-band edge relative to the Fermi level vs depth below the gate.
struct BandProfile {
  struct Sample {
    double depth = 0.0;              // um
    double conduction_band_edge = 0.0;  // eV, E_c - E_F
  };
  std::vector<Sample> samples;
  double depletion_width = 0.0;  // um
  double barrier = 0.0;          // V, signed effective barrier phi_bi + s*V
};

// Parabolic Schottky band bending: E_c - E_F = E_bulk + phi (1 - x/w_d)^2
// inside the depletion width, flat beyond it.
BandProfile band_profile(double v_gate, const DeviceGeometry& geometry,
                         const BandParameters& bands, std::size_t n_samples = 200);

// Distance (um) from a defect position to the nearest gate patch (gates sit
// on the z = 0 plane).
double distance_to_nearest_gate(const DeviceGeometry& geometry, double x, double y, double z);

// Steady-state charge state of a defect at its distance from the nearest
// gate. The gate-induced Fermi shift at the defect rises with s*v_gate and
// tapers quadratically to zero at the depletion edge; the resulting local
// Fermi position is compared against the transition levels. Monotone in
// v_gate; ties at a level break toward VV_0.
ChargeState steady_charge_state(const DefectConfig& defect, double v_gate,
                                const DeviceGeometry& geometry, const BandParameters& bands,
                                const ChargeLevels& levels);

// Local Fermi level above the valence band at a given distance and bias (eV).
double local_fermi_level(double distance, double v_gate, const DeviceGeometry& geometry,
                         const BandParameters& bands);

// Smallest gate voltage at which the defect leaves VV_0 toward VV_minus
// (bisection over steady_charge_state). Returns +inf if it never darkens
// within the searched range.
double charge_transition_voltage(const DefectConfig& defect, const DeviceGeometry& geometry,
                                 const BandParameters& bands, const ChargeLevels& levels,
                                 double v_max = 500.0);

// Empirical transverse-field fluorescence quench: true iff the in-plane field
// magnitude reaches the defect's quench threshold.
bool is_quenched_by_transverse_field(const DefectConfig& defect, const FieldVector& field);

}  // namespace dvtk
