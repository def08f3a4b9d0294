#pragma once

#include <array>
#include <optional>
#include <utility>
#include <vector>

#include "dvtk/charge_state.hpp"
#include "dvtk/electrostatics.hpp"
#include "dvtk/geometry.hpp"

namespace dvtk {

// A single c-axis divacancy: position, optical parameters and dipole-moment
// differences between excited and ground state.
struct DefectConfig {
  double x = 0.0, y = 0.0, z = 1.5;   // um, z is depth below the top surface
  double zpl_center = 264830.0;       // GHz
  double delta_d_parallel = 10.0;     // GHz per MV/m
  double delta_d_perp = 10.0;         // GHz per MV/m, config-only
  double strain_x = 15.0;             // GHz, in-plane strain splitting components
  double strain_y = 0.0;              // GHz; 2|delta| is the zero-field splitting
  double quench_field = 1.0;          // MV/m, transverse-field quench threshold
  double linewidth = 0.05;            // GHz, Lorentzian FWHM

  void validate() const;
};

// The two spin-conserving optical transitions. Frequencies are meaningful
// only when bright; E_x labels the upper branch.
struct TransitionPair {
  double nu_ex = 0.0;  // GHz
  double nu_ey = 0.0;  // GHz
  bool bright = false;

  double splitting() const { return nu_ex - nu_ey; }
};

struct LaserScan {
  double start = -40.0;  // GHz, offset from the ZPL center
  double stop = 40.0;
  double step = 0.05;

  std::vector<double> offsets() const;  // empty when start > stop
};

// Exact 2x2 orbital model: common-mode shift from the longitudinal field,
// branch splitting from strain plus the transverse dipole term. Dark when
// the transverse field reaches the quench threshold.
TransitionPair transition_frequencies(const DefectConfig& defect, const FieldVector& field);

// Linear branch shifts (d_par*F_par +/- d_perp*F_perp projected on the strain
// principal axis). Valid only in the strain-dominated limit; throws
// std::domain_error outside it, recommending transition_frequencies.
std::pair<double, double> linearized_shift(const DefectConfig& defect, const FieldVector& field);

// Sum of two unit-area Lorentzians at the transition frequencies; identically
// zero when the defect is dark. Frequencies in the result are offsets from
// the ZPL center.
std::vector<std::pair<double, double>> ple_spectrum(const DefectConfig& defect,
                                                    const FieldVector& field,
                                                    const LaserScan& scan);

enum class FieldModel { Uniform, Laplace };

// One row of a voltage sweep: the voltage applied to each gate patch.
struct GateSetting {
  std::vector<double> voltages;
};

struct StarkMapRow {
  double v_common = 0.0;   // mean gate voltage, the sweep coordinate
  bool bright = false;
  TransitionPair transitions;
  std::vector<double> intensity;  // one value per laser-scan offset
};

struct StarkMap {
  std::vector<double> offsets;  // GHz from the ZPL center
  std::vector<StarkMapRow> rows;
};

// PLE spectra across a voltage sweep with charge-state and quench gating.
// With FieldModel::Uniform the common-mode voltage sets a vertical field;
// with FieldModel::Laplace each setting is solved on the grid and the field
// evaluated at the defect position.
StarkMap stark_map(const DefectConfig& defect, const DeviceGeometry& geometry,
                   const BandParameters& bands, const ChargeLevels& levels,
                   const std::vector<GateSetting>& sweep, const LaserScan& scan,
                   FieldModel model = FieldModel::Uniform, const GridSpec& grid = {});

}  // namespace dvtk
