#pragma once

#include <vector>

namespace dvtk {

// Rectangular metal electrode on the top surface (z = 0) of the membrane.
// Extents in um, voltage in V.
struct GatePatch {
  double x0 = 0.0;
  double x1 = 0.0;
  double y0 = 0.0;
  double y1 = 0.0;
  double voltage = 0.0;

  double width_x() const { return x1 - x0; }
  double width_y() const { return y1 - y0; }
};

// Gated membrane device: everything electrostatic lives here.
struct DeviceGeometry {
  double membrane_thickness = 120.0;  // um
  double lateral_extent = 240.0;      // um, x span of the solved cross-section
  double dielectric_constant = 9.6;
  double donor_density = 2.5e14;      // cm^-3
  std::vector<GatePatch> gates;
  double back_plane_voltage = 0.0;    // V, Dirichlet plane at z = thickness

  // Throws std::invalid_argument on violated invariants (non-positive
  // thickness, epsilon < 1, non-positive donor density, degenerate or
  // overlapping gate patches, patches outside the lateral extent).
  void validate() const;
};

// Metal-semiconductor band lineup plus the bias-polarity convention.
struct BandParameters {
  double electron_affinity = 4.17;    // eV, 4H-SiC
  double metal_work_function = 4.3;   // eV, Ti
  // Sign s applied to the gate bias when forming the effective barrier
  // phi = phi_bi + s * V. +1 means positive bias deepens the depleted
  // (dark) region.
  int bias_polarity = 1;
  // Conduction-band edge minus Fermi level in the undepleted bulk (eV).
  double bulk_ec_offset = 0.1;

  double built_in_barrier() const { return metal_work_function - electron_affinity; }

  void validate() const;
};

}  // namespace dvtk
