#pragma once

// Physical constants and unit conventions used throughout the toolkit.
//
// Internal units: lengths in um, voltages in V, electric fields in MV/m
// (numerically equal to V/um), frequencies in GHz, times in us (photon
// bins in ms), optical power densities in mW um^-2, energies in eV,
// donor densities in cm^-3.

namespace dvtk::constants {

inline constexpr double vacuum_permittivity = 8.854e-12;  // F/m
inline constexpr double elementary_charge = 1.602e-19;    // C

// 4H-SiC
inline constexpr double band_gap_ev = 3.26;
inline constexpr double dielectric_breakdown_mvpm = 300.0;

}  // namespace dvtk::constants
