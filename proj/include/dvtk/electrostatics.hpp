#pragma once

#include <cstddef>
#include <vector>

#include "dvtk/geometry.hpp"

namespace dvtk {

// Screened electric field at a defect, in MV/m. f_parallel points along the
// defect symmetry axis (crystal c-axis = membrane normal, +z into the
// membrane); f_perp_* are the in-plane components.
struct FieldVector {
  double f_parallel = 0.0;
  double f_perp_x = 0.0;
  double f_perp_y = 0.0;

  double perp_magnitude() const;
};

struct GridSpec {
  std::size_t nx = 256;
  std::size_t nz = 128;
};

struct SolverOptions {
  double relative_residual = 1e-8;
  std::size_t max_iterations = 1'000'000;
  double relaxation = 1.9;  // SOR over-relaxation factor
};

// Potential on a node-centered (x, z) grid over [0, lateral_extent] x
// [0, thickness]. Immutable after construction; safe to share across threads.
class FieldSolution {
 public:
  FieldSolution(std::size_t nx, std::size_t nz, double dx, double dz, double epsilon,
                std::vector<double> potential, std::vector<bool> dirichlet);

  std::size_t nx() const { return nx_; }
  std::size_t nz() const { return nz_; }
  double dx() const { return dx_; }
  double dz() const { return dz_; }
  double epsilon() const { return epsilon_; }
  double domain_width() const { return dx_ * static_cast<double>(nx_ - 1); }
  double domain_depth() const { return dz_ * static_cast<double>(nz_ - 1); }

  double potential(std::size_t ix, std::size_t iz) const { return phi_[iz * nx_ + ix]; }
  bool is_dirichlet(std::size_t ix, std::size_t iz) const { return dirichlet_[iz * nx_ + ix]; }

  // Max-norm of the discrete Laplacian over non-Dirichlet nodes, relative to
  // the largest boundary value.
  double interior_residual() const;

 private:
  std::size_t nx_, nz_;
  double dx_, dz_;
  double epsilon_;
  std::vector<double> phi_;
  std::vector<bool> dirichlet_;
};

// Uniform-field estimate F_parallel = V / (t * epsilon); in-plane zero.
// Throws std::invalid_argument on non-finite input.
FieldVector uniform_vertical_field(double v_gate, const DeviceGeometry& geometry);

// SOR solve of the Laplace equation on the (x, z) cross-section. Dirichlet on
// gate patches (using their x extents) and the back plane; zero normal
// derivative on side walls and the ungated top surface. Throws SolverError on
// non-convergence.
FieldSolution solve_laplace(const DeviceGeometry& geometry, const GridSpec& grid = {},
                            const SolverOptions& options = {});

// Screened internal field F = -grad(phi) / epsilon at (x, z), bilinear
// interpolation of central-difference gradients. y is carried by the caller's
// position but the 2D solution has no y dependence. Throws
// std::invalid_argument outside the solved domain.
FieldVector field_at(const FieldSolution& solution, double x, double z);

// Schottky depletion width w_d = sqrt(2 eps eps0 |phi| / (e N_d)), in um.
double depletion_width(double barrier_height, const DeviceGeometry& geometry);

// Barrier magnitude |phi| (V) whose depletion width equals `distance` (um);
// inverse of depletion_width.
double barrier_for_depletion_width(double distance, const DeviceGeometry& geometry);

// Gate voltage V_t at which the depletion edge reaches a defect at `distance`
// um from the gate: solves w_d(|phi_bi + s V_t|) = distance on the
// depletion-deepening branch. Monotone increasing in distance.
double transition_voltage_for_distance(double distance, const DeviceGeometry& geometry,
                                       const BandParameters& bands);

}  // namespace dvtk
