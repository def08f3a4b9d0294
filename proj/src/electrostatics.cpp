#include "dvtk/electrostatics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include "dvtk/constants.hpp"
#include "dvtk/errors.hpp"

namespace dvtk {

namespace {

bool overlap_1d(double a0, double a1, double b0, double b1) {
  return a0 < b1 && b0 < a1;
}

}  // namespace

void GatePatch_validate(const GatePatch& g) {
  if (!(g.width_x() > 0.0) || !(g.width_y() > 0.0)) {
    throw std::invalid_argument("gate patch must have positive area");
  }
  if (!std::isfinite(g.voltage)) {
    throw std::invalid_argument("gate voltage must be finite");
  }
}

void DeviceGeometry::validate() const {
  if (!(membrane_thickness > 0.0)) {
    throw std::invalid_argument("membrane thickness must be positive");
  }
  if (!(lateral_extent > 0.0)) {
    throw std::invalid_argument("lateral extent must be positive");
  }
  if (!(dielectric_constant >= 1.0)) {
    throw std::invalid_argument("dielectric constant must be >= 1");
  }
  if (!(donor_density > 0.0)) {
    throw std::invalid_argument("donor density must be positive");
  }
  for (std::size_t i = 0; i < gates.size(); ++i) {
    GatePatch_validate(gates[i]);
    if (gates[i].x0 < 0.0 || gates[i].x1 > lateral_extent) {
      throw std::invalid_argument("gate " + std::to_string(i) + " outside lateral extent");
    }
    for (std::size_t j = i + 1; j < gates.size(); ++j) {
      if (overlap_1d(gates[i].x0, gates[i].x1, gates[j].x0, gates[j].x1) &&
          overlap_1d(gates[i].y0, gates[i].y1, gates[j].y0, gates[j].y1)) {
        throw std::invalid_argument("gate patches " + std::to_string(i) + " and " +
                                    std::to_string(j) + " overlap");
      }
    }
  }
  if (!std::isfinite(back_plane_voltage)) {
    throw std::invalid_argument("back plane voltage must be finite");
  }
}

void BandParameters::validate() const {
  if (!std::isfinite(electron_affinity) || !std::isfinite(metal_work_function)) {
    throw std::invalid_argument("band parameters must be finite");
  }
  if (bias_polarity != 1 && bias_polarity != -1) {
    throw std::invalid_argument("bias polarity must be +1 or -1");
  }
}

double FieldVector::perp_magnitude() const {
  return std::hypot(f_perp_x, f_perp_y);
}

FieldVector uniform_vertical_field(double v_gate, const DeviceGeometry& geometry) {
  if (!std::isfinite(v_gate)) {
    throw std::invalid_argument("gate voltage must be finite");
  }
  geometry.validate();
  FieldVector f;
  // V / um == MV/m, no unit factor needed.
  f.f_parallel = v_gate / (geometry.membrane_thickness * geometry.dielectric_constant);
  return f;
}

FieldSolution::FieldSolution(std::size_t nx, std::size_t nz, double dx, double dz, double epsilon,
                             std::vector<double> potential, std::vector<bool> dirichlet)
    : nx_(nx), nz_(nz), dx_(dx), dz_(dz), epsilon_(epsilon),
      phi_(std::move(potential)), dirichlet_(std::move(dirichlet)) {}

double FieldSolution::interior_residual() const {
  double scale = 0.0;
  for (std::size_t i = 0; i < phi_.size(); ++i) {
    if (dirichlet_[i]) scale = std::max(scale, std::abs(phi_[i]));
  }
  if (scale == 0.0) scale = 1.0;

  const double cx = 1.0 / (dx_ * dx_);
  const double cz = 1.0 / (dz_ * dz_);
  double worst = 0.0;
  for (std::size_t iz = 0; iz < nz_; ++iz) {
    for (std::size_t ix = 0; ix < nx_; ++ix) {
      if (dirichlet_[iz * nx_ + ix]) continue;
      // Mirror ghost nodes across Neumann boundaries.
      const double c = potential(ix, iz);
      const double w = potential(ix == 0 ? 1 : ix - 1, iz);
      const double e = potential(ix == nx_ - 1 ? nx_ - 2 : ix + 1, iz);
      const double n = potential(ix, iz == 0 ? 1 : iz - 1);
      const double s = potential(ix, iz == nz_ - 1 ? nz_ - 2 : iz + 1);
      const double lap = cx * (w + e - 2.0 * c) + cz * (n + s - 2.0 * c);
      // Scale by the diagonal so the residual is commensurate with phi.
      worst = std::max(worst, std::abs(lap) / (2.0 * (cx + cz)));
    }
  }
  return worst / scale;
}

FieldSolution solve_laplace(const DeviceGeometry& geometry, const GridSpec& grid,
                            const SolverOptions& options) {
  geometry.validate();
  if (grid.nx < 4 || grid.nz < 4) {
    throw std::invalid_argument("grid must have at least 4 nodes per axis");
  }
  const std::size_t nx = grid.nx;
  const std::size_t nz = grid.nz;
  const double dx = geometry.lateral_extent / static_cast<double>(nx - 1);
  const double dz = geometry.membrane_thickness / static_cast<double>(nz - 1);

  for (const GatePatch& g : geometry.gates) {
    if (g.width_x() < 4.0 * dx) {
      throw std::invalid_argument("grid does not resolve the smallest gate with >= 4 cells");
    }
  }

  std::vector<double> phi(nx * nz, 0.0);
  std::vector<bool> dirichlet(nx * nz, false);

  // Back plane.
  for (std::size_t ix = 0; ix < nx; ++ix) {
    phi[(nz - 1) * nx + ix] = geometry.back_plane_voltage;
    dirichlet[(nz - 1) * nx + ix] = true;
  }
  // Gate patches on the top surface.
  for (const GatePatch& g : geometry.gates) {
    for (std::size_t ix = 0; ix < nx; ++ix) {
      const double x = dx * static_cast<double>(ix);
      if (x >= g.x0 - 0.5 * dx && x <= g.x1 + 0.5 * dx) {
        phi[ix] = g.voltage;
        dirichlet[ix] = true;
      }
    }
  }

  double scale = 0.0;
  for (std::size_t i = 0; i < phi.size(); ++i) {
    if (dirichlet[i]) scale = std::max(scale, std::abs(phi[i]));
  }
  if (scale == 0.0) {
    // All boundaries grounded: the solution is identically zero.
    return FieldSolution(nx, nz, dx, dz, geometry.dielectric_constant,
                         std::move(phi), std::move(dirichlet));
  }

  const double cx = 1.0 / (dx * dx);
  const double cz = 1.0 / (dz * dz);
  const double diag = 2.0 * (cx + cz);
  const double omega = options.relaxation;

  auto at = [&](std::size_t ix, std::size_t iz) { return phi[iz * nx + ix]; };

  double residual = 0.0;
  double sweep_tol = options.relative_residual;
  for (std::size_t iter = 0; iter < options.max_iterations; ++iter) {
    residual = 0.0;
    for (std::size_t iz = 0; iz < nz; ++iz) {
      for (std::size_t ix = 0; ix < nx; ++ix) {
        const std::size_t idx = iz * nx + ix;
        if (dirichlet[idx]) continue;
        const double w = at(ix == 0 ? 1 : ix - 1, iz);
        const double e = at(ix == nx - 1 ? nx - 2 : ix + 1, iz);
        const double n = at(ix, iz == 0 ? 1 : iz - 1);
        const double s = at(ix, iz == nz - 1 ? nz - 2 : iz + 1);
        const double gs = (cx * (w + e) + cz * (n + s)) / diag;
        const double delta = gs - phi[idx];
        phi[idx] += omega * delta;
        residual = std::max(residual, std::abs(delta));
      }
    }
    if (residual / scale <= sweep_tol) {
      // The max sweep update is only a proxy; confirm against the actual
      // discrete-Laplacian residual and tighten if it is not there yet.
      FieldSolution candidate(nx, nz, dx, dz, geometry.dielectric_constant, phi, dirichlet);
      if (candidate.interior_residual() <= options.relative_residual) {
        return candidate;
      }
      sweep_tol *= 0.5;
    }
  }
  throw SolverError("Laplace SOR did not converge within the iteration cap",
                    residual / scale);
}

FieldVector field_at(const FieldSolution& sol, double x, double z) {
  const double eps_pos = 1e-9;
  if (!(x >= -eps_pos && x <= sol.domain_width() + eps_pos) ||
      !(z >= -eps_pos && z <= sol.domain_depth() + eps_pos)) {
    throw std::invalid_argument("field_at position outside the solved domain");
  }
  x = std::clamp(x, 0.0, sol.domain_width());
  z = std::clamp(z, 0.0, sol.domain_depth());

  const std::size_t nx = sol.nx();
  const std::size_t nz = sol.nz();
  const double fx_cell = x / sol.dx();
  const double fz_cell = z / sol.dz();
  std::size_t ix = std::min(static_cast<std::size_t>(fx_cell), nx - 2);
  std::size_t iz = std::min(static_cast<std::size_t>(fz_cell), nz - 2);
  const double tx = fx_cell - static_cast<double>(ix);
  const double tz = fz_cell - static_cast<double>(iz);

  // Central-difference gradient at a node (one-sided at the domain edge).
  auto grad = [&](std::size_t i, std::size_t k) {
    const std::size_t il = i == 0 ? 0 : i - 1;
    const std::size_t ir = i == nx - 1 ? nx - 1 : i + 1;
    const std::size_t kl = k == 0 ? 0 : k - 1;
    const std::size_t kr = k == nz - 1 ? nz - 1 : k + 1;
    const double gx = (sol.potential(ir, k) - sol.potential(il, k)) /
                      (static_cast<double>(ir - il) * sol.dx());
    const double gz = (sol.potential(i, kr) - sol.potential(i, kl)) /
                      (static_cast<double>(kr - kl) * sol.dz());
    return std::pair<double, double>{gx, gz};
  };

  const auto g00 = grad(ix, iz);
  const auto g10 = grad(ix + 1, iz);
  const auto g01 = grad(ix, iz + 1);
  const auto g11 = grad(ix + 1, iz + 1);
  const double gx = (1 - tx) * (1 - tz) * g00.first + tx * (1 - tz) * g10.first +
                    (1 - tx) * tz * g01.first + tx * tz * g11.first;
  const double gz = (1 - tx) * (1 - tz) * g00.second + tx * (1 - tz) * g10.second +
                    (1 - tx) * tz * g01.second + tx * tz * g11.second;

  FieldVector f;
  f.f_perp_x = -gx / sol.epsilon();
  f.f_parallel = -gz / sol.epsilon();
  return f;
}

double depletion_width(double barrier_height, const DeviceGeometry& geometry) {
  if (!std::isfinite(barrier_height)) {
    throw std::invalid_argument("barrier height must be finite");
  }
  const double nd_m3 = geometry.donor_density * 1e6;  // cm^-3 -> m^-3
  const double w_m = std::sqrt(2.0 * geometry.dielectric_constant *
                               constants::vacuum_permittivity * std::abs(barrier_height) /
                               (constants::elementary_charge * nd_m3));
  return w_m * 1e6;  // m -> um
}

double barrier_for_depletion_width(double distance, const DeviceGeometry& geometry) {
  if (!(distance >= 0.0)) {
    throw std::invalid_argument("distance must be non-negative");
  }
  const double nd_m3 = geometry.donor_density * 1e6;
  const double w_m = distance * 1e-6;
  return w_m * w_m * constants::elementary_charge * nd_m3 /
         (2.0 * geometry.dielectric_constant * constants::vacuum_permittivity);
}

double transition_voltage_for_distance(double distance, const DeviceGeometry& geometry,
                                       const BandParameters& bands) {
  if (!(distance > 0.0)) {
    throw std::invalid_argument("distance must be positive");
  }
  bands.validate();
  const double phi = barrier_for_depletion_width(distance, geometry);
  // On the deepening branch phi_bi + s V_t = s * phi, so
  // V_t = phi - s * phi_bi; the d -> 0 limit is -phi_bi / s.
  return phi - static_cast<double>(bands.bias_polarity) * bands.built_in_barrier();
}

}  // namespace dvtk
