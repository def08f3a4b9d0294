#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dvtk {

struct DataPoint {
  double x = 0.0;
  double y = 0.0;
  std::optional<double> sigma;  // defaults to sqrt(max(y, 1)) when absent
};

// The model functions used throughout: exponential decay and delayed sigmoid
// for the charge kinetics, a Lorentzian pair for PLE spectra, and a line.
enum class ModelKind { Linear, ExpDecay, Sigmoid, LorentzianPair };

ModelKind model_kind_from_name(const std::string& name);
std::string to_string(ModelKind kind);

// Parameter layout per model:
//   Linear         (a, b)                 a*x + b
//   ExpDecay       (A, gamma, B)          A*exp(-gamma*x) + B
//   Sigmoid        (A, tau, gamma, B)     A/(1 + exp(-(x - tau)*gamma)) + B
//   LorentzianPair (c1, a1, c2, a2, w)    peak-height amplitudes, shared FWHM w
struct ModelFunction {
  ModelKind kind = ModelKind::Linear;
  Eigen::VectorXd lower_bounds;  // empty = unbounded
  Eigen::VectorXd upper_bounds;

  int parameter_count() const;
  std::vector<std::string> parameter_names() const;
  double evaluate(double x, const Eigen::VectorXd& p) const;
  // Analytic Jacobian row df/dp at x.
  Eigen::VectorXd jacobian_row(double x, const Eigen::VectorXd& p) const;
  // Starting point heuristics from the data.
  Eigen::VectorXd initial_guess(const std::vector<DataPoint>& data) const;

  static ModelFunction make(ModelKind kind);
};

struct FitResult {
  Eigen::VectorXd parameters;
  Eigen::MatrixXd covariance;
  std::vector<double> ci95;  // 1.96 * sqrt(diag(covariance))
  double residual_norm = 0.0;
  bool converged = false;
  std::size_t iterations = 0;
};

struct FitOptions {
  std::size_t max_iterations = 200;
  double cost_tolerance = 1e-10;  // relative cost decrease
  double step_tolerance = 1e-12;  // step norm
};

// Damped Gauss-Newton (Levenberg-Marquardt) weighted least squares.
// Covariance is (J^T W J)^-1 scaled by the reduced chi-square. Throws
// RankDeficiencyError naming the unidentifiable parameter combination when
// the normal equations are singular at the optimum.
FitResult fit(const ModelFunction& model, const std::vector<DataPoint>& data,
              std::optional<Eigen::VectorXd> initial = std::nullopt,
              const FitOptions& options = {});

// Max relative discrepancy between the analytic Jacobian and a central
// difference (relative step 1e-6) over a probe set of x values.
double jacobian_check(const ModelFunction& model, const Eigen::VectorXd& point,
                      const std::vector<double>& xs);

}  // namespace dvtk
