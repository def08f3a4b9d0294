#include "dvtk/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "dvtk/errors.hpp"

namespace dvtk {

ModelKind model_kind_from_name(const std::string& name) {
  if (name == "linear") return ModelKind::Linear;
  if (name == "exp_decay") return ModelKind::ExpDecay;
  if (name == "sigmoid") return ModelKind::Sigmoid;
  if (name == "lorentzian_pair") return ModelKind::LorentzianPair;
  throw ConfigError("unknown fit model '" + name + "'");
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Linear: return "linear";
    case ModelKind::ExpDecay: return "exp_decay";
    case ModelKind::Sigmoid: return "sigmoid";
    case ModelKind::LorentzianPair: return "lorentzian_pair";
  }
  return "?";
}

int ModelFunction::parameter_count() const {
  switch (kind) {
    case ModelKind::Linear: return 2;
    case ModelKind::ExpDecay: return 3;
    case ModelKind::Sigmoid: return 4;
    case ModelKind::LorentzianPair: return 5;
  }
  return 0;
}

std::vector<std::string> ModelFunction::parameter_names() const {
  switch (kind) {
    case ModelKind::Linear: return {"a", "b"};
    case ModelKind::ExpDecay: return {"A", "gamma", "B"};
    case ModelKind::Sigmoid: return {"A", "tau", "gamma", "B"};
    case ModelKind::LorentzianPair: return {"c1", "a1", "c2", "a2", "fwhm"};
  }
  return {};
}

double ModelFunction::evaluate(double x, const Eigen::VectorXd& p) const {
  switch (kind) {
    case ModelKind::Linear:
      return p[0] * x + p[1];
    case ModelKind::ExpDecay:
      return p[0] * std::exp(-p[1] * x) + p[2];
    case ModelKind::Sigmoid:
      return p[0] / (1.0 + std::exp(-(x - p[1]) * p[2])) + p[3];
    case ModelKind::LorentzianPair: {
      const double h = 0.5 * p[4];
      const double d1 = x - p[0];
      const double d2 = x - p[2];
      return p[1] * h * h / (d1 * d1 + h * h) + p[3] * h * h / (d2 * d2 + h * h);
    }
  }
  return 0.0;
}

Eigen::VectorXd ModelFunction::jacobian_row(double x, const Eigen::VectorXd& p) const {
  Eigen::VectorXd row(parameter_count());
  switch (kind) {
    case ModelKind::Linear:
      row << x, 1.0;
      break;
    case ModelKind::ExpDecay: {
      const double e = std::exp(-p[1] * x);
      row << e, -p[0] * x * e, 1.0;
      break;
    }
    case ModelKind::Sigmoid: {
      const double s = 1.0 / (1.0 + std::exp(-(x - p[1]) * p[2]));
      const double ds = s * (1.0 - s);
      row << s, -p[0] * p[2] * ds, p[0] * (x - p[1]) * ds, 1.0;
      break;
    }
    case ModelKind::LorentzianPair: {
      const double h = 0.5 * p[4];
      const double d1 = x - p[0];
      const double d2 = x - p[2];
      const double q1 = d1 * d1 + h * h;
      const double q2 = d2 * d2 + h * h;
      const double l1 = h * h / q1;
      const double l2 = h * h / q2;
      // d/dc: 2 a h^2 d / q^2 ; d/dw: a h d^2 / q^2 (via dh/dw = 1/2)
      row << 2.0 * p[1] * h * h * d1 / (q1 * q1), l1,
             2.0 * p[3] * h * h * d2 / (q2 * q2), l2,
             p[1] * h * d1 * d1 / (q1 * q1) + p[3] * h * d2 * d2 / (q2 * q2);
      break;
    }
  }
  return row;
}

Eigen::VectorXd ModelFunction::initial_guess(const std::vector<DataPoint>& data) const {
  const int n = static_cast<int>(data.size());
  auto minmax_y = [&] {
    double lo = data[0].y, hi = data[0].y;
    for (const DataPoint& d : data) {
      lo = std::min(lo, d.y);
      hi = std::max(hi, d.y);
    }
    return std::pair<double, double>{lo, hi};
  };
  Eigen::VectorXd p(parameter_count());
  switch (kind) {
    case ModelKind::Linear: {
      // Closed-form least squares is its own starting point.
      double sx = 0, sy = 0, sxx = 0, sxy = 0;
      for (const DataPoint& d : data) {
        sx += d.x; sy += d.y; sxx += d.x * d.x; sxy += d.x * d.y;
      }
      const double det = n * sxx - sx * sx;
      if (std::abs(det) > 1e-300) {
        p << (n * sxy - sx * sy) / det, (sy * sxx - sx * sxy) / det;
      } else {
        p << 0.0, sy / n;
      }
      break;
    }
    case ModelKind::ExpDecay: {
      // Log-linear regression on the background-subtracted data.
      const auto [lo, hi] = minmax_y();
      const double b = lo - 1e-3 * (hi - lo);
      double sx = 0, sy = 0, sxx = 0, sxy = 0;
      int m = 0;
      for (const DataPoint& d : data) {
        const double v = d.y - b;
        if (v <= 0.0) continue;
        const double ly = std::log(v);
        sx += d.x; sy += ly; sxx += d.x * d.x; sxy += d.x * ly;
        ++m;
      }
      double gamma = 1.0, log_a = std::log(std::max(hi - lo, 1e-12));
      const double det = m * sxx - sx * sx;
      if (m >= 2 && std::abs(det) > 1e-300) {
        const double slope = (m * sxy - sx * sy) / det;
        gamma = std::max(-slope, 1e-6);
        log_a = (sy * sxx - sx * sxy) / det;
      }
      p << std::exp(log_a), gamma, lo;
      break;
    }
    case ModelKind::Sigmoid: {
      const auto [lo, hi] = minmax_y();
      const double half = 0.5 * (lo + hi);
      double tau = data[n / 2].x;
      double x25 = data.front().x, x75 = data.back().x;
      for (int i = 0; i + 1 < n; ++i) {
        if ((data[i].y - half) * (data[i + 1].y - half) <= 0.0) {
          tau = 0.5 * (data[i].x + data[i + 1].x);
          break;
        }
      }
      for (const DataPoint& d : data) {
        if (d.y < lo + 0.25 * (hi - lo)) x25 = std::max(x25, d.x);
      }
      for (auto it = data.rbegin(); it != data.rend(); ++it) {
        if (it->y > lo + 0.75 * (hi - lo)) x75 = std::min(x75, it->x);
      }
      const double rise = std::max(std::abs(x75 - x25), 1e-6);
      p << hi - lo, tau, 2.2 / rise, lo;
      break;
    }
    case ModelKind::LorentzianPair: {
      // The two largest local maxima seed the peak centers.
      int best = 0, second = -1;
      for (int i = 1; i + 1 < n; ++i) {
        if (data[i].y >= data[i - 1].y && data[i].y >= data[i + 1].y) {
          if (data[i].y > data[best].y) {
            second = best;
            best = i;
          } else if (second < 0 || data[i].y > data[second].y) {
            second = i;
          }
        }
      }
      if (second < 0) second = best;
      const double span = std::abs(data.back().x - data.front().x);
      p << data[best].x, data[best].y, data[second].x, data[second].y,
           std::max(span / 20.0, 1e-6);
      break;
    }
  }
  return p;
}

ModelFunction ModelFunction::make(ModelKind kind) {
  ModelFunction m;
  m.kind = kind;
  const double inf = std::numeric_limits<double>::infinity();
  const int np = m.parameter_count();
  m.lower_bounds = Eigen::VectorXd::Constant(np, -inf);
  m.upper_bounds = Eigen::VectorXd::Constant(np, inf);
  switch (kind) {
    case ModelKind::ExpDecay:
      m.lower_bounds[1] = 1e-12;  // gamma > 0
      break;
    case ModelKind::Sigmoid:
      m.lower_bounds[2] = 1e-12;
      break;
    case ModelKind::LorentzianPair:
      m.lower_bounds[4] = 1e-12;  // fwhm > 0
      break;
    default:
      break;
  }
  return m;
}

namespace {

double weight_of(const DataPoint& d) {
  const double sigma = d.sigma ? *d.sigma : std::sqrt(std::max(d.y, 1.0));
  if (!(sigma > 0.0)) {
    throw std::invalid_argument("data sigma must be positive");
  }
  return 1.0 / sigma;
}

Eigen::VectorXd clamp_params(const ModelFunction& model, Eigen::VectorXd p) {
  for (int i = 0; i < p.size(); ++i) {
    p[i] = std::clamp(p[i], model.lower_bounds[i], model.upper_bounds[i]);
  }
  return p;
}

}  // namespace

FitResult fit(const ModelFunction& model, const std::vector<DataPoint>& data,
              std::optional<Eigen::VectorXd> initial, const FitOptions& options) {
  const int np = model.parameter_count();
  const int n = static_cast<int>(data.size());
  if (n < 2 * np) {
    throw std::invalid_argument("need at least 2x more points than parameters");
  }
  for (const DataPoint& d : data) {
    if (!std::isfinite(d.x) || !std::isfinite(d.y)) {
      throw std::invalid_argument("data must be finite");
    }
  }

  Eigen::VectorXd p = clamp_params(model, initial ? *initial : model.initial_guess(data));
  Eigen::VectorXd w(n);
  for (int i = 0; i < n; ++i) w[i] = weight_of(data[i]);

  auto residuals = [&](const Eigen::VectorXd& params) {
    Eigen::VectorXd r(n);
    for (int i = 0; i < n; ++i) {
      r[i] = w[i] * (data[i].y - model.evaluate(data[i].x, params));
    }
    return r;
  };
  auto jacobian = [&](const Eigen::VectorXd& params) {
    Eigen::MatrixXd j(n, np);
    for (int i = 0; i < n; ++i) {
      j.row(i) = w[i] * model.jacobian_row(data[i].x, params).transpose();
    }
    return j;
  };

  Eigen::VectorXd r = residuals(p);
  double cost = r.squaredNorm();
  double lambda = 1e-3;
  bool converged = false;
  std::size_t iter = 0;

  for (; iter < options.max_iterations; ++iter) {
    const Eigen::MatrixXd j = jacobian(p);
    const Eigen::MatrixXd jtj = j.transpose() * j;
    const Eigen::VectorXd jtr = j.transpose() * r;

    bool accepted = false;
    for (int attempt = 0; attempt < 30; ++attempt) {
      Eigen::MatrixXd damped = jtj;
      damped.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
      const Eigen::VectorXd step = damped.ldlt().solve(jtr);
      const Eigen::VectorXd trial = clamp_params(model, p + step);
      const Eigen::VectorXd rt = residuals(trial);
      const double trial_cost = rt.squaredNorm();
      if (trial_cost <= cost) {
        const double decrease = cost - trial_cost;
        const double step_norm = (trial - p).norm();
        p = trial;
        r = rt;
        const double prev = cost;
        cost = trial_cost;
        lambda = std::max(lambda * 0.3, 1e-14);
        accepted = true;
        if (decrease <= options.cost_tolerance * std::max(prev, 1e-300) ||
            step_norm <= options.step_tolerance) {
          converged = true;
        }
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted || converged) {
      converged = converged || !accepted;  // stall with no downhill step = done
      ++iter;
      break;
    }
  }

  // Covariance from the Jacobian at the optimum, scaled by reduced chi-square.
  const Eigen::MatrixXd j = jacobian(p);
  const Eigen::MatrixXd jtj = j.transpose() * j;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(jtj, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const double cond_floor = svd.singularValues()[0] * 1e-13;
  if (!(svd.singularValues()[np - 1] > cond_floor)) {
    const Eigen::VectorXd null_dir = svd.matrixV().col(np - 1);
    const auto names = model.parameter_names();
    std::string combo;
    for (int i = 0; i < np; ++i) {
      if (std::abs(null_dir[i]) > 0.3) {
        if (!combo.empty()) combo += ", ";
        combo += names[i];
      }
    }
    throw RankDeficiencyError("singular normal equations; unidentifiable combination of {" +
                              combo + "}");
  }
  Eigen::MatrixXd cov = jtj.inverse();
  const int dof = std::max(n - np, 1);
  const double reduced_chi2 = cost / static_cast<double>(dof);
  cov *= reduced_chi2;
  cov = 0.5 * (cov + cov.transpose());  // enforce exact symmetry

  FitResult result;
  result.parameters = p;
  result.covariance = cov;
  result.ci95.resize(np);
  for (int i = 0; i < np; ++i) {
    result.ci95[i] = 1.96 * std::sqrt(std::max(cov(i, i), 0.0));
  }
  result.residual_norm = std::sqrt(cost);
  result.converged = converged;
  result.iterations = iter;
  return result;
}

double jacobian_check(const ModelFunction& model, const Eigen::VectorXd& point,
                      const std::vector<double>& xs) {
  const int np = model.parameter_count();
  double worst = 0.0;
  for (double x : xs) {
    const Eigen::VectorXd analytic = model.jacobian_row(x, point);
    for (int i = 0; i < np; ++i) {
      const double h = 1e-6 * std::max(std::abs(point[i]), 1.0);
      Eigen::VectorXd lo = point, hi = point;
      lo[i] -= h;
      hi[i] += h;
      const double numeric = (model.evaluate(x, hi) - model.evaluate(x, lo)) / (2.0 * h);
      const double scale = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
      worst = std::max(worst, std::abs(analytic[i] - numeric) / scale);
    }
  }
  return worst;
}

}  // namespace dvtk
