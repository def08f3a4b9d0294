#include "dvtk/photon_stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "dvtk/stark.hpp"

namespace dvtk {

std::uint64_t PhotonHistogram::total() const {
  std::uint64_t n = 0;
  for (const auto& [k, c] : counts) n += c;
  return n;
}

CountSeries generate_counts(const TelegraphTrace& trace, double lambda_bright,
                            double lambda_dark, double bin_ms, std::uint64_t seed) {
  if (!(lambda_bright >= 0.0 && lambda_dark >= 0.0)) {
    throw std::invalid_argument("photon rates must be non-negative");
  }
  if (!(bin_ms > 0.0)) {
    throw std::invalid_argument("bin duration must be positive");
  }
  const double bin_us = bin_ms * 1000.0;
  const auto n_bins = static_cast<std::size_t>(std::floor(trace.duration / bin_us));

  CountSeries out;
  out.histogram.bin_duration = bin_ms;
  out.per_bin.reserve(n_bins);
  out.bin_means.reserve(n_bins);

  std::mt19937_64 rng(seed);
  for (std::size_t b = 0; b < n_bins; ++b) {
    const double t0 = bin_us * static_cast<double>(b);
    const double t1 = t0 + bin_us;
    const double bright_ms = trace.bright_time(t0, t1) / 1000.0;
    const double mean = lambda_bright * bright_ms + lambda_dark * (bin_ms - bright_ms);
    out.bin_means.push_back(mean);
    int k = 0;
    if (mean > 0.0) {
      std::poisson_distribution<int> poisson(mean);
      k = poisson(rng);
    }
    out.per_bin.push_back(k);
    ++out.histogram.counts[k];
  }
  return out;
}

namespace {

double poisson_log_pmf(int k, double lambda) {
  if (lambda <= 0.0) {
    return k == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  }
  return static_cast<double>(k) * std::log(lambda) - lambda -
         std::lgamma(static_cast<double>(k) + 1.0);
}

struct EmRun {
  double lambda_d, lambda_b, p_b, loglike;
  std::size_t iterations;
  bool converged;
};

EmRun run_em(const std::vector<std::pair<int, double>>& data, double total, MixtureInit init) {
  constexpr double kTolerance = 1e-8;
  constexpr std::size_t kMaxIterations = 10'000;
  constexpr double kLambdaFloor = 1e-12;

  double ld = std::max(init.lambda_dark, kLambdaFloor);
  double lb = std::max(init.lambda_bright, ld + kLambdaFloor);
  double p = std::clamp(init.p_bright, 1e-6, 1.0 - 1e-6);

  double loglike = -std::numeric_limits<double>::infinity();
  std::size_t iter = 0;
  bool converged = false;
  for (; iter < kMaxIterations; ++iter) {
    double sum_r = 0.0, sum_rk = 0.0, sum_qk = 0.0, new_loglike = 0.0;
    for (const auto& [k, w] : data) {
      const double log_b = std::log(p) + poisson_log_pmf(k, lb);
      const double log_d = std::log1p(-p) + poisson_log_pmf(k, ld);
      const double m = std::max(log_b, log_d);
      const double denom = std::exp(log_b - m) + std::exp(log_d - m);
      const double r = std::exp(log_b - m) / denom;  // bright responsibility
      new_loglike += w * (m + std::log(denom));
      sum_r += w * r;
      sum_rk += w * r * static_cast<double>(k);
      sum_qk += w * (1.0 - r) * static_cast<double>(k);
    }
    const double new_p = sum_r / total;
    const double new_lb = sum_r > 0.0 ? sum_rk / sum_r : kLambdaFloor;
    const double new_ld = total - sum_r > 0.0 ? sum_qk / (total - sum_r) : kLambdaFloor;

    const double change = std::abs(new_p - p) + std::abs(new_lb - lb) + std::abs(new_ld - ld);
    p = std::clamp(new_p, 0.0, 1.0);
    lb = std::max(new_lb, kLambdaFloor);
    ld = std::max(new_ld, kLambdaFloor);
    loglike = new_loglike;
    if (change < kTolerance) {
      converged = true;
      ++iter;
      break;
    }
  }
  if (lb < ld) {
    std::swap(lb, ld);
    p = 1.0 - p;
  }
  return {ld, lb, p, loglike, iter, converged};
}

}  // namespace

MixtureFit em_fit_poisson_mixture(const PhotonHistogram& hist, std::optional<MixtureInit> init) {
  const double total = static_cast<double>(hist.total());
  if (hist.counts.size() < 2) {
    throw std::invalid_argument("histogram support is degenerate; mixture fit needs >= 2 distinct counts");
  }

  std::vector<std::pair<int, double>> data;
  data.reserve(hist.counts.size());
  for (const auto& [k, c] : hist.counts) data.emplace_back(k, static_cast<double>(c));

  std::vector<MixtureInit> starts;
  if (init) {
    starts.push_back(*init);
  } else {
    // Quartile means of the count distribution, then two perturbed restarts
    // to step around the degenerate local optimum.
    std::vector<int> sorted;
    for (const auto& [k, c] : hist.counts) {
      sorted.insert(sorted.end(), c, k);
    }
    double lo = 0.0, hi = 0.0;
    std::size_t nlo = 0, nhi = 0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      if (i < sorted.size() / 4) { lo += sorted[i]; ++nlo; }
      if (i >= 3 * sorted.size() / 4) { hi += sorted[i]; ++nhi; }
    }
    lo /= static_cast<double>(std::max<std::size_t>(nlo, 1));
    hi /= static_cast<double>(std::max<std::size_t>(nhi, 1));
    starts.push_back({lo, std::max(hi, lo + 0.5), 0.5});
    starts.push_back({0.5 * lo, 1.5 * std::max(hi, lo + 0.5), 0.3});
    starts.push_back({lo + 0.25 * (hi - lo), 0.75 * std::max(hi, lo + 0.5) + 0.25 * lo, 0.7});
  }

  EmRun best{0, 0, 0, -std::numeric_limits<double>::infinity(), 0, false};
  for (const MixtureInit& s : starts) {
    const EmRun run = run_em(data, total, s);
    if (run.loglike > best.loglike) best = run;
  }

  // On single-component data the mixture likelihood has a flat ridge and p
  // is unidentified. Collapse to one Poisson unless the mixture improves the
  // log-likelihood by a clearly significant margin.
  double mean = 0.0;
  for (const auto& [k, w] : data) mean += w * static_cast<double>(k);
  mean /= total;
  double single_loglike = 0.0;
  for (const auto& [k, w] : data) single_loglike += w * poisson_log_pmf(k, mean);
  if (best.loglike - single_loglike < 5.0) {
    MixtureFit fit;
    fit.lambda_dark = 0.0;
    fit.lambda_bright = mean;
    fit.p_bright = 1.0;
    fit.log_likelihood = single_loglike;
    fit.iterations = best.iterations;
    fit.converged = true;
    fit.low_data = hist.total() < 100;
    return fit;
  }

  MixtureFit fit;
  fit.lambda_dark = best.lambda_d;
  fit.lambda_bright = best.lambda_b;
  fit.p_bright = best.p_b;
  fit.log_likelihood = best.loglike;
  fit.iterations = best.iterations;
  fit.converged = best.converged;
  fit.low_data = hist.total() < 100;
  return fit;
}

ReadoutResult optimal_threshold(double lambda_dark, double lambda_bright) {
  if (!(lambda_bright > lambda_dark) || !(lambda_dark >= 0.0)) {
    throw std::invalid_argument("need lambda_bright > lambda_dark >= 0");
  }
  const int theta_max =
      static_cast<int>(std::ceil(lambda_bright) + 10.0 * std::sqrt(std::max(lambda_bright, 1.0))) + 1;

  // Exact Poisson CDFs by pmf recursion.
  auto cdf_below = [](double lambda, int theta) {
    // P(X < theta)
    if (theta <= 0) return 0.0;
    if (lambda <= 0.0) return 1.0;
    double pmf = std::exp(-lambda);
    double cdf = pmf;
    for (int k = 1; k < theta; ++k) {
      pmf *= lambda / static_cast<double>(k);
      cdf += pmf;
    }
    return std::min(cdf, 1.0);
  };

  ReadoutResult best;
  double best_error = std::numeric_limits<double>::infinity();
  for (int theta = 0; theta <= theta_max; ++theta) {
    const double p_dark_above = 1.0 - cdf_below(lambda_dark, theta);
    const double p_bright_below = cdf_below(lambda_bright, theta);
    const double error = 0.5 * (p_dark_above + p_bright_below);
    if (error < best_error) {
      best_error = error;
      best = {theta, 1.0 - error, p_dark_above, p_bright_below};
    }
  }
  return best;
}

std::vector<std::pair<double, double>> population_vs_voltage(
    const DefectConfig& defect, const DeviceGeometry& geometry, const BandParameters& bands,
    const ChargeLevels& levels, const std::vector<double>& voltages,
    const PopulationStack& stack) {
  if (voltages.empty()) {
    throw std::invalid_argument("voltage list must be nonempty");
  }
  RateModel model = stack.rates;
  const double v_t = charge_transition_voltage(defect, geometry, bands, levels);
  if (std::isfinite(v_t)) {
    model.v_threshold = v_t;
  }

  const double duration_us = stack.bin_ms * 1000.0 * static_cast<double>(stack.n_bins);
  std::vector<std::pair<double, double>> out;
  out.reserve(voltages.size());
  for (std::size_t i = 0; i < voltages.size(); ++i) {
    const double v = voltages[i];
    const TelegraphTrace trace =
        simulate_telegraph(model, stack.power, v, duration_us, stack.seed + i);
    const CountSeries series =
        generate_counts(trace, stack.lambda_bright, stack.lambda_dark, stack.bin_ms,
                        stack.seed + 0x5DEECE66Dull + i);
    const double midpoint = 0.5 * (stack.lambda_bright + stack.lambda_dark) * stack.bin_ms;
    double p_bright;
    if (series.histogram.counts.size() < 2) {
      // All bins identical: classify by the count against the midpoint rate.
      p_bright = series.histogram.counts.begin()->first > midpoint ? 1.0 : 0.0;
    } else {
      const MixtureFit fit = em_fit_poisson_mixture(series.histogram);
      p_bright = fit.p_bright;
      // A collapsed single-component fit only says one state was occupied;
      // decide which from the configured emission rates.
      if (fit.p_bright == 1.0 && fit.lambda_dark == 0.0 && fit.lambda_bright <= midpoint) {
        p_bright = 0.0;
      }
    }
    out.emplace_back(v, p_bright);
  }
  return out;
}

}  // namespace dvtk
