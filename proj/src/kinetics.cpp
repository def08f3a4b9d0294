#include "dvtk/kinetics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace dvtk {

namespace {

// splitmix64; used to derive independent per-cycle seeds from the root seed.
std::uint64_t split_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

double exp_draw(std::mt19937_64& rng, double rate) {
  if (!(rate > 0.0)) return std::numeric_limits<double>::infinity();
  std::uniform_real_distribution<double> uni(std::numeric_limits<double>::min(), 1.0);
  return -std::log(uni(rng)) / rate;
}

}  // namespace

void RateModel::validate() const {
  if (!(slope_0_minus >= 0.0 && slope_minus_0 >= 0.0)) {
    throw std::invalid_argument("rate slopes must be non-negative");
  }
  if (!(delay_alpha >= 0.0 && delay_beta >= 0.0)) {
    throw std::invalid_argument("delay coefficients must be non-negative");
  }
  if (!(v_high > v_low)) {
    throw std::invalid_argument("v_high must exceed v_low");
  }
}

Rates rates_from_power(const RateModel& model, double power) {
  model.validate();
  if (!(power >= 0.0)) {
    throw std::invalid_argument("optical power must be non-negative");
  }
  return {model.slope_0_minus * power, model.slope_minus_0 * power};
}

double charging_delay(const RateModel& model, double power) {
  model.validate();
  if (!(power > 0.0)) {
    throw std::invalid_argument("charging delay is infinite at zero optical power");
  }
  return (model.delay_alpha + model.delay_beta * (model.v_high - model.v_low)) / power;
}

double occupancy_after_step(const RateModel& model, double power, StepDirection direction,
                            double t) {
  if (!(t >= 0.0)) {
    throw std::invalid_argument("time must be non-negative");
  }
  const Rates rates = rates_from_power(model, power);
  if (direction == StepDirection::to_dark) {
    return std::exp(-rates.gamma_0_minus * t);
  }
  const double tau = charging_delay(model, power);
  return 1.0 / (1.0 + std::exp(-(t - tau) * rates.gamma_minus_0));
}

double TelegraphTrace::bright_time(double t0, double t1) const {
  double total = 0.0;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const double seg_start = events[i].time;
    const double seg_end = i + 1 < events.size() ? events[i + 1].time : duration;
    if (events[i].state != ChargeState::VV_0) continue;
    total += std::max(0.0, std::min(seg_end, t1) - std::max(seg_start, t0));
  }
  return total;
}

TelegraphTrace simulate_telegraph(const RateModel& model, double power, double v_gate,
                                  double duration, std::uint64_t seed) {
  if (!(duration > 0.0)) {
    throw std::invalid_argument("duration must be positive");
  }
  Rates rates = rates_from_power(model, power);
  if (v_gate < model.v_threshold) rates.gamma_0_minus = 0.0;
  if (v_gate > model.v_threshold) rates.gamma_minus_0 = 0.0;

  TelegraphTrace trace;
  trace.duration = duration;
  trace.rng_seed = seed;
  std::mt19937_64 rng(seed);

  const double total = rates.gamma_0_minus + rates.gamma_minus_0;
  ChargeState state = ChargeState::VV_0;
  if (total > 0.0) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    state = uni(rng) < rates.gamma_minus_0 / total ? ChargeState::VV_0 : ChargeState::VV_minus;
  }

  double t = 0.0;
  trace.events.push_back({t, state});
  while (true) {
    const double rate =
        state == ChargeState::VV_0 ? rates.gamma_0_minus : rates.gamma_minus_0;
    const double dwell = exp_draw(rng, rate);
    t += dwell;
    if (!(t < duration)) break;
    state = state == ChargeState::VV_0 ? ChargeState::VV_minus : ChargeState::VV_0;
    trace.events.push_back({t, state});
  }
  return trace;
}

StepResponse step_response_trace(const RateModel& model, double power, double bin_us,
                                 std::size_t n_cycles, std::uint64_t seed,
                                 double lambda_bright, double lambda_dark,
                                 double half_period) {
  if (!(bin_us > 0.0)) {
    throw std::invalid_argument("bin must be positive");
  }
  if (n_cycles == 0) {
    throw std::invalid_argument("need at least one cycle");
  }
  const Rates rates = rates_from_power(model, power);
  if (!(rates.gamma_0_minus > 0.0 && rates.gamma_minus_0 > 0.0)) {
    throw std::invalid_argument("step response needs both transition rates positive");
  }
  const double tau = charging_delay(model, power);

  if (half_period <= 0.0) {
    half_period = std::max(8.0 / rates.gamma_0_minus, tau + 8.0 / rates.gamma_minus_0);
    half_period = bin_us * std::ceil(half_period / bin_us);
  }

  const auto n_bins = static_cast<std::size_t>(std::ceil(2.0 * half_period / bin_us));
  std::vector<double> bright_sum(n_bins, 0.0);

  // Accumulate bright time within [t0, t1) of the cycle into the bins.
  auto deposit = [&](double t0, double t1) {
    if (!(t1 > t0)) return;
    auto first = static_cast<std::size_t>(t0 / bin_us);
    for (std::size_t b = first; b < n_bins; ++b) {
      const double b0 = bin_us * static_cast<double>(b);
      const double b1 = b0 + bin_us;
      if (b0 >= t1) break;
      bright_sum[b] += std::max(0.0, std::min(t1, b1) - std::max(t0, b0));
    }
  };

  const double sigma0 = 1.0 / (1.0 + std::exp(rates.gamma_minus_0 * tau));
  for (std::size_t cycle = 0; cycle < n_cycles; ++cycle) {
    std::mt19937_64 rng(split_seed(seed, cycle));
    std::uniform_real_distribution<double> uni(std::numeric_limits<double>::min(), 1.0);

    // First half: bias at v_high, bright decays exponentially.
    const double t_dark = exp_draw(rng, rates.gamma_0_minus);
    deposit(0.0, std::min(t_dark, half_period));

    // Second half: bias back at v_low. The ensemble recovery follows the
    // delayed sigmoid exactly: a fraction sigma(0) is already bright at the
    // edge and the rest flips with the time-dependent hazard gamma*sigma(t),
    // sampled here by inversion of its survival function.
    double t_bright;
    if (uni(rng) < sigma0) {
      t_bright = 0.0;
    } else {
      const double u = uni(rng);
      const double arg = (1.0 + std::exp(-rates.gamma_minus_0 * tau)) / u - 1.0;
      t_bright = tau + std::log(arg) / rates.gamma_minus_0;
    }
    if (t_bright < half_period) {
      deposit(half_period + t_bright, 2.0 * half_period);
    }
  }

  StepResponse out;
  out.half_period = half_period;
  out.rng_seed = seed;
  out.time.reserve(n_bins);
  out.occupancy.reserve(n_bins);
  out.pl.reserve(n_bins);
  const double norm = bin_us * static_cast<double>(n_cycles);
  for (std::size_t b = 0; b < n_bins; ++b) {
    const double occ = bright_sum[b] / norm;
    out.time.push_back(bin_us * (static_cast<double>(b) + 0.5));
    out.occupancy.push_back(occ);
    out.pl.push_back((lambda_dark + (lambda_bright - lambda_dark) * occ) * bin_us);
  }
  return out;
}

}  // namespace dvtk
