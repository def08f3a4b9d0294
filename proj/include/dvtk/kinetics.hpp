#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "dvtk/charge_state.hpp"

namespace dvtk {

// Charge transition rates vs optical power, plus the charging-delay law
// tau_charge = (alpha + beta * (v_high - v_low)) / power. The delay applies
// only to the dark -> bright direction.
struct RateModel {
  double slope_0_minus = 1.0 / 3.0;  // us^-1 per mW um^-2, VV0 -> VV-
  double slope_minus_0 = 1.0 / 3.0;  // us^-1 per mW um^-2, VV- -> VV0
  double delay_alpha = 1.0;          // us mW um^-2
  double delay_beta = 0.5;           // us mW um^-2 per V
  double v_low = 4.0;                // V, bright-stable bias
  double v_high = 8.0;               // V, dark-stable bias
  double v_threshold = 6.0;          // V, bias above which the dark state is stable
  double power_min = 0.3;            // mW um^-2, modeled range
  double power_max = 15.0;

  void validate() const;
};

struct Rates {
  double gamma_0_minus = 0.0;  // us^-1
  double gamma_minus_0 = 0.0;  // us^-1
};

// gamma = slope * power for both channels. Throws on negative power.
Rates rates_from_power(const RateModel& model, double power);

double charging_delay(const RateModel& model, double power);

enum class StepDirection { to_dark, to_bright };

// Analytic occupancy of VV0 after a bias step at t = 0:
// to_dark   p0(t) = exp(-gamma_0m t)
// to_bright p0(t) = 1 / (1 + exp(-(t - tau_charge) gamma_m0))
// Throws std::invalid_argument for to_bright at zero power (infinite delay).
double occupancy_after_step(const RateModel& model, double power, StepDirection direction,
                            double t);

// Two-state telegraph trajectory; events at strictly increasing times with
// alternating states, starting at t = 0.
struct TelegraphTrace {
  struct Event {
    double time = 0.0;  // us
    ChargeState state = ChargeState::VV_0;
  };
  std::vector<Event> events;
  double duration = 0.0;  // us
  std::uint64_t rng_seed = 0;

  // Total time spent bright inside [t0, t1].
  double bright_time(double t0, double t1) const;
};

// Continuous-time two-state Markov chain with exponential dwell times,
// gated by the gate bias: strictly below threshold the bright state is
// absorbing, strictly above the dark state is; at threshold both channels
// are active. Deterministic for a fixed seed (mt19937_64).
TelegraphTrace simulate_telegraph(const RateModel& model, double power, double v_gate,
                                  double duration, std::uint64_t seed);

// Ensemble-averaged square-wave bias response. Each cycle holds v_high for
// half_period (bright decays exponentially to dark) then v_low for
// half_period (dark recovers through the delayed sigmoid). PL is the
// occupancy scaled between the dark and bright emission rates.
struct StepResponse {
  std::vector<double> time = {};        // us, bin centers over one full cycle
  std::vector<double> occupancy = {};   // mean VV0 occupancy
  std::vector<double> pl = {};          // expected counts per bin
  double half_period = 0.0;             // us
  std::uint64_t rng_seed = 0;
};

StepResponse step_response_trace(const RateModel& model, double power, double bin_us,
                                 std::size_t n_cycles, std::uint64_t seed,
                                 double lambda_bright = 1.0, double lambda_dark = 0.0,
                                 double half_period = 0.0);

}  // namespace dvtk
