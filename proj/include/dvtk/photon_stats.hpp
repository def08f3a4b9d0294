#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "dvtk/kinetics.hpp"

namespace dvtk {

// Binned photon counts from a readout trace.
struct PhotonHistogram {
  double bin_duration = 8.0;            // ms
  std::map<int, std::uint64_t> counts;  // photon number -> occurrences

  std::uint64_t total() const;
};

struct CountSeries {
  PhotonHistogram histogram;
  std::vector<int> per_bin;       // sampled counts
  std::vector<double> bin_means;  // exact per-bin expectations
};

// Poisson photon counts from a telegraph trace: per bin the expectation is
// lambda_bright * (bright dwell) + lambda_dark * (dark dwell), with exact
// dwell-time integration inside each bin. Lambdas in counts per ms.
CountSeries generate_counts(const TelegraphTrace& trace, double lambda_bright,
                            double lambda_dark, double bin_ms, std::uint64_t seed);

// Two-Poisson mixture decomposition.
struct MixtureFit {
  double lambda_dark = 0.0;    // mean counts per bin
  double lambda_bright = 0.0;  // mean counts per bin; always > lambda_dark
  double p_bright = 0.0;
  double log_likelihood = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  bool low_data = false;  // histogram carried fewer than 100 bins
};

struct MixtureInit {
  double lambda_dark = 0.0;
  double lambda_bright = 0.0;
  double p_bright = 0.5;
};

// Expectation-maximization on the two-Poisson mixture. Log-likelihood is
// monotone nondecreasing per iteration; labels are normalized so
// lambda_bright > lambda_dark. Throws std::invalid_argument on a degenerate
// (single-support) histogram.
MixtureFit em_fit_poisson_mixture(const PhotonHistogram& hist,
                                  std::optional<MixtureInit> init = std::nullopt);

// Integer-threshold single-shot readout characterization.
struct ReadoutResult {
  int threshold = 0;            // classify bright when counts >= threshold
  double fidelity = 0.0;        // 1 - (p_dark_above + p_bright_below) / 2
  double p_dark_above = 0.0;    // P(X_dark >= threshold)
  double p_bright_below = 0.0;  // P(X_bright < threshold)
};

// Exhaustive scan over integer thresholds with exact Poisson tails; ties
// break toward the smaller threshold. Throws when the rates do not separate.
ReadoutResult optimal_threshold(double lambda_dark, double lambda_bright);

// Full simulated charge-population curve: telegraph + counts + mixture fit
// per gate voltage. The darkening threshold voltage is taken from the
// charge_state module so both routes agree on the transition.
struct PopulationStack {
  RateModel rates;
  double power = 2.5;          // mW um^-2
  double lambda_bright = 0.6;  // counts per ms
  double lambda_dark = 0.0125; // counts per ms
  double bin_ms = 8.0;
  std::size_t n_bins = 2000;
  std::uint64_t seed = 1;
};

std::vector<std::pair<double, double>> population_vs_voltage(
    const DefectConfig& defect, const DeviceGeometry& geometry, const BandParameters& bands,
    const ChargeLevels& levels, const std::vector<double>& voltages,
    const PopulationStack& stack);

}  // namespace dvtk
