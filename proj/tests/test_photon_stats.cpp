#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "dvtk/photon_stats.hpp"
#include "dvtk/stark.hpp"

using namespace dvtk;

namespace {

TelegraphTrace constant_trace(ChargeState state, double duration_us) {
  TelegraphTrace trace;
  trace.duration = duration_us;
  trace.events = {{0.0, state}};
  return trace;
}

PhotonHistogram synthetic_mixture(double lambda_dark, double lambda_bright, double p_bright,
                                  std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution pick(p_bright);
  std::poisson_distribution<int> bright(lambda_bright);
  std::poisson_distribution<int> dark(lambda_dark);
  PhotonHistogram hist;
  for (std::size_t i = 0; i < n; ++i) {
    ++hist.counts[pick(rng) ? bright(rng) : dark(rng)];
  }
  return hist;
}

}  // namespace

TEST_CASE("count generation") {
  SUBCASE("all-dark trace with zero background is silent") {
    const CountSeries s =
        generate_counts(constant_trace(ChargeState::VV_minus, 80000.0), 0.625, 0.0, 8.0, 1);
    REQUIRE(s.per_bin.size() == 10);
    for (int k : s.per_bin) CHECK(k == 0);
  }
  SUBCASE("all-bright trace samples around the Poisson mean") {
    const std::size_t n_bins = 400;
    const CountSeries s = generate_counts(
        constant_trace(ChargeState::VV_0, 8000.0 * n_bins), 0.625, 0.0, 8.0, 2);
    REQUIRE(s.per_bin.size() == n_bins);
    double mean = 0.0;
    for (int k : s.per_bin) mean += k;
    mean /= static_cast<double>(n_bins);
    // 3 sigma of the sample mean at lambda*bin = 5
    CHECK(mean == doctest::Approx(5.0).epsilon(3.0 * std::sqrt(5.0 / n_bins) / 5.0));
  }
  SUBCASE("exact dwell integration conserves expectation") {
    TelegraphTrace trace;
    trace.duration = 16000.0;
    trace.events = {{0.0, ChargeState::VV_0},
                    {3700.0, ChargeState::VV_minus},
                    {9200.0, ChargeState::VV_0}};
    const double lb = 0.6, ld = 0.0125, bin = 1.0;
    const CountSeries s = generate_counts(trace, lb, ld, bin, 3);
    double sum = 0.0;
    for (double m : s.bin_means) sum += m;
    const double t_bright_ms = (3700.0 + 16000.0 - 9200.0) / 1000.0;
    const double t_dark_ms = 16.0 - t_bright_ms;
    CHECK(sum == doctest::Approx(lb * t_bright_ms + ld * t_dark_ms).epsilon(1e-12));
  }
  SUBCASE("slow telegraph gives a bimodal histogram, fast an unimodal one") {
    RateModel model;
    // Slow: dwell ~ 33 ms vs 8 ms bins; bright bins average 10 counts.
    RateModel slow = model;
    slow.slope_0_minus = slow.slope_minus_0 = 3.0e-8;
    const TelegraphTrace ts = simulate_telegraph(slow, 1000.0, 6.0, 8000.0 * 3000, 5);
    const CountSeries cs = generate_counts(ts, 1.25, 0.0125, 8.0, 6);
    std::size_t low = 0, high = 0, mid = 0;
    for (const auto& [k, c] : cs.histogram.counts) {
      if (k <= 1) low += c;
      else if (k >= 6) high += c;
      else mid += c;
    }
    CHECK(low > mid);
    CHECK(high > mid);

    // Fast: dwell ~ 0.4 ms vs 8 ms bins; counts pile up near the average.
    const TelegraphTrace tf = simulate_telegraph(model, 7.5e-3, 6.0, 8000.0 * 3000, 7);
    const CountSeries cf = generate_counts(tf, 1.25, 0.0125, 8.0, 8);
    const double avg = 0.5 * (10.0 + 0.1);
    std::size_t near = 0, total = 0;
    for (const auto& [k, c] : cf.histogram.counts) {
      total += c;
      if (std::abs(k - avg) <= 3.0) near += c;
    }
    CHECK(near > 3 * (total - near));
  }
  SUBCASE("input validation") {
    CHECK_THROWS_AS(generate_counts(constant_trace(ChargeState::VV_0, 10.0), -1.0, 0.0, 8.0, 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(generate_counts(constant_trace(ChargeState::VV_0, 10.0), 1.0, 0.0, 0.0, 1),
                    std::invalid_argument);
  }
}

TEST_CASE("poisson mixture EM") {
  SUBCASE("single-component data collapses to p_bright = 1") {
    std::mt19937_64 rng(4);
    std::poisson_distribution<int> pois(5.0);
    PhotonHistogram hist;
    for (int i = 0; i < 10000; ++i) ++hist.counts[pois(rng)];
    const MixtureFit fit = em_fit_poisson_mixture(hist);
    CHECK(fit.p_bright == doctest::Approx(1.0).epsilon(0.01));
    CHECK(fit.lambda_bright == doctest::Approx(5.0).epsilon(0.03));
    CHECK(fit.converged);
  }
  SUBCASE("recovers the mixing fraction of a synthetic mixture") {
    const PhotonHistogram hist = synthetic_mixture(0.1, 5.0, 0.5, 10000, 11);
    const MixtureFit fit = em_fit_poisson_mixture(hist);
    CHECK(fit.p_bright == doctest::Approx(0.5).epsilon(0.04));
    CHECK(fit.lambda_bright == doctest::Approx(5.0).epsilon(0.05));
    CHECK(fit.lambda_dark == doctest::Approx(0.1).epsilon(0.5));
    CHECK(fit.lambda_bright > fit.lambda_dark);
  }
  SUBCASE("strong-bias sample reports a near-unity bright population") {
    const PhotonHistogram hist = synthetic_mixture(0.1, 5.0, 0.999, 10000, 12);
    const MixtureFit fit = em_fit_poisson_mixture(hist);
    CHECK(fit.p_bright >= 0.99);
  }
  SUBCASE("invariant under histogram scaling") {
    const PhotonHistogram hist = synthetic_mixture(0.1, 5.0, 0.4, 5000, 13);
    PhotonHistogram scaled = hist;
    for (auto& [k, c] : scaled.counts) c *= 7;
    const MixtureFit a = em_fit_poisson_mixture(hist);
    const MixtureFit b = em_fit_poisson_mixture(scaled);
    CHECK(a.p_bright == doctest::Approx(b.p_bright).epsilon(1e-6));
    CHECK(a.lambda_bright == doctest::Approx(b.lambda_bright).epsilon(1e-6));
  }
  SUBCASE("low-data flag below 100 bins") {
    const PhotonHistogram hist = synthetic_mixture(0.1, 5.0, 0.5, 50, 14);
    CHECK(em_fit_poisson_mixture(hist).low_data);
  }
  SUBCASE("degenerate single-support histogram rejected") {
    PhotonHistogram hist;
    hist.counts[3] = 500;
    CHECK_THROWS_AS(em_fit_poisson_mixture(hist), std::invalid_argument);
  }
  SUBCASE("explicit initialization is honored") {
    const PhotonHistogram hist = synthetic_mixture(0.1, 5.0, 0.5, 10000, 15);
    const MixtureFit fit = em_fit_poisson_mixture(hist, MixtureInit{0.2, 4.0, 0.4});
    CHECK(fit.p_bright == doctest::Approx(0.5).epsilon(0.04));
  }
}

TEST_CASE("optimal readout threshold") {
  SUBCASE("reference operating point") {
    const ReadoutResult r = optimal_threshold(0.1, 5.0);
    CHECK(r.threshold == 2);
    CHECK(r.fidelity == doctest::Approx(0.9775).epsilon(1e-3));
    CHECK(r.fidelity == doctest::Approx(1.0 - 0.5 * (r.p_dark_above + r.p_bright_below))
                            .epsilon(1e-12));
  }
  SUBCASE("zero-background limit") {
    const ReadoutResult r = optimal_threshold(0.0, 5.0);
    CHECK(r.threshold == 1);
    CHECK(r.p_dark_above == 0.0);
  }
  SUBCASE("matches a brute-force scan exactly") {
    const double ld = 0.3, lb = 6.5;
    const ReadoutResult r = optimal_threshold(ld, lb);
    auto cdf_below = [](double lambda, int theta) {
      double pmf = std::exp(-lambda), cdf = 0.0;
      for (int k = 0; k < theta; ++k) {
        cdf += pmf;
        pmf *= lambda / static_cast<double>(k + 1);
      }
      return cdf;
    };
    double best = 1.0;
    for (int theta = 0; theta < 200; ++theta) {
      best = std::min(best,
                      0.5 * ((1.0 - cdf_below(ld, theta)) + cdf_below(lb, theta)));
    }
    CHECK(r.fidelity == doctest::Approx(1.0 - best).epsilon(1e-12));
  }
  SUBCASE("fidelity grows with separation") {
    double prev = 0.0;
    for (double lb : {1.0, 2.0, 4.0, 8.0, 16.0}) {
      const double f = optimal_threshold(0.1, lb).fidelity;
      CHECK(f >= prev);
      prev = f;
    }
  }
  SUBCASE("equal rates rejected") {
    CHECK_THROWS_AS(optimal_threshold(2.0, 2.0), std::invalid_argument);
  }
}

TEST_CASE("population vs voltage") {
  DefectConfig defect;
  defect.z = 3.3;  // transition near -7.1 V with default bands/levels
  DeviceGeometry geometry;
  BandParameters bands;
  ChargeLevels levels;
  PopulationStack stack;
  stack.n_bins = 300;
  stack.seed = 21;

  const double vt = charge_transition_voltage(defect, geometry, bands, levels);
  REQUIRE(std::isfinite(vt));

  SUBCASE("saturates on both sides and crosses at the charge-state threshold") {
    std::vector<double> voltages;
    for (double v = -9.0; v <= -6.0 + 1e-9; v += 0.25) voltages.push_back(v);
    const auto curve =
        population_vs_voltage(defect, geometry, bands, levels, voltages, stack);
    REQUIRE(curve.size() == voltages.size());
    double v_cross = voltages.front();
    for (std::size_t i = 0; i < curve.size(); ++i) {
      const auto& [v, p] = curve[i];
      if (v < vt - 0.25) CHECK(p >= 0.99);
      if (v > vt + 0.25) CHECK(p <= 0.01);
      if (i > 0 && curve[i - 1].second >= 0.5 && p < 0.5) {
        v_cross = 0.5 * (curve[i - 1].first + v);
      }
    }
    CHECK(std::abs(v_cross - vt) <= 0.25);
  }
  SUBCASE("empty voltage list rejected") {
    CHECK_THROWS_AS(population_vs_voltage(defect, geometry, bands, levels, {}, stack),
                    std::invalid_argument);
  }
}
