#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "dvtk/charge_state.hpp"
#include "dvtk/stark.hpp"

using namespace dvtk;

namespace {

int state_index(ChargeState s) {
  switch (s) {
    case ChargeState::VV_plus: return 0;
    case ChargeState::VV_0: return 1;
    case ChargeState::VV_minus: return 2;
    case ChargeState::VV_2minus: return 3;
  }
  return -1;
}

}  // namespace

TEST_CASE("charge state basics") {
  CHECK(to_string(ChargeState::VV_0) == "VV0");
  CHECK(to_string(ChargeState::VV_minus) == "VV-");
  CHECK(is_bright(ChargeState::VV_0));
  CHECK_FALSE(is_bright(ChargeState::VV_minus));
  CHECK_FALSE(is_bright(ChargeState::VV_plus));
  CHECK_FALSE(is_bright(ChargeState::VV_2minus));

  SUBCASE("levels must increase and stay in the gap") {
    ChargeLevels bad;
    bad.level_0_minus = bad.level_plus_0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    ChargeLevels outside;
    outside.level_minus_2minus = 3.5;
    CHECK_THROWS_AS(outside.validate(), std::invalid_argument);
    CHECK_NOTHROW(ChargeLevels{}.validate());
  }
}

TEST_CASE("band profile") {
  DeviceGeometry geometry;
  BandParameters bands;

  SUBCASE("flat bands at the flat-band voltage") {
    const BandProfile p = band_profile(-0.13, geometry, bands);
    CHECK(p.depletion_width < 1e-6);
    for (const auto& s : p.samples) {
      CHECK(s.conduction_band_edge == doctest::Approx(bands.bulk_ec_offset).epsilon(1e-9));
    }
  }
  SUBCASE("one-volt barrier") {
    // v chosen so phi_bi + v = 1 V exactly
    const BandProfile p = band_profile(0.87, geometry, bands);
    CHECK(p.barrier == doctest::Approx(1.0).epsilon(1e-12));
    // oracle: 0.74283 * sqrt(1 / 0.13) = 2.0603 um
    CHECK(p.depletion_width == doctest::Approx(2.0603).epsilon(2e-4));
    CHECK(p.samples.front().conduction_band_edge ==
          doctest::Approx(bands.bulk_ec_offset + 1.0).epsilon(1e-6));
  }
  SUBCASE("continuous, monotone, flat beyond the edge") {
    const BandProfile p = band_profile(20.0, geometry, bands);
    double prev = p.samples.front().conduction_band_edge;
    for (const auto& s : p.samples) {
      CHECK(s.conduction_band_edge <= prev + 1e-12);
      prev = s.conduction_band_edge;
      if (s.depth >= p.depletion_width) {
        CHECK(s.conduction_band_edge == doctest::Approx(bands.bulk_ec_offset).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("distance to nearest gate") {
  DeviceGeometry geometry;
  SUBCASE("gateless geometry falls back on depth") {
    CHECK(distance_to_nearest_gate(geometry, 5.0, 5.0, 3.0) == 3.0);
  }
  geometry.gates.push_back({10.0, 20.0, 10.0, 20.0, 0.0});
  SUBCASE("directly under the gate") {
    CHECK(distance_to_nearest_gate(geometry, 15.0, 15.0, 1.5) == doctest::Approx(1.5));
  }
  SUBCASE("lateral offset adds in quadrature") {
    CHECK(distance_to_nearest_gate(geometry, 24.0, 15.0, 3.0) ==
          doctest::Approx(5.0).epsilon(1e-12));
  }
  SUBCASE("nearest of several gates wins") {
    geometry.gates.push_back({100.0, 110.0, 10.0, 20.0, 0.0});
    CHECK(distance_to_nearest_gate(geometry, 99.0, 15.0, 0.0) ==
          doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("steady charge state") {
  DefectConfig defect;
  DeviceGeometry geometry;  // gateless: distance = depth
  BandParameters bands;
  ChargeLevels levels;

  SUBCASE("bias-step contrast around the transition") {
    defect.z = 3.3;
    CHECK(steady_charge_state(defect, -9.0, geometry, bands, levels) == ChargeState::VV_0);
    CHECK(steady_charge_state(defect, -6.0, geometry, bands, levels) ==
          ChargeState::VV_minus);
  }

  SUBCASE("monotone ordering in gate voltage") {
    defect.z = 3.3;
    int prev = -1;
    for (double v = -300.0; v <= 50.0; v += 0.5) {
      const int idx = state_index(steady_charge_state(defect, v, geometry, bands, levels));
      CHECK(idx >= prev);
      prev = idx;
    }
  }

  SUBCASE("bright set is a single interval") {
    defect.z = 3.3;
    int edges = 0;
    bool prev = is_bright(steady_charge_state(defect, -300.0, geometry, bands, levels));
    for (double v = -300.0; v <= 50.0; v += 0.25) {
      const bool bright = is_bright(steady_charge_state(defect, v, geometry, bands, levels));
      if (bright != prev) ++edges;
      prev = bright;
    }
    CHECK(edges <= 2);
  }

  SUBCASE("distant defects stay neutral across the full vertical sweep") {
    BandParameters bulk_bright = bands;
    bulk_bright.bulk_ec_offset = 1.26;  // bulk Fermi level in the VV0 window
    defect.z = 40.0;
    for (double v : {0.0, -100.0, -200.0, -300.0}) {
      CHECK(steady_charge_state(defect, v, geometry, bulk_bright, levels) ==
            ChargeState::VV_0);
    }
  }

  SUBCASE("tie at a transition level goes to VV0") {
    // Outside the depletion region the Fermi level is bulk; pick the offset so
    // it lands exactly on level_0_minus.
    BandParameters tied = bands;
    tied.bulk_ec_offset = 3.26 - levels.level_0_minus;
    defect.z = 30.0;
    CHECK(steady_charge_state(defect, 0.0, geometry, tied, levels) == ChargeState::VV_0);
  }

  SUBCASE("state ordering traversed monotonically with distance at fixed bias") {
    int prev = -1;
    for (double depth = 0.2; depth <= 20.0; depth += 0.1) {
      DefectConfig probe = defect;
      probe.z = depth;
      const int idx =
          state_index(steady_charge_state(probe, -50.0, geometry, bands, levels));
      CHECK(idx >= prev);
      prev = idx;
    }
  }
}

TEST_CASE("charge transition voltage") {
  DefectConfig defect;
  DeviceGeometry geometry;
  BandParameters bands;
  ChargeLevels levels;

  SUBCASE("bisection brackets the darkening edge") {
    defect.z = 3.3;
    const double vt = charge_transition_voltage(defect, geometry, bands, levels);
    CHECK(vt > -7.5);
    CHECK(vt < -6.0);
    CHECK(is_bright(steady_charge_state(defect, vt - 0.01, geometry, bands, levels)));
    CHECK_FALSE(is_bright(steady_charge_state(defect, vt + 0.01, geometry, bands, levels)));
  }
  SUBCASE("never-darkening defect reports +inf") {
    BandParameters bulk_bright = bands;
    bulk_bright.bulk_ec_offset = 1.26;
    defect.z = 60.0;
    CHECK(std::isinf(charge_transition_voltage(defect, geometry, bulk_bright, levels)));
  }
}

TEST_CASE("transverse-field quench predicate") {
  DefectConfig defect;  // quench_field = 1.0

  CHECK_FALSE(is_quenched_by_transverse_field(defect, {}));
  CHECK(is_quenched_by_transverse_field(defect, {0.0, 1.2, 0.0}));
  CHECK(is_quenched_by_transverse_field(defect, {0.0, 0.8, 0.8}));
  CHECK_FALSE(is_quenched_by_transverse_field(defect, {5.0, 0.5, 0.0}));
  CHECK(is_quenched_by_transverse_field(defect, {0.0, 1.0, 0.0}));  // threshold inclusive

  SUBCASE("deeper defects see weaker lateral fields under the same bias") {
    DeviceGeometry geometry;
    geometry.gates.push_back({60.0, 110.0, 60.0, 110.0, 40.0});
    geometry.gates.push_back({130.0, 180.0, 60.0, 110.0, -40.0});
    const FieldSolution sol = solve_laplace(geometry, {129, 65});
    const FieldVector shallow = field_at(sol, 120.0, 1.5);
    const FieldVector deep = field_at(sol, 120.0, 3.0);
    CHECK(deep.perp_magnitude() < shallow.perp_magnitude());
  }
}
