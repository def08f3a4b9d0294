#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "dvtk/config.hpp"
#include "dvtk/csv.hpp"
#include "dvtk/errors.hpp"
#include "dvtk/orchestrator.hpp"

using namespace dvtk;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("dvtk_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

const char* kSmallConfig = R"(# test device
[device]
thickness_um = 120

[gate.0]
x0_um = 80
x1_um = 160
y0_um = 80
y1_um = 160
voltage_v = -50

[sweep]
v_start_v = -9
v_stop_v = -6
v_points = 4
grid_nx = 33
grid_nz = 17

[defect.0]
depth_um = 3.3

[photon]
n_bins = 200

[output]
seed = 5
)";

}  // namespace

TEST_CASE("config parsing") {
  SUBCASE("sections, comments, typed getters") {
    ConfigFile f = ConfigFile::parse_text("[a]\nx = 1.5\n# note\ny = hello\n[b]\nn = 7\n");
    CHECK(f.get_number("a", "x", 0.0) == 1.5);
    CHECK(f.get_string("a", "y", "") == "hello");
    CHECK(f.get_integer("b", "n", 0) == 7);
    CHECK(f.get_number("a", "missing", 2.5) == 2.5);
    CHECK_NOTHROW(f.reject_unknown());
  }
  SUBCASE("unknown keys rejected with a line number") {
    ConfigFile f = ConfigFile::parse_text("[a]\nx = 1\ntypo_key = 2\n", "test.ini");
    (void)f.get_number("a", "x", 0.0);
    try {
      f.reject_unknown();
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      const std::string what = e.what();
      CHECK(what.find("test.ini:3") != std::string::npos);
      CHECK(what.find("typo_key") != std::string::npos);
    }
  }
  SUBCASE("malformed lines carry diagnostics") {
    CHECK_THROWS_AS(ConfigFile::parse_text("x = 1\n"), ConfigError);       // outside section
    CHECK_THROWS_AS(ConfigFile::parse_text("[a]\njust words\n"), ConfigError);
    ConfigFile f = ConfigFile::parse_text("[a]\nx = abc\n");
    CHECK_THROWS_AS(f.get_number("a", "x", 0.0), ConfigError);
  }
  SUBCASE("overrides") {
    ConfigFile f = ConfigFile::parse_text("[a]\nx = 1\n");
    f.apply_override("a.x=3.5");
    f.apply_override("b.y=2");
    CHECK(f.get_number("a", "x", 0.0) == 3.5);
    CHECK(f.get_number("b", "y", 0.0) == 2.0);
    CHECK_THROWS_AS(f.apply_override("no_equals"), ConfigError);
  }
  SUBCASE("content hash tracks content, not formatting") {
    ConfigFile a = ConfigFile::parse_text("[a]\nx = 1\ny = 2\n");
    ConfigFile b = ConfigFile::parse_text("[a]\n# comment\ny = 2\nx = 1\n");
    ConfigFile c = ConfigFile::parse_text("[a]\nx = 1\ny = 3\n");
    CHECK(a.content_hash() == b.content_hash());
    CHECK(a.content_hash() != c.content_hash());
  }
}

TEST_CASE("experiment config") {
  SUBCASE("defaults load from an empty file") {
    ConfigFile f = ConfigFile::parse_text("");
    const ExperimentConfig cfg = ExperimentConfig::load(f);
    CHECK(cfg.device.membrane_thickness == 120.0);
    CHECK(cfg.device.dielectric_constant == 9.6);
    CHECK(cfg.device.donor_density == 2.5e14);
    CHECK(cfg.bands.built_in_barrier() == doctest::Approx(0.13));
    CHECK(cfg.defects.size() == 1);
    CHECK(cfg.defects[0].zpl_center == 264830.0);
    CHECK(cfg.photon.bin_ms == 8.0);
    CHECK(cfg.output.seed == 1);
  }
  SUBCASE("sections populate the model types") {
    ConfigFile f = ConfigFile::parse_text(kSmallConfig);
    const ExperimentConfig cfg = ExperimentConfig::load(f);
    CHECK(cfg.device.gates.size() == 1);
    CHECK(cfg.device.gates[0].voltage == -50.0);
    CHECK(cfg.defects[0].z == 3.3);
    CHECK(cfg.sweep.v_points == 4);
    CHECK(cfg.sweep.voltages() == std::vector<double>{-9.0, -8.0, -7.0, -6.0});
    CHECK(cfg.photon.n_bins == 200);
  }
  SUBCASE("validation failures") {
    ConfigFile empty_sweep = ConfigFile::parse_text("[sweep]\nv_points = 0\n");
    CHECK_THROWS_AS(ExperimentConfig::load(empty_sweep), ConfigError);
    ConfigFile bad_fmt = ConfigFile::parse_text("[output]\nformat = pdf\n");
    CHECK_THROWS_AS(ExperimentConfig::load(bad_fmt), ConfigError);
    ConfigFile typo = ConfigFile::parse_text("[device]\nthickness = 120\n");
    CHECK_THROWS_AS(ExperimentConfig::load(typo), ConfigError);
  }
}

TEST_CASE("csv round trip") {
  const fs::path dir = temp_dir("csv");
  const fs::path path = dir / "t.csv";
  {
    CsvWriter w(path.string());
    w.comment("units: a um");
    w.columns({"a", "b"});
    w.row({1.5, -2.0});
    w.row({0.125, 3e8});
  }
  const CsvTable t = read_csv(path.string());
  REQUIRE(t.columns == std::vector<std::string>{"a", "b"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0][0] == 1.5);
  CHECK(t.rows[1][1] == 3e8);
}

TEST_CASE("subcommand runner") {
  SUBCASE("deterministic byte-identical artifacts for a fixed config and seed") {
    const fs::path dir = temp_dir("runner");
    const fs::path cfg = dir / "cfg.ini";
    std::ofstream(cfg) << kSmallConfig;

    RunOptions opt;
    opt.config_path = cfg.string();
    opt.out_dir = (dir / "a").string();
    std::ostringstream log;
    REQUIRE(run_subcommand("readout", opt, log) == kExitOk);
    opt.out_dir = (dir / "b").string();
    REQUIRE(run_subcommand("readout", opt, log) == kExitOk);

    for (const char* name : {"population.csv", "histogram.csv", "mixture_fit.txt"}) {
      CHECK(slurp(dir / "a" / name) == slurp(dir / "b" / name));
    }
    // Units and the config hash are embedded in every CSV header.
    const std::string pop = slurp(dir / "a" / "population.csv");
    CHECK(pop.find("config_hash") != std::string::npos);
    CHECK(pop.find("units:") != std::string::npos);
    const std::string manifest = slurp(dir / "a" / "manifest.txt");
    CHECK(manifest.find("seed: 5") != std::string::npos);
    CHECK(manifest.find(kToolkitVersion) != std::string::npos);
  }

  SUBCASE("a different seed changes the stochastic artifacts") {
    const fs::path dir = temp_dir("runner_seed");
    const fs::path cfg = dir / "cfg.ini";
    std::ofstream(cfg) << kSmallConfig;
    RunOptions opt;
    opt.config_path = cfg.string();
    opt.out_dir = (dir / "a").string();
    std::ostringstream log;
    REQUIRE(run_subcommand("telegraph", opt, log) == kExitOk);
    opt.out_dir = (dir / "b").string();
    opt.seed = 99;
    REQUIRE(run_subcommand("telegraph", opt, log) == kExitOk);
    CHECK(slurp(dir / "a" / "telegraph.csv") != slurp(dir / "b" / "telegraph.csv"));
  }

  SUBCASE("config errors exit with code 2 and leave no partial outputs") {
    const fs::path dir = temp_dir("runner_err");
    const fs::path cfg = dir / "cfg.ini";
    std::ofstream(cfg) << "[sweep]\nv_points = 0\n";
    RunOptions opt;
    opt.config_path = cfg.string();
    opt.out_dir = (dir / "out").string();
    std::ostringstream log;
    CHECK(run_subcommand("ple", opt, log) == kExitConfigError);
    CHECK_FALSE(fs::exists(dir / "out"));
    CHECK(log.str().find("config error") != std::string::npos);

    opt.config_path = (dir / "nope.ini").string();
    CHECK(run_subcommand("ple", opt, log) == kExitConfigError);
    CHECK(run_subcommand("frobnicate", opt, log) == kExitConfigError);
  }

  SUBCASE("numerical failures exit with code 3") {
    const fs::path dir = temp_dir("runner_num");
    const fs::path bad = dir / "bad.csv";
    {
      CsvWriter w(bad.string());
      w.columns({"x", "y"});
      for (int i = 0; i < 8; ++i) w.row({2.0, 5.0});  // rank-deficient in x
    }
    const fs::path cfg = dir / "cfg.ini";
    std::ofstream(cfg) << "[fit]\ninput = " << bad.string() << "\nmodel = linear\n";
    RunOptions opt;
    opt.config_path = cfg.string();
    opt.out_dir = (dir / "out").string();
    std::ostringstream log;
    CHECK(run_subcommand("fit", opt, log) == kExitNumericalError);
  }

  SUBCASE("fit subcommand reproduces known parameters") {
    const fs::path dir = temp_dir("runner_fit");
    const fs::path input = dir / "line.csv";
    {
      CsvWriter w(input.string());
      w.columns({"x", "y"});
      for (int i = 0; i < 20; ++i) w.row({0.5 * i, 2.0 * 0.5 * i + 1.0});
    }
    const fs::path cfg = dir / "cfg.ini";
    std::ofstream(cfg) << "[fit]\ninput = " << input.string() << "\nmodel = linear\n";
    RunOptions opt;
    opt.config_path = cfg.string();
    opt.out_dir = (dir / "out").string();
    std::ostringstream log;
    REQUIRE(run_subcommand("fit", opt, log) == kExitOk);
    const std::string report = slurp(dir / "out" / "fit_report.csv");
    CHECK(report.find("a,2,") != std::string::npos);
    CHECK(report.find("b,1,") != std::string::npos);
  }
}
