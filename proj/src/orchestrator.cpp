#include "dvtk/orchestrator.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "dvtk/config.hpp"
#include "dvtk/csv.hpp"
#include "dvtk/errors.hpp"
#include "dvtk/fit.hpp"
#include "dvtk/svg.hpp"

namespace dvtk {

namespace {

namespace fs = std::filesystem;

struct RunContext {
  ExperimentConfig cfg;
  fs::path out_dir;
  std::string subcommand;

  fs::path path(const std::string& name) const { return out_dir / name; }

  void stamp(CsvWriter& csv) const {
    csv.comment(std::string(kToolkitVersion));
    csv.comment("config_hash: " + std::to_string(cfg.config_hash));
    csv.comment("seed: " + std::to_string(cfg.output.seed));
  }
};

RunContext make_context(const std::string& subcommand, const RunOptions& options) {
  ConfigFile file = options.config_path.empty()
                        ? ConfigFile::parse_text("", "<defaults>")
                        : ConfigFile::parse_file(options.config_path);
  for (const std::string& o : options.overrides) file.apply_override(o);
  if (options.seed) file.apply_override("output.seed=" + std::to_string(*options.seed));
  if (options.out_dir) file.apply_override("output.directory=" + *options.out_dir);
  if (options.format) file.apply_override("output.format=" + *options.format);

  RunContext ctx;
  ctx.cfg = ExperimentConfig::load(file);
  ctx.subcommand = subcommand;
  ctx.out_dir = ctx.cfg.output.directory;
  fs::create_directories(ctx.out_dir);
  return ctx;
}

void write_manifest(const RunContext& ctx) {
  std::ofstream out(ctx.path("manifest.txt"));
  out << "toolkit: " << kToolkitVersion << "\n"
      << "subcommand: " << ctx.subcommand << "\n"
      << "config_hash: " << ctx.cfg.config_hash << "\n"
      << "seed: " << ctx.cfg.output.seed << "\n";
}

// Common-mode sweep settings: every gate at the same voltage (or a single
// value for a gateless geometry driven by the uniform model).
std::vector<GateSetting> common_mode_sweep(const ExperimentConfig& cfg) {
  std::vector<GateSetting> sweep;
  const std::size_t n = std::max<std::size_t>(cfg.device.gates.size(), 1);
  for (double v : cfg.sweep.voltages()) {
    sweep.push_back({std::vector<double>(n, v)});
  }
  return sweep;
}

void cmd_solve_field(const RunContext& ctx, std::ostream& log) {
  const ExperimentConfig& cfg = ctx.cfg;
  if (cfg.device.gates.empty()) {
    throw ConfigError("solve-field needs at least one [gate.N] section");
  }
  const FieldSolution sol = solve_laplace(cfg.device, cfg.sweep.grid);

  if (cfg.output.want_csv()) {
    CsvWriter csv(ctx.path("field.csv").string());
    ctx.stamp(csv);
    csv.comment("units: x_um um, z_um um, potential_v V, f_x_mvpm MV/m, f_z_mvpm MV/m");
    csv.comment("field is the screened internal field F = -grad(phi)/epsilon");
    csv.columns({"x_um", "z_um", "potential_v", "f_x_mvpm", "f_z_mvpm"});
    for (std::size_t iz = 0; iz < sol.nz(); ++iz) {
      for (std::size_t ix = 0; ix < sol.nx(); ++ix) {
        const double x = sol.dx() * static_cast<double>(ix);
        const double z = sol.dz() * static_cast<double>(iz);
        const FieldVector f = field_at(sol, x, z);
        csv.row({x, z, sol.potential(ix, iz), f.f_perp_x, f.f_parallel});
      }
    }
  }
  if (cfg.output.want_svg()) {
    std::vector<std::vector<double>> grid(sol.nz());
    for (std::size_t iz = 0; iz < sol.nz(); ++iz) {
      grid[iz].resize(sol.nx());
      for (std::size_t ix = 0; ix < sol.nx(); ++ix) grid[iz][ix] = sol.potential(ix, iz);
    }
    SvgPlot plot;
    plot.set_title("electrostatic potential");
    plot.set_axis_labels("x (um)", "z (um)");
    plot.add_heatmap(grid, 0.0, sol.domain_width(), 0.0, sol.domain_depth());
    plot.write(ctx.path("field.svg").string());
  }
  log << "solve-field: " << sol.nx() << "x" << sol.nz()
      << " grid, residual " << CsvWriter::format_number(sol.interior_residual()) << "\n";
}

void cmd_stark_sweep(const RunContext& ctx, std::ostream& log) {
  const ExperimentConfig& cfg = ctx.cfg;
  const DefectConfig& defect = cfg.defects.front();
  const StarkMap map = stark_map(defect, cfg.device, cfg.bands, cfg.levels,
                                 common_mode_sweep(cfg), cfg.sweep.scan,
                                 cfg.sweep.field_model, cfg.sweep.grid);

  if (cfg.output.want_csv()) {
    CsvWriter csv(ctx.path("stark_map.csv").string());
    ctx.stamp(csv);
    csv.comment("units: voltage_v V, frequency_offset_ghz GHz, intensity 1/GHz");
    csv.comment("frequency offsets relative to zpl_center_ghz = " +
                CsvWriter::format_number(defect.zpl_center));
    csv.columns({"voltage_v", "frequency_offset_ghz", "intensity"});
    for (const StarkMapRow& row : map.rows) {
      for (std::size_t i = 0; i < map.offsets.size(); ++i) {
        csv.row({row.v_common, map.offsets[i], row.intensity[i]});
      }
    }
  }
  if (cfg.output.want_svg() && !map.rows.empty() && !map.offsets.empty()) {
    std::vector<std::vector<double>> grid;
    grid.reserve(map.rows.size());
    for (const StarkMapRow& row : map.rows) grid.push_back(row.intensity);
    SvgPlot plot;
    plot.set_title("Stark sweep");
    plot.set_axis_labels("frequency offset (GHz)", "gate voltage (V)");
    plot.add_heatmap(grid, map.offsets.front(), map.offsets.back(),
                     map.rows.front().v_common, map.rows.back().v_common);
    plot.write(ctx.path("stark_map.svg").string());
  }
  log << "stark-sweep: " << map.rows.size() << " voltage rows x " << map.offsets.size()
      << " scan points\n";
}

void cmd_ple(const RunContext& ctx, std::ostream& log) {
  const ExperimentConfig& cfg = ctx.cfg;
  const DefectConfig& defect = cfg.defects.front();
  const double v = cfg.sweep.v_start;
  FieldVector field;
  if (cfg.sweep.field_model == FieldModel::Uniform || cfg.device.gates.empty()) {
    field = uniform_vertical_field(v, cfg.device);
  } else {
    DeviceGeometry biased = cfg.device;
    for (GatePatch& g : biased.gates) g.voltage = v;
    field = field_at(solve_laplace(biased, cfg.sweep.grid), defect.x, defect.z);
  }
  const auto spectrum = ple_spectrum(defect, field, cfg.sweep.scan);

  if (cfg.output.want_csv()) {
    CsvWriter csv(ctx.path("ple.csv").string());
    ctx.stamp(csv);
    csv.comment("units: frequency_offset_ghz GHz, intensity 1/GHz");
    csv.comment("frequency offsets relative to zpl_center_ghz = " +
                CsvWriter::format_number(defect.zpl_center));
    csv.comment("gate voltage: " + CsvWriter::format_number(v) + " V");
    csv.columns({"frequency_offset_ghz", "intensity"});
    for (const auto& [f, i] : spectrum) csv.row({f, i});
  }
  if (cfg.output.want_svg() && !spectrum.empty()) {
    std::vector<double> xs, ys;
    for (const auto& [f, i] : spectrum) { xs.push_back(f); ys.push_back(i); }
    SvgPlot plot;
    plot.set_title("PLE spectrum");
    plot.set_axis_labels("frequency offset (GHz)", "intensity (1/GHz)");
    plot.add_line(xs, ys);
    plot.write(ctx.path("ple.svg").string());
  }
  log << "ple: " << spectrum.size() << " scan points\n";
}

void cmd_charge_map(const RunContext& ctx, std::ostream& log) {
  const ExperimentConfig& cfg = ctx.cfg;
  const std::vector<double> voltages = cfg.sweep.voltages();

  if (cfg.output.want_csv()) {
    {
      CsvWriter csv(ctx.path("charge_map.csv").string());
      ctx.stamp(csv);
      csv.comment("units: distance_um um, v_gate_v V");
      csv.comment("state: VV+, VV0, VV-, VV2-; bright: 1 only for VV0");
      csv.columns({"defect", "distance_um", "v_gate_v", "state", "bright"});
      for (std::size_t d = 0; d < cfg.defects.size(); ++d) {
        const DefectConfig& defect = cfg.defects[d];
        const double dist = distance_to_nearest_gate(cfg.device, defect.x, defect.y, defect.z);
        for (double v : voltages) {
          const ChargeState state =
              steady_charge_state(defect, v, cfg.device, cfg.bands, cfg.levels);
          csv.raw_row({std::to_string(d), CsvWriter::format_number(dist),
                       CsvWriter::format_number(v), to_string(state),
                       is_bright(state) ? "1" : "0"});
        }
      }
    }
    {
      CsvWriter csv(ctx.path("transition_voltage.csv").string());
      ctx.stamp(csv);
      csv.comment("units: distance_um um, v_transition_v V");
      csv.comment("depletion-edge transition voltage vs distance to the gate");
      csv.columns({"distance_um", "v_transition_v"});
      for (std::size_t i = 0; i < cfg.sweep.distance_points; ++i) {
        const double frac = cfg.sweep.distance_points == 1
                                ? 0.0
                                : static_cast<double>(i) /
                                      static_cast<double>(cfg.sweep.distance_points - 1);
        const double dist =
            cfg.sweep.distance_min + frac * (cfg.sweep.distance_max - cfg.sweep.distance_min);
        csv.row({dist, transition_voltage_for_distance(dist, cfg.device, cfg.bands)});
      }
    }
  }
  if (cfg.output.want_svg()) {
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < cfg.sweep.distance_points; ++i) {
      const double frac = cfg.sweep.distance_points == 1
                              ? 0.0
                              : static_cast<double>(i) /
                                    static_cast<double>(cfg.sweep.distance_points - 1);
      const double dist =
          cfg.sweep.distance_min + frac * (cfg.sweep.distance_max - cfg.sweep.distance_min);
      xs.push_back(dist);
      ys.push_back(transition_voltage_for_distance(dist, cfg.device, cfg.bands));
    }
    SvgPlot plot;
    plot.set_title("charge transition voltage vs distance");
    plot.set_axis_labels("distance (um)", "transition voltage (V)");
    plot.add_line(xs, ys);
    plot.write(ctx.path("transition_voltage.svg").string());
  }
  log << "charge-map: " << cfg.defects.size() << " defects x " << voltages.size()
      << " voltages\n";
}

void cmd_step_response(const RunContext& ctx, std::ostream& log) {
  const ExperimentConfig& cfg = ctx.cfg;
  const StepResponse resp = step_response_trace(
      cfg.rates, cfg.power, 0.05 / cfg.rates.slope_0_minus / cfg.power, 4000, cfg.output.seed,
      cfg.photon.lambda_bright, cfg.photon.lambda_dark);

  if (cfg.output.want_csv()) {
    CsvWriter csv(ctx.path("step_response.csv").string());
    ctx.stamp(csv);
    csv.comment("units: time_us us, occupancy 1, pl expected counts per bin");
    csv.comment("half_period_us: " + CsvWriter::format_number(resp.half_period));
    csv.columns({"time_us", "occupancy", "pl"});
    for (std::size_t i = 0; i < resp.time.size(); ++i) {
      csv.row({resp.time[i], resp.occupancy[i], resp.pl[i]});
    }
  }

  // Fit the two phases with the analytic forms and report the rates.
  std::vector<DataPoint> dark_phase, bright_phase;
  for (std::size_t i = 0; i < resp.time.size(); ++i) {
    if (resp.time[i] < resp.half_period) {
      dark_phase.push_back({resp.time[i], resp.occupancy[i], 1.0});
    } else {
      bright_phase.push_back({resp.time[i] - resp.half_period, resp.occupancy[i], 1.0});
    }
  }
  const FitResult exp_fit = fit(ModelFunction::make(ModelKind::ExpDecay), dark_phase);
  const FitResult sig_fit = fit(ModelFunction::make(ModelKind::Sigmoid), bright_phase);

  if (cfg.output.want_csv()) {
    CsvWriter csv(ctx.path("step_fits.csv").string());
    ctx.stamp(csv);
    csv.comment("exp_decay on the to-dark phase, sigmoid on the to-bright phase");
    csv.columns({"phase", "model", "parameter", "value", "ci95"});
    const auto emit = [&](const std::string& phase, ModelKind kind, const FitResult& r) {
      const auto names = ModelFunction::make(kind).parameter_names();
      for (std::size_t i = 0; i < names.size(); ++i) {
        csv.raw_row({phase, to_string(kind), names[i],
                     CsvWriter::format_number(r.parameters[static_cast<int>(i)]),
                     CsvWriter::format_number(r.ci95[i])});
      }
    };
    emit("to_dark", ModelKind::ExpDecay, exp_fit);
    emit("to_bright", ModelKind::Sigmoid, sig_fit);
  }
  if (cfg.output.want_svg() && !resp.time.empty()) {
    SvgPlot plot;
    plot.set_title("bias step response");
    plot.set_axis_labels("time (us)", "VV0 occupancy");
    plot.add_line(resp.time, resp.occupancy);
    plot.write(ctx.path("step_response.svg").string());
  }
  log << "step-response: gamma_0- = " << CsvWriter::format_number(exp_fit.parameters[1])
      << " /us, tau_charge = " << CsvWriter::format_number(sig_fit.parameters[1]) << " us\n";
}

void cmd_telegraph(const RunContext& ctx, std::ostream& log) {
  const ExperimentConfig& cfg = ctx.cfg;
  const double duration_us = cfg.photon.bin_ms * 1000.0 * static_cast<double>(cfg.photon.n_bins);
  const TelegraphTrace trace = simulate_telegraph(cfg.rates, cfg.power, cfg.rates.v_threshold,
                                                  duration_us, cfg.output.seed);
  if (cfg.output.want_csv()) {
    CsvWriter csv(ctx.path("telegraph.csv").string());
    ctx.stamp(csv);
    csv.comment("units: time_us us; state 1 = bright VV0, 0 = dark VV-");
    csv.comment("power_mw_um2: " + CsvWriter::format_number(cfg.power));
    csv.columns({"time_us", "state"});
    for (const auto& ev : trace.events) {
      csv.row({ev.time, ev.state == ChargeState::VV_0 ? 1.0 : 0.0});
    }
  }
  log << "telegraph: " << trace.events.size() << " segments over "
      << CsvWriter::format_number(duration_us) << " us\n";
}

void cmd_readout(const RunContext& ctx, std::ostream& log) {
  const ExperimentConfig& cfg = ctx.cfg;
  const DefectConfig& defect = cfg.defects.front();
  const std::vector<double> voltages = cfg.sweep.voltages();

  const auto population = population_vs_voltage(defect, cfg.device, cfg.bands, cfg.levels,
                                                voltages, cfg.photon);

  // Histogram and mixture fit at the first sweep voltage.
  RateModel gated = cfg.rates;
  const double v_t = charge_transition_voltage(defect, cfg.device, cfg.bands, cfg.levels);
  if (std::isfinite(v_t)) gated.v_threshold = v_t;
  const double duration_us = cfg.photon.bin_ms * 1000.0 * static_cast<double>(cfg.photon.n_bins);
  const TelegraphTrace trace =
      simulate_telegraph(gated, cfg.power, voltages.front(), duration_us, cfg.output.seed);
  const CountSeries series = generate_counts(trace, cfg.photon.lambda_bright,
                                             cfg.photon.lambda_dark, cfg.photon.bin_ms,
                                             cfg.output.seed + 0x5DEECE66Dull);

  if (cfg.output.want_csv()) {
    {
      CsvWriter csv(ctx.path("population.csv").string());
      ctx.stamp(csv);
      csv.comment("units: v_gate_v V; p_bright from the two-Poisson mixture fit");
      csv.columns({"v_gate_v", "p_bright"});
      for (const auto& [v, p] : population) csv.row({v, p});
    }
    {
      CsvWriter csv(ctx.path("histogram.csv").string());
      ctx.stamp(csv);
      csv.comment("photon counts per " + CsvWriter::format_number(cfg.photon.bin_ms) +
                  " ms readout bin at v_gate = " + CsvWriter::format_number(voltages.front()) +
                  " V");
      csv.columns({"counts", "occurrences"});
      for (const auto& [k, c] : series.histogram.counts) {
        csv.row({static_cast<double>(k), static_cast<double>(c)});
      }
    }
  }

  std::ofstream report(ctx.path("mixture_fit.txt"));
  report << kToolkitVersion << "\nconfig_hash: " << ctx.cfg.config_hash << "\n";
  const double total = static_cast<double>(series.histogram.total());
  if (series.histogram.counts.size() >= 2) {
    const MixtureFit mix = em_fit_poisson_mixture(series.histogram);
    // Crude large-N normal approximations for the CIs.
    const double ci_p = 1.96 * std::sqrt(std::max(mix.p_bright * (1.0 - mix.p_bright), 0.0) / total);
    const double nb = std::max(total * mix.p_bright, 1.0);
    const double nd = std::max(total * (1.0 - mix.p_bright), 1.0);
    report << "lambda_dark: " << CsvWriter::format_number(mix.lambda_dark) << " +- "
           << CsvWriter::format_number(1.96 * std::sqrt(mix.lambda_dark / nd)) << "\n"
           << "lambda_bright: " << CsvWriter::format_number(mix.lambda_bright) << " +- "
           << CsvWriter::format_number(1.96 * std::sqrt(mix.lambda_bright / nb)) << "\n"
           << "p_bright: " << CsvWriter::format_number(mix.p_bright) << " +- "
           << CsvWriter::format_number(ci_p) << "\n"
           << "log_likelihood: " << CsvWriter::format_number(mix.log_likelihood) << "\n"
           << "iterations: " << mix.iterations << "\n"
           << "converged: " << (mix.converged ? "yes" : "no") << "\n"
           << "low_data: " << (mix.low_data ? "yes" : "no") << "\n";
    if (mix.lambda_bright > mix.lambda_dark) {
      const ReadoutResult ro = optimal_threshold(mix.lambda_dark + 1e-9, mix.lambda_bright);
      report << "threshold: " << ro.threshold << "\n"
             << "fidelity: " << CsvWriter::format_number(ro.fidelity) << "\n";
    }
  } else {
    report << "single-support histogram; no mixture fit\n";
  }
  report << "p_bright(first voltage): " << CsvWriter::format_number(population.front().second)
         << "\n";
  log << "readout: p_bright at " << CsvWriter::format_number(voltages.front()) << " V = "
      << CsvWriter::format_number(population.front().second) << "\n";
}

void cmd_fit(const RunContext& ctx, std::ostream& log) {
  const ExperimentConfig& cfg = ctx.cfg;
  if (cfg.fit_job.input.empty()) {
    throw ConfigError("fit needs fit.input = <csv path>");
  }
  const CsvTable table = read_csv(cfg.fit_job.input);
  std::vector<DataPoint> data;
  for (const auto& row : table.rows) {
    if (row.size() < 2) {
      throw ConfigError("fit input rows need at least x,y columns");
    }
    DataPoint d{row[0], row[1], std::nullopt};
    if (row.size() >= 3) d.sigma = row[2];
    data.push_back(d);
  }
  const ModelKind kind = model_kind_from_name(cfg.fit_job.model);
  const ModelFunction model = ModelFunction::make(kind);
  const FitResult result = fit(model, data);

  if (cfg.output.want_csv()) {
    CsvWriter csv(ctx.path("fit_report.csv").string());
    ctx.stamp(csv);
    csv.comment("model: " + to_string(kind));
    csv.comment("residual_norm: " + CsvWriter::format_number(result.residual_norm));
    csv.comment("converged: " + std::string(result.converged ? "yes" : "no"));
    csv.columns({"parameter", "value", "ci95"});
    const auto names = model.parameter_names();
    for (std::size_t i = 0; i < names.size(); ++i) {
      csv.raw_row({names[i], CsvWriter::format_number(result.parameters[static_cast<int>(i)]),
                   CsvWriter::format_number(result.ci95[i])});
    }
  }
  log << "fit: " << to_string(kind) << ", residual norm "
      << CsvWriter::format_number(result.residual_norm) << "\n";
}

}  // namespace

int run_subcommand(const std::string& subcommand, const RunOptions& options, std::ostream& log) {
  static const std::map<std::string, std::function<void(const RunContext&, std::ostream&)>>
      commands = {
          {"solve-field", cmd_solve_field},   {"stark-sweep", cmd_stark_sweep},
          {"ple", cmd_ple},                   {"charge-map", cmd_charge_map},
          {"step-response", cmd_step_response}, {"telegraph", cmd_telegraph},
          {"readout", cmd_readout},           {"fit", cmd_fit},
      };
  const auto it = commands.find(subcommand);
  try {
    if (it == commands.end()) {
      throw ConfigError("unknown subcommand '" + subcommand + "'");
    }
    RunContext ctx = make_context(subcommand, options);
    it->second(ctx, log);
    write_manifest(ctx);
    return kExitOk;
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::invalid_argument& e) {
    log << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kExitNumericalError;
  }
}

}  // namespace dvtk
