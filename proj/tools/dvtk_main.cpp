#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dvtk/orchestrator.hpp"

int main(int argc, char** argv) {
  CLI::App app{"divacancy electrostatics / optics toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(dvtk::kToolkitVersion));

  dvtk::RunOptions options;
  std::uint64_t seed = 0;
  std::string out_dir, format;

  const std::vector<std::string> subcommands = {
      "solve-field", "stark-sweep", "ple",      "charge-map",
      "step-response", "telegraph", "readout",  "fit",
  };
  for (const std::string& name : subcommands) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("-c,--config", options.config_path, "config file (INI-style)");
    sub->add_option("--set", options.overrides, "override: section.key=value");
    CLI::Option* s = sub->add_option("--seed", seed, "RNG seed");
    CLI::Option* o = sub->add_option("--out-dir", out_dir, "output directory");
    CLI::Option* f = sub->add_option("--format", format, "csv | svg | both");
    sub->callback([&, s, o, f, name] {
      if (s->count()) options.seed = seed;
      if (o->count()) options.out_dir = out_dir;
      if (f->count()) options.format = format;
      std::exit(dvtk::run_subcommand(name, options, std::cerr));
    });
  }

  CLI11_PARSE(app, argc, argv);
  return dvtk::kExitOk;
}
