#include <iostream>
#include <optional>
#include <string>

#include <CLI11/CLI11.hpp>

#include "qsbs/app.hpp"

namespace {

using qsbs::ExperimentConfig;
using CommandFn = void (*)(const ExperimentConfig&, const std::filesystem::path&, std::ostream&);

int run_experiment(CommandFn fn, const std::string& config_path,
                   const std::optional<std::uint64_t>& seed, const std::string& out) {
  return qsbs::app::run_guarded(
      [&] {
        ExperimentConfig cfg = qsbs::load_config(config_path);
        if (seed) cfg.seed = *seed;
        const std::string dir = out.empty() ? cfg.output_dir : out;
        fn(cfg, dir, std::cerr);
      },
      std::cerr);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Quantum-enhanced SBS spectroscopy and microscopy simulator"};
  cli.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;

  struct Experiment {
    const char* name;
    const char* help;
    CommandFn fn;
  };
  const Experiment experiments[] = {
      {"spectrum", "Lock-in detuning spectra", qsbs::app::cmd_spectrum},
      {"gain", "Spectrum-analyzer gain traces (coherent and squeezed)", qsbs::app::cmd_gain},
      {"image", "Raster-scan SBS images of a phantom", qsbs::app::cmd_image},
      {"viability", "Photodamage viability curves and hourly spectra", qsbs::app::cmd_viability},
  };
  CommandFn selected = nullptr;
  for (const auto& e : experiments) {
    CLI::App* sub = cli.add_subcommand(e.name, e.help);
    sub->add_option("--config", config_path, "Experiment config (YAML)")->required();
    sub->add_option("--seed", seed, "Override the config seed");
    sub->add_option("--out", out_dir, "Output directory (default: config output_dir)");
    sub->callback([&selected, fn = e.fn] { selected = fn; });
  }

  std::string trace_path;
  int n_resonances = 1;
  bool fit_selected = false;
  CLI::App* fit = cli.add_subcommand("fit", "Fit Brillouin resonances to a lock-in trace file");
  fit->add_option("trace", trace_path, "Trace file")->required();
  fit->add_option("-n,--resonances", n_resonances, "Number of resonances")->check(CLI::PositiveNumber);
  fit->add_option("--config", config_path, "Config supplying fit options");
  fit->add_option("--out", out_dir, "Directory for fit_report.txt");
  fit->callback([&] { fit_selected = true; });

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = cli.exit(e);
    return code == 0 ? 0 : qsbs::app::kExitConfig;
  }

  if (fit_selected) {
    return qsbs::app::run_guarded(
        [&] {
          qsbs::FitOptions options;
          if (!config_path.empty()) options = qsbs::load_config(config_path).fit;
          std::optional<std::filesystem::path> out;
          if (!out_dir.empty()) out = out_dir;
          qsbs::app::cmd_fit(trace_path, n_resonances, options, out, std::cout);
        },
        std::cerr);
  }
  return run_experiment(selected, config_path, seed, out_dir);
}
