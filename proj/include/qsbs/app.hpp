#pragma once

// Subcommand bodies behind the qsbs executable. Each writes its artifacts and
// a resolved configuration snapshot into the output directory.

#include <cctype>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "qsbs/analyzer.hpp"
#include "qsbs/config.hpp"
#include "qsbs/fit.hpp"
#include "qsbs/imaging.hpp"
#include "qsbs/lockin.hpp"
#include "qsbs/photodamage.hpp"
#include "qsbs/synthesis.hpp"
#include "qsbs/trace_io.hpp"

namespace qsbs::app {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

inline constexpr const char* kSnapshotName = "config.resolved.yaml";

inline void prepare_output(const ExperimentConfig& cfg, const fs::path& out) {
  fs::create_directories(out);
  write_file((out / kSnapshotName).string(), write_resolved_config(cfg));
}

template <class Section>
const Section& require(const std::optional<Section>& s, const char* name) {
  if (!s) throw ConfigError(std::string("config has no '") + name + "' section");
  return *s;
}

inline std::string safe_name(const std::string& s) {
  std::string out;
  for (char c : s) out.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' ? c : '_');
  return out;
}

inline void cmd_spectrum(const ExperimentConfig& cfg, const fs::path& out, std::ostream& log) {
  const SpectrumSection& sp = require(cfg.spectrum, "spectrum");
  prepare_output(cfg, out);
  for (std::size_t i = 0; i < sp.traces.size(); ++i) {
    const auto& t = sp.traces[i];
    SpectrumTrace trace = lockin_scan(cfg.chain, cfg.source, cfg.materials, t.mixture, sp.range,
                                      cfg.lockin, derive_seed(cfg.seed, i));
    trace.set("trace", t.name);
    const fs::path file = out / ("spectrum_" + safe_name(t.name) + ".csv");
    write_trace_file(file.string(), trace);
    log << "wrote " << file.string() << " (" << trace.axis.size() << " points)\n";
  }
}

inline void cmd_gain(const ExperimentConfig& cfg, const fs::path& out, std::ostream& log) {
  const GainSection& g = require(cfg.gain, "gain");
  prepare_output(cfg, out);
  const double response =
      g.enabled ? material_response(cfg.materials, g.mixture, g.lock_detuning_hz) : 0.0;
  const double duration = analyzer_record_duration(cfg.analyzer);
  std::ostringstream summary;
  summary << "lock_detuning_hz: " << fmt_num(g.lock_detuning_hz) << "\n"
          << "medium_response: " << fmt_num(response) << "\n"
          << "gain_enabled: " << (g.enabled ? "true" : "false") << "\n";
  for (std::size_t i = 0; i < g.states.size(); ++i) {
    const LightSource src = source_in_state(cfg.source, g.states[i], cfg.squeezing_db);
    DetectionChain chain = cfg.chain;
    chain.rng_seed = derive_seed(cfg.seed, i);
    const PhotocurrentRecord rec = synthesize_photocurrents(chain, src, response, duration);
    SpectrumTrace trace = analyzer_sweep(rec.balanced, rec.sample_rate_hz, cfg.analyzer);
    trace.set("state", state_label(src));
    trace.set("seed", std::to_string(chain.rng_seed));
    trace.set("pump_power_w", fmt_num(src.pump_power_w));
    trace.set("probe_power_w", fmt_num(src.probe_power_w));
    trace.set("medium_response", fmt_exact(response));
    const std::string name = state_name(g.states[i]);
    const fs::path file = out / ("gain_" + name + ".csv");
    write_trace_file(file.string(), trace);

    const SnrResult analytic = analytic_snr(chain, src, response, cfg.analyzer.rbw_hz);
    summary << name << ".analytic_snr_db: " << fmt_num(analytic.raw_db, 6) << "\n";
    if (cfg.analyzer.mode == AnalyzerMode::Swept) {
      const PeakReading pk = read_peak(trace, chain.signal_freq_hz(), g.signal_exclusion_hz);
      summary << name << ".peak_frequency_hz: " << fmt_num(pk.peak_frequency_hz) << "\n"
              << name << ".peak_dbm: " << fmt_num(pk.peak_dbm, 6) << "\n"
              << name << ".floor_dbm: " << fmt_num(pk.floor_dbm, 6) << "\n"
              << name << ".measured_snr_db: "
              << (std::isnan(pk.snr_db) ? std::string("below_floor") : fmt_num(pk.snr_db, 6)) << "\n";
    } else {
      summary << name << ".mean_level_dbm: " << fmt_num(mw_to_dbm(mean_power_mw(trace)), 6) << "\n";
    }
    log << "wrote " << file.string() << "\n";
  }
  write_file((out / "gain_summary.txt").string(), summary.str());
}

inline Phantom build_phantom(const ExperimentConfig& cfg) {
  const PhantomSection& p = require(cfg.image, "image").phantom;
  std::vector<Disc> discs = p.blobs;
  if (p.random_blobs.count > 0) {
    const auto extra = random_discs(p.random_blobs.count, p.width * p.pitch_m, p.height * p.pitch_m,
                                    p.random_blobs.min_radius_m, p.random_blobs.max_radius_m,
                                    derive_seed(cfg.seed, 0x5048414eULL));
    discs.insert(discs.end(), extra.begin(), extra.end());
  }
  return spheroid_phantom(p.width, p.height, p.pitch_m, p.background, p.blob, discs);
}

inline ScanPlan build_scan_plan(const ExperimentConfig& cfg) {
  const ImageSection& im = require(cfg.image, "image");
  ScanPlan plan;
  plan.nx = im.nx;
  plan.ny = im.ny;
  plan.step_m = im.step_m;
  plan.origin_x_m = im.origin_x_m;
  plan.origin_y_m = im.origin_y_m;
  plan.lock_detuning_hz = im.lock_detuning_hz;
  plan.spot_diameter_m = im.spot_diameter_m;
  plan.analyzer = cfg.analyzer;
  plan.estimation_noise = im.estimation_noise;
  plan.seed = cfg.seed;
  return plan;
}

inline void cmd_image(const ExperimentConfig& cfg, const fs::path& out, std::ostream& log) {
  const ImageSection& im = require(cfg.image, "image");
  prepare_output(cfg, out);
  const Phantom phantom = build_phantom(cfg);
  const ScanPlan plan = build_scan_plan(cfg);
  const GrayMapping gray{im.gray_black_db, im.gray_white_db};
  std::ostringstream summary;
  summary << "pixels: " << plan.nx * plan.ny << "\n"
          << "acquisition_time_s: " << fmt_num(acquisition_time_estimate(plan)) << "\n";
  for (StateKind kind : im.states) {
    const LightSource src = source_in_state(cfg.source, kind, cfg.squeezing_db);
    const ImageResult img = acquire_image(cfg.materials, phantom, plan, cfg.chain, src);
    const std::string stem = "image_" + state_name(kind);
    write_file((out / (stem + ".txt")).string(), image_text(img));
    write_file((out / (stem + ".pgm")).string(), image_pgm(img, gray));
    write_file((out / (stem + ".pgm.meta")).string(), gray_sidecar(gray));
    summary << state_name(kind) << ".mean_contrast_db: " << fmt_num(img.mean_contrast_db(), 8) << "\n";
    log << "wrote " << (out / (stem + ".txt")).string() << "\n";
  }
  write_file((out / "image_summary.txt").string(), summary.str());
}

inline DamageModel build_damage_model(const ViabilitySection& v) {
  DamageModel target;
  target.target_material = v.target_material;
  target.target_resonance = v.target_resonance_index;
  if (!v.calibration.empty()) return calibrate_damage(v.calibration, target);
  target.rate_k = *v.rate_k;
  target.alpha = *v.alpha;
  target.validate();
  return target;
}

inline void cmd_viability(const ExperimentConfig& cfg, const fs::path& out, std::ostream& log) {
  const ViabilitySection& v = require(cfg.viability, "viability");
  prepare_output(cfg, out);
  const DamageModel model = build_damage_model(v);
  std::vector<ExposureCondition> conditions;
  for (const auto& c : v.conditions) {
    conditions.push_back(
        {c.label, source_in_state(cfg.source, c.state, cfg.squeezing_db).with_pump(c.pump_power_w)});
  }
  SpectrumProbe probe;
  probe.enabled = v.spectra;
  probe.sample = v.sample;
  probe.range = v.range;
  probe.lockin = cfg.lockin;
  probe.averages = v.spectrum_averages;
  probe.seed = cfg.seed;
  const ViabilityResult res =
      viability_experiment(model, conditions, v.horizon_s, v.interval_s, cfg.materials, cfg.chain, probe);

  write_file((out / "viability.csv").string(), viability_table(res.curves));
  std::ostringstream m;
  m << "rate_per_mw_alpha_hour: " << fmt_exact(model.rate_k) << "\n"
    << "alpha: " << fmt_exact(model.alpha) << "\n"
    << "target_material: " << model.target_material << "\n"
    << "target_resonance_index: " << model.target_resonance << "\n";
  for (const auto& c : res.curves) {
    m << c.label << ".final_viability: " << fmt_num(c.values.back(), 12) << "\n";
  }
  write_file((out / "damage_model.txt").string(), m.str());
  if (!res.spectra.empty()) {
    fs::create_directories(out / "spectra");
    for (const auto& s : res.spectra) {
      const fs::path file =
          out / "spectra" / ("viability_" + safe_name(s.label) + "_" + fmt_num(s.time_h) + "h.csv");
      write_trace_file(file.string(), s.trace);
    }
  }
  log << "wrote " << (out / "viability.csv").string() << " (" << res.curves.size()
      << " conditions, " << res.spectra.size() << " spectra)\n";
}

inline std::string fit_report(const std::string& source, const FitResult& r) {
  std::ostringstream os;
  os << "trace: " << source << "\n"
     << "resonances: " << r.resonances.size() << "\n";
  for (std::size_t i = 0; i < r.resonances.size(); ++i) {
    const auto& b = r.resonances[i];
    os << "resonance." << i + 1 << ".shift_ghz: " << fmt_num(b.shift_hz / units::GHz, 8) << "\n"
       << "resonance." << i + 1 << ".linewidth_mhz: " << fmt_num(b.linewidth_hz / units::MHz, 8) << "\n"
       << "resonance." << i + 1 << ".gain_strength: " << fmt_num(b.gain_strength, 8) << "\n";
  }
  if (r.rayleigh_fitted) {
    os << "rayleigh.strength: " << fmt_num(r.rayleigh_strength, 8) << "\n"
       << "rayleigh.width_mhz: " << fmt_num(r.rayleigh_width_hz / units::MHz, 8) << "\n";
  }
  os << "response_scale: " << fmt_num(r.response_scale, 10) << "\n"
     << "relative_residual: " << fmt_num(r.relative_residual, 6) << "\n"
     << "iterations: " << r.iterations << "\n";
  return os.str();
}

inline void cmd_fit(const std::string& trace_path, int n_resonances, const FitOptions& options,
                    const std::optional<fs::path>& out, std::ostream& report) {
  const SpectrumTrace trace = read_trace_file(trace_path);
  const FitResult r = fit_spectrum(trace, n_resonances, options);
  const std::string text = fit_report(trace_path, r);
  report << text;
  if (out) {
    fs::create_directories(*out);
    write_file((*out / "fit_report.txt").string(), text);
  }
}

/// Runs `body`, mapping failures to exit codes and messages on `err`.
inline int run_guarded(const std::function<void()>& body, std::ostream& err) {
  try {
    body();
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const UnitError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const TraceParseError& e) {
    err << "input error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const FitError& e) {
    err << "fit failed: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace qsbs::app
