#pragma once

// Experiment configuration: one YAML schema shared by every subcommand.
// Physical quantities are strings with a unit suffix ("7 mW", "6.7 GHz").
// Unknown keys are errors. `write_resolved_config` emits a fully explicit
// copy (defaults filled in, materials inlined, seed fixed) that reloads to an
// identical configuration.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "qsbs/detection.hpp"
#include "qsbs/fit.hpp"
#include "qsbs/format.hpp"
#include "qsbs/imaging.hpp"
#include "qsbs/lockin.hpp"
#include "qsbs/materials.hpp"
#include "qsbs/photodamage.hpp"
#include "qsbs/quantum_light.hpp"
#include "qsbs/units.hpp"

namespace qsbs {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class StateKind { Coherent, Squeezed };

inline std::string state_name(StateKind k) { return k == StateKind::Coherent ? "coherent" : "squeezed"; }

/// `base` switched to the requested state, keeping its squeezing level.
inline LightSource source_in_state(const LightSource& base, StateKind kind, double squeezing_db) {
  if (kind == StateKind::Coherent) return base.with_state(Coherent{});
  return base.with_state(TwoModeSqueezed{squeezing_db});
}

struct NamedMixture {
  std::string name;
  Mixture mixture;
};

struct SpectrumSection {
  std::vector<NamedMixture> traces;
  DetuningRange range;
};

struct GainSection {
  Mixture mixture = Mixture::pure("hydrogel");
  double lock_detuning_hz = 6.7e9;
  std::vector<StateKind> states{StateKind::Coherent, StateKind::Squeezed};
  bool enabled = true;
  double signal_exclusion_hz = 30e3;
};

struct RandomBlobs {
  int count = 0;
  double min_radius_m = 0.0;
  double max_radius_m = 0.0;
};

struct PhantomSection {
  int width = 55;
  int height = 55;
  double pitch_m = 6e-6;
  Mixture background = Mixture::pure("hydrogel");
  Mixture blob = Mixture::pure("cell");
  std::vector<Disc> blobs;
  RandomBlobs random_blobs;
};

struct ImageSection {
  std::vector<StateKind> states{StateKind::Coherent, StateKind::Squeezed};
  int nx = 55;
  int ny = 55;
  double step_m = 6e-6;
  double origin_x_m = 3e-6;
  double origin_y_m = 3e-6;
  double lock_detuning_hz = 6.7e9;
  double spot_diameter_m = 5e-6;
  bool estimation_noise = true;
  double gray_black_db = 0.0;
  double gray_white_db = 10.0;
  PhantomSection phantom;
};

struct ConditionSpec {
  std::string label;
  StateKind state = StateKind::Coherent;
  double pump_power_w = 0.0;
};

struct ViabilitySection {
  std::string target_material = "cell";
  std::size_t target_resonance_index = 1;
  std::vector<DamagePoint> calibration;
  std::optional<double> rate_k;  ///< used when no calibration points are given
  std::optional<double> alpha;
  std::vector<ConditionSpec> conditions;
  double horizon_s = 3 * 3600.0;
  double interval_s = 3600.0;
  bool spectra = true;
  Mixture sample = Mixture::pure("cell");
  int spectrum_averages = 10;
  DetuningRange range;
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  MaterialRegistry materials = default_material_library();
  LightSource source;
  DetectionChain chain;
  AnalyzerSettings analyzer;
  LockInSettings lockin;
  FitOptions fit;
  std::optional<SpectrumSection> spectrum;
  std::optional<GainSection> gain;
  std::optional<ImageSection> image;
  std::optional<ViabilitySection> viability;

  /// Squeezing level used whenever a section asks for the squeezed state.
  double squeezing_db = 7.0;

  void validate() const;
};

namespace config_detail {

// Map reader that remembers which keys were read so leftovers can be reported.
class Section {
 public:
  Section(YAML::Node node, std::string path) : node_(std::move(node)), path_(std::move(path)) {
    if (node_ && !node_.IsNull() && !node_.IsMap()) fail("", "expected a mapping");
  }

  std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  [[noreturn]] void fail(const std::string& key, const std::string& why) const {
    const std::string where = key.empty() ? (path_.empty() ? "<root>" : path_) : key_path(key);
    throw ConfigError(where + ": " + why);
  }

  bool has(const std::string& key) const { return node_ && node_.IsMap() && node_[key]; }

  YAML::Node take(const std::string& key) {
    used_.insert(key);
    return node_[key];
  }

  std::string scalar(const std::string& key) {
    YAML::Node n = take(key);
    if (!n.IsScalar()) fail(key, "expected a scalar value");
    return n.Scalar();
  }

  double quantity(const std::string& key, Dimension d, double fallback) {
    if (!has(key)) return fallback;
    const std::string text = scalar(key);
    try {
      return parse_quantity(text, d);
    } catch (const UnitError& e) {
      fail(key, e.what());
    }
  }

  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const std::string text = scalar(key);
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (text.empty() || end != text.c_str() + text.size() || !std::isfinite(v)) {
      fail(key, "expected a plain number, got '" + text + "'");
    }
    return v;
  }

  long long integer(const std::string& key, long long fallback) {
    if (!has(key)) return fallback;
    const std::string text = scalar(key);
    try {
      std::size_t used = 0;
      const long long v = std::stoll(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
      return v;
    } catch (const std::exception&) {
      fail(key, "expected an integer, got '" + text + "'");
    }
  }

  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    const std::string text = scalar(key);
    try {
      std::size_t used = 0;
      if (!text.empty() && text[0] == '-') throw std::invalid_argument(text);
      const unsigned long long v = std::stoull(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
      return v;
    } catch (const std::exception&) {
      fail(key, "expected a non-negative integer, got '" + text + "'");
    }
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const std::string text = scalar(key);
    if (text == "true") return true;
    if (text == "false") return false;
    fail(key, "expected true or false, got '" + text + "'");
  }

  std::string text(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    return scalar(key);
  }

  Section child(const std::string& key) {
    YAML::Node n = take(key);
    if (!n.IsMap()) fail(key, "expected a mapping");
    return Section(n, key_path(key));
  }

  YAML::Node sequence(const std::string& key) {
    YAML::Node n = take(key);
    if (!n.IsSequence()) fail(key, "expected a list");
    return n;
  }

  void finish() const {
    if (!node_ || !node_.IsMap()) return;
    for (auto it = node_.begin(); it != node_.end(); ++it) {
      const std::string k = it->first.as<std::string>();
      if (!used_.count(k)) throw ConfigError(key_path(k) + ": unknown key");
    }
  }

 private:
  YAML::Node node_;
  std::string path_;
  std::set<std::string> used_;
};

inline Mixture read_mixture(Section& parent, const std::string& key) {
  YAML::Node n = parent.take(key);
  if (n.IsNull()) return Mixture{};
  if (!n.IsMap()) parent.fail(key, "expected a mapping of material: fraction");
  std::map<std::string, double> weights;
  Section sec(n, parent.key_path(key));
  for (auto it = n.begin(); it != n.end(); ++it) {
    const std::string name = it->first.as<std::string>();
    weights[name] = sec.number(name, 0.0);
  }
  try {
    return Mixture(std::move(weights));
  } catch (const MaterialError& e) {
    parent.fail(key, e.what());
  }
}

inline StateKind read_state(const std::string& text, const Section& sec, const std::string& key) {
  if (text == "coherent") return StateKind::Coherent;
  if (text == "squeezed") return StateKind::Squeezed;
  sec.fail(key, "state must be 'coherent' or 'squeezed', got '" + text + "'");
}

inline std::vector<StateKind> read_states(Section& sec, const std::string& key,
                                          std::vector<StateKind> fallback) {
  if (!sec.has(key)) return fallback;
  std::vector<StateKind> out;
  for (const auto& item : sec.sequence(key)) {
    if (!item.IsScalar()) sec.fail(key, "states must be scalars");
    out.push_back(read_state(item.Scalar(), sec, key));
  }
  if (out.empty()) sec.fail(key, "at least one state is required");
  return out;
}

inline MaterialSpec read_material(const YAML::Node& node, const std::string& path) {
  Section sec(node, path);
  MaterialSpec m;
  m.name = sec.text("name", "");
  if (m.name.empty()) sec.fail("name", "material name is required");
  if (!sec.has("resonances")) sec.fail("resonances", "at least one resonance is required");
  const YAML::Node res = sec.sequence("resonances");
  for (std::size_t i = 0; i < res.size(); ++i) {
    Section r(res[i], sec.key_path("resonances") + "[" + std::to_string(i) + "]");
    BrillouinResonance b;
    b.shift_hz = r.quantity("shift", Dimension::Frequency, 0.0);
    b.linewidth_hz = r.quantity("linewidth", Dimension::Frequency, 0.0);
    b.gain_strength = r.number("gain", 0.0);
    r.finish();
    m.resonances.push_back(b);
  }
  if (sec.has("rayleigh")) {
    Section ray = sec.child("rayleigh");
    m.rayleigh_strength = ray.number("strength", m.rayleigh_strength);
    m.rayleigh_width_hz = ray.quantity("width", Dimension::Frequency, m.rayleigh_width_hz);
    ray.finish();
  }
  sec.finish();
  try {
    m.validate();
  } catch (const MaterialError& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return m;
}

inline MaterialRegistry read_material_list(const YAML::Node& list, const std::string& path) {
  if (!list.IsSequence()) throw ConfigError(path + ": expected a list of materials");
  MaterialRegistry reg;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string p = path + "[" + std::to_string(i) + "]";
    try {
      reg.add(read_material(list[i], p));
    } catch (const MaterialError& e) {
      throw ConfigError(p + ": " + e.what());
    }
  }
  return reg;
}

inline YAML::Node load_yaml_file(const std::string& path) {
  try {
    return YAML::LoadFile(path);
  } catch (const YAML::BadFile&) {
    throw ConfigError(path + ": cannot open file");
  } catch (const YAML::Exception& e) {
    throw ConfigError(path + ": line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
}

inline MaterialRegistry load_materials_file(const std::string& path) {
  const YAML::Node root = load_yaml_file(path);
  Section sec(root, "");
  if (!sec.has("materials")) throw ConfigError(path + ": missing 'materials' list");
  MaterialRegistry reg = read_material_list(sec.take("materials"), path + ": materials");
  sec.finish();
  return reg;
}

inline DetuningRange read_range(Section& sec, DetuningRange r) {
  r.start_hz = sec.quantity("detuning_start", Dimension::Frequency, r.start_hz);
  r.stop_hz = sec.quantity("detuning_stop", Dimension::Frequency, r.stop_hz);
  return r;
}

}  // namespace config_detail

inline void ExperimentConfig::validate() const {
  auto guard = [](const char* where, auto&& fn) {
    try {
      fn();
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(std::string(where) + ": " + e.what());
    }
  };
  guard("source", [&] {
    source.validate();
    if (!(squeezing_db >= 0.0)) throw SourceError("squeezing must be >= 0 dB");
  });
  guard("chain", [&] { chain.validate(); });
  guard("analyzer", [&] { analyzer.validate(); });
  guard("lockin", [&] { lockin.validate(); });
  if (spectrum) {
    guard("spectrum", [&] {
      if (!(spectrum->range.stop_hz > spectrum->range.start_hz)) {
        throw SettingsError("detuning_stop must exceed detuning_start");
      }
      for (const auto& t : spectrum->traces) materials.check(t.mixture);
    });
  }
  if (gain) {
    guard("gain", [&] {
      materials.check(gain->mixture);
      if (!(gain->signal_exclusion_hz > 0.0)) throw SettingsError("signal_exclusion must be > 0");
    });
  }
  if (image) {
    guard("image", [&] {
      const auto& p = image->phantom;
      if (p.width < 1 || p.height < 1 || !(p.pitch_m > 0.0)) {
        throw SettingsError("phantom needs positive dimensions and pitch");
      }
      materials.check(p.background);
      materials.check(p.blob);
      if (!(image->gray_white_db > image->gray_black_db)) {
        throw SettingsError("gray_white must exceed gray_black");
      }
      ScanPlan plan;
      plan.nx = image->nx;
      plan.ny = image->ny;
      plan.step_m = image->step_m;
      plan.spot_diameter_m = image->spot_diameter_m;
      plan.lock_detuning_hz = image->lock_detuning_hz;
      plan.analyzer = analyzer;
      plan.validate();
    });
  }
  if (viability) {
    guard("viability", [&] {
      const auto& v = *viability;
      if (!materials.contains(v.target_material)) {
        throw SettingsError("target material '" + v.target_material + "' is not defined");
      }
      if (v.target_resonance_index >= materials.at(v.target_material).resonances.size()) {
        throw SettingsError("target_resonance_index out of range");
      }
      if (v.calibration.empty() && !(v.rate_k && v.alpha)) {
        throw SettingsError("give calibration points or both rate and alpha");
      }
      if (v.conditions.empty()) throw SettingsError("at least one condition is required");
      for (const auto& c : v.conditions) {
        if (!(c.pump_power_w >= 0.0)) throw SettingsError("condition pump power must be >= 0");
      }
      if (!(v.horizon_s > 0.0) || !(v.interval_s > 0.0)) {
        throw SettingsError("horizon and interval must be > 0");
      }
      if (v.spectrum_averages < 1) throw SettingsError("spectrum_averages must be >= 1");
      materials.check(v.sample);
    });
  }
}

/// Parses a configuration document. `base_dir` resolves a relative materials_file.
inline ExperimentConfig parse_config(const YAML::Node& root, const std::string& base_dir = ".") {
  using config_detail::Section;
  using D = Dimension;
  if (!root || root.IsNull()) throw ConfigError("<root>: configuration is empty");
  Section top(root, "");
  ExperimentConfig cfg;
  cfg.seed = top.unsigned_integer("seed", cfg.seed);
  cfg.output_dir = top.text("output_dir", cfg.output_dir);

  if (top.has("materials") && top.has("materials_file")) {
    top.fail("materials", "give either 'materials' or 'materials_file', not both");
  }
  if (top.has("materials")) {
    cfg.materials = config_detail::read_material_list(top.take("materials"), "materials");
  } else if (top.has("materials_file")) {
    std::filesystem::path p = top.text("materials_file", "");
    if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
    cfg.materials = config_detail::load_materials_file(p.string());
  }

  if (top.has("source")) {
    Section s = top.child("source");
    LightSource& src = cfg.source;
    src.probe_power_w = s.quantity("probe_power", D::Power, src.probe_power_w);
    src.conjugate_power_w = s.quantity("conjugate_power", D::Power, src.conjugate_power_w);
    src.pump_power_w = s.quantity("pump_power", D::Power, src.pump_power_w);
    src.transmission = s.number("transmission", src.transmission);
    src.squeezing_corner_hz = s.quantity("squeezing_corner", D::Frequency, src.squeezing_corner_hz);
    cfg.squeezing_db = s.quantity("squeezing", D::Decibel, cfg.squeezing_db);
    const StateKind kind = config_detail::read_state(s.text("state", "coherent"), s, "state");
    src = source_in_state(src, kind, cfg.squeezing_db);
    s.finish();
  }

  if (top.has("chain")) {
    Section c = top.child("chain");
    DetectionChain& ch = cfg.chain;
    ch.pump_mod_freq_hz = c.quantity("pump_mod_freq", D::Frequency, ch.pump_mod_freq_hz);
    ch.probe_mod_freq_hz = c.quantity("probe_mod_freq", D::Frequency, ch.probe_mod_freq_hz);
    ch.detector_gain = c.number("detector_gain", ch.detector_gain);
    ch.cmrr_db = c.quantity("cmrr", D::Decibel, ch.cmrr_db);
    ch.electronic_noise_dbm = c.quantity("electronic_noise", D::DecibelMilliwatt, ch.electronic_noise_dbm);
    ch.shot_anchor_dbm = c.quantity("shot_anchor", D::DecibelMilliwatt, ch.shot_anchor_dbm);
    ch.shot_anchor_probe_w = c.quantity("shot_anchor_probe_power", D::Power, ch.shot_anchor_probe_w);
    ch.reference_rbw_hz = c.quantity("reference_rbw", D::Frequency, ch.reference_rbw_hz);
    ch.modulation_depth = c.number("modulation_depth", ch.modulation_depth);
    ch.dc_responsivity = c.number("dc_responsivity", ch.dc_responsivity);
    ch.pump_leakage = c.number("pump_leakage", ch.pump_leakage);
    ch.sample_rate_hz = c.quantity("sample_rate", D::Frequency, ch.sample_rate_hz);
    if (c.has("common_mode_noise")) {
      // A spectral density: "<level> dBm" per Hz, or "none".
      const std::string t = c.text("common_mode_noise", "");
      if (t == "none") {
        ch.common_mode_noise_dbm_hz = -std::numeric_limits<double>::infinity();
      } else {
        std::string level = t;
        const auto slash = level.find("/Hz");
        if (slash == std::string::npos || slash + 3 != level.size()) {
          c.fail("common_mode_noise", "expected '<level> dBm/Hz' or 'none'");
        }
        level.resize(slash);
        try {
          ch.common_mode_noise_dbm_hz = parse_quantity(level, D::DecibelMilliwatt);
        } catch (const UnitError& e) {
          c.fail("common_mode_noise", e.what());
        }
      }
    }
    if (c.has("common_mode_tones")) {
      const YAML::Node tones = c.sequence("common_mode_tones");
      for (std::size_t i = 0; i < tones.size(); ++i) {
        Section t(tones[i], c.key_path("common_mode_tones") + "[" + std::to_string(i) + "]");
        CommonModeTone tone;
        tone.frequency_hz = t.quantity("frequency", D::Frequency, 0.0);
        tone.power_dbm = t.quantity("power", D::DecibelMilliwatt, tone.power_dbm);
        t.finish();
        ch.common_mode_tones.push_back(tone);
      }
    }
    c.finish();
  }

  if (top.has("analyzer")) {
    Section a = top.child("analyzer");
    const std::string mode = a.text("mode", "swept");
    AnalyzerSettings& an = cfg.analyzer;
    if (mode == "zero_span") {
      an = AnalyzerSettings::zero_span();
    } else if (mode != "swept") {
      a.fail("mode", "mode must be 'swept' or 'zero_span', got '" + mode + "'");
    }
    an.rbw_hz = a.quantity("rbw", D::Frequency, an.rbw_hz);
    an.vbw_hz = a.quantity("vbw", D::Frequency, an.vbw_hz);
    an.start_hz = a.quantity("start", D::Frequency, an.start_hz);
    an.stop_hz = a.quantity("stop", D::Frequency, an.stop_hz);
    an.center_hz = a.quantity("center", D::Frequency, an.center_hz);
    an.points = static_cast<int>(a.integer("points", an.points));
    an.sweep_time_s = a.quantity("sweep_time", D::Time, an.sweep_time_s);
    a.finish();
  }

  if (top.has("lockin")) {
    Section l = top.child("lockin");
    LockInSettings& li = cfg.lockin;
    li.time_constant_s = l.quantity("time_constant", D::Time, li.time_constant_s);
    li.scan_rate_hz = l.quantity("scan_rate", D::Frequency, li.scan_rate_hz);
    li.grid_step_hz = l.quantity("grid_step", D::Frequency, li.grid_step_hz);
    li.min_grid_step_hz = l.quantity("min_grid_step", D::Frequency, li.min_grid_step_hz);
    li.averages = static_cast<int>(l.integer("averages", li.averages));
    l.finish();
  }

  if (top.has("fit")) {
    Section f = top.child("fit");
    cfg.fit.max_relative_residual = f.number("max_relative_residual", cfg.fit.max_relative_residual);
    cfg.fit.max_function_evaluations =
        static_cast<int>(f.integer("max_function_evaluations", cfg.fit.max_function_evaluations));
    cfg.fit.rayleigh_width_guess_hz =
        f.quantity("rayleigh_width_guess", D::Frequency, cfg.fit.rayleigh_width_guess_hz);
    f.finish();
  }

  if (top.has("spectrum")) {
    Section s = top.child("spectrum");
    SpectrumSection sp;
    if (s.has("traces")) {
      Section traces = s.child("traces");
      const YAML::Node n = root["spectrum"]["traces"];
      for (auto it = n.begin(); it != n.end(); ++it) {
        const std::string name = it->first.as<std::string>();
        sp.traces.push_back({name, config_detail::read_mixture(traces, name)});
      }
      traces.finish();
    }
    if (sp.traces.empty()) s.fail("traces", "at least one named trace is required");
    sp.range = config_detail::read_range(s, sp.range);
    s.finish();
    cfg.spectrum = std::move(sp);
  }

  if (top.has("gain")) {
    Section g = top.child("gain");
    GainSection gs;
    if (g.has("mixture")) gs.mixture = config_detail::read_mixture(g, "mixture");
    gs.lock_detuning_hz = g.quantity("lock_detuning", D::Frequency, gs.lock_detuning_hz);
    gs.states = config_detail::read_states(g, "states", gs.states);
    gs.enabled = g.boolean("enabled", gs.enabled);
    gs.signal_exclusion_hz = g.quantity("signal_exclusion", D::Frequency, gs.signal_exclusion_hz);
    g.finish();
    cfg.gain = std::move(gs);
  }

  if (top.has("image")) {
    Section im = top.child("image");
    ImageSection is;
    is.states = config_detail::read_states(im, "states", is.states);
    is.nx = static_cast<int>(im.integer("nx", is.nx));
    is.ny = static_cast<int>(im.integer("ny", is.ny));
    is.step_m = im.quantity("step", D::Length, is.step_m);
    is.origin_x_m = im.quantity("origin_x", D::Length, is.origin_x_m);
    is.origin_y_m = im.quantity("origin_y", D::Length, is.origin_y_m);
    is.lock_detuning_hz = im.quantity("lock_detuning", D::Frequency, is.lock_detuning_hz);
    is.spot_diameter_m = im.quantity("spot_diameter", D::Length, is.spot_diameter_m);
    is.estimation_noise = im.boolean("estimation_noise", is.estimation_noise);
    is.gray_black_db = im.quantity("gray_black", D::Decibel, is.gray_black_db);
    is.gray_white_db = im.quantity("gray_white", D::Decibel, is.gray_white_db);
    if (im.has("phantom")) {
      Section ph = im.child("phantom");
      PhantomSection& p = is.phantom;
      p.width = static_cast<int>(ph.integer("width", p.width));
      p.height = static_cast<int>(ph.integer("height", p.height));
      p.pitch_m = ph.quantity("pitch", D::Length, p.pitch_m);
      if (ph.has("background")) p.background = config_detail::read_mixture(ph, "background");
      if (ph.has("blob")) p.blob = config_detail::read_mixture(ph, "blob");
      if (ph.has("blobs")) {
        const YAML::Node list = ph.sequence("blobs");
        for (std::size_t i = 0; i < list.size(); ++i) {
          Section b(list[i], ph.key_path("blobs") + "[" + std::to_string(i) + "]");
          Disc d;
          d.x_m = b.quantity("x", D::Length, 0.0);
          d.y_m = b.quantity("y", D::Length, 0.0);
          d.radius_m = b.quantity("radius", D::Length, 0.0);
          b.finish();
          p.blobs.push_back(d);
        }
      }
      if (ph.has("random_blobs")) {
        Section rb = ph.child("random_blobs");
        p.random_blobs.count = static_cast<int>(rb.integer("count", 0));
        p.random_blobs.min_radius_m = rb.quantity("min_radius", D::Length, 0.0);
        p.random_blobs.max_radius_m = rb.quantity("max_radius", D::Length, 0.0);
        rb.finish();
        if (p.random_blobs.count < 0 || p.random_blobs.max_radius_m < p.random_blobs.min_radius_m) {
          ph.fail("random_blobs", "need count >= 0 and max_radius >= min_radius");
        }
      }
      ph.finish();
    }
    im.finish();
    cfg.image = std::move(is);
  }

  if (top.has("viability")) {
    Section v = top.child("viability");
    ViabilitySection vs;
    vs.target_material = v.text("target_material", vs.target_material);
    vs.target_resonance_index = static_cast<std::size_t>(
        v.unsigned_integer("target_resonance_index", vs.target_resonance_index));
    if (v.has("calibration")) {
      const YAML::Node list = v.sequence("calibration");
      for (std::size_t i = 0; i < list.size(); ++i) {
        Section c(list[i], v.key_path("calibration") + "[" + std::to_string(i) + "]");
        DamagePoint pt;
        pt.power_w = c.quantity("power", D::Power, 0.0);
        pt.time_s = c.quantity("time", D::Time, 0.0);
        pt.viability = c.number("viability", 1.0);
        c.finish();
        vs.calibration.push_back(pt);
      }
    }
    if (v.has("rate_per_mw_alpha_hour")) vs.rate_k = v.number("rate_per_mw_alpha_hour", 0.0);
    if (v.has("alpha")) vs.alpha = v.number("alpha", 1.0);
    if (v.has("conditions")) {
      const YAML::Node list = v.sequence("conditions");
      for (std::size_t i = 0; i < list.size(); ++i) {
        Section c(list[i], v.key_path("conditions") + "[" + std::to_string(i) + "]");
        ConditionSpec cs;
        cs.state = config_detail::read_state(c.text("state", "coherent"), c, "state");
        cs.label = c.text("label", state_name(cs.state));
        cs.pump_power_w = c.quantity("pump_power", D::Power, 0.0);
        c.finish();
        vs.conditions.push_back(cs);
      }
    }
    vs.horizon_s = v.quantity("horizon", D::Time, vs.horizon_s);
    vs.interval_s = v.quantity("interval", D::Time, vs.interval_s);
    vs.spectra = v.boolean("spectra", vs.spectra);
    if (v.has("sample")) vs.sample = config_detail::read_mixture(v, "sample");
    vs.spectrum_averages = static_cast<int>(v.integer("spectrum_averages", vs.spectrum_averages));
    vs.range = config_detail::read_range(v, vs.range);
    v.finish();
    cfg.viability = std::move(vs);
  }

  top.finish();
  cfg.validate();
  return cfg;
}

inline ExperimentConfig parse_config_text(const std::string& text, const std::string& base_dir = ".") {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError("line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  return parse_config(root, base_dir);
}

inline ExperimentConfig load_config(const std::string& path) {
  const YAML::Node root = config_detail::load_yaml_file(path);
  const auto dir = std::filesystem::path(path).parent_path();
  try {
    return parse_config(root, dir.empty() ? "." : dir.string());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Resolved snapshot

namespace config_detail {

inline std::string q(double v, const char* unit) { return fmt_shortest(v) + " " + unit; }

inline void emit_mixture(YAML::Emitter& e, const Mixture& m) {
  e << YAML::BeginMap;
  for (const auto& [name, w] : m.weights()) e << YAML::Key << name << YAML::Value << fmt_shortest(w);
  e << YAML::EndMap;
}

inline void emit_states(YAML::Emitter& e, const std::vector<StateKind>& states) {
  e << YAML::Flow << YAML::BeginSeq;
  for (auto s : states) e << state_name(s);
  e << YAML::EndSeq;
}

}  // namespace config_detail

inline std::string write_resolved_config(const ExperimentConfig& cfg) {
  using config_detail::emit_mixture;
  using config_detail::q;
  YAML::Emitter e;
  e << YAML::BeginMap;
  e << YAML::Key << "seed" << YAML::Value << std::to_string(cfg.seed);

  e << YAML::Key << "materials" << YAML::Value << YAML::BeginSeq;
  for (const auto& [name, m] : cfg.materials.materials()) {
    e << YAML::BeginMap << YAML::Key << "name" << YAML::Value << name;
    e << YAML::Key << "resonances" << YAML::Value << YAML::BeginSeq;
    for (const auto& r : m.resonances) {
      e << YAML::Flow << YAML::BeginMap;
      e << YAML::Key << "shift" << YAML::Value << q(r.shift_hz, "Hz");
      e << YAML::Key << "linewidth" << YAML::Value << q(r.linewidth_hz, "Hz");
      e << YAML::Key << "gain" << YAML::Value << fmt_shortest(r.gain_strength);
      e << YAML::EndMap;
    }
    e << YAML::EndSeq;
    e << YAML::Key << "rayleigh" << YAML::Value << YAML::Flow << YAML::BeginMap;
    e << YAML::Key << "strength" << YAML::Value << fmt_shortest(m.rayleigh_strength);
    e << YAML::Key << "width" << YAML::Value << q(m.rayleigh_width_hz, "Hz");
    e << YAML::EndMap << YAML::EndMap;
  }
  e << YAML::EndSeq;

  const LightSource& s = cfg.source;
  e << YAML::Key << "source" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "state" << YAML::Value << (s.squeezed() ? "squeezed" : "coherent");
  e << YAML::Key << "squeezing" << YAML::Value << q(cfg.squeezing_db, "dB");
  e << YAML::Key << "probe_power" << YAML::Value << q(s.probe_power_w, "W");
  e << YAML::Key << "conjugate_power" << YAML::Value << q(s.conjugate_power_w, "W");
  e << YAML::Key << "pump_power" << YAML::Value << q(s.pump_power_w, "W");
  e << YAML::Key << "transmission" << YAML::Value << fmt_shortest(s.transmission);
  e << YAML::Key << "squeezing_corner" << YAML::Value << q(s.squeezing_corner_hz, "Hz");
  e << YAML::EndMap;

  const DetectionChain& c = cfg.chain;
  e << YAML::Key << "chain" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "pump_mod_freq" << YAML::Value << q(c.pump_mod_freq_hz, "Hz");
  e << YAML::Key << "probe_mod_freq" << YAML::Value << q(c.probe_mod_freq_hz, "Hz");
  e << YAML::Key << "detector_gain" << YAML::Value << fmt_shortest(c.detector_gain);
  e << YAML::Key << "cmrr" << YAML::Value << q(c.cmrr_db, "dB");
  e << YAML::Key << "electronic_noise" << YAML::Value << q(c.electronic_noise_dbm, "dBm");
  e << YAML::Key << "shot_anchor" << YAML::Value << q(c.shot_anchor_dbm, "dBm");
  e << YAML::Key << "shot_anchor_probe_power" << YAML::Value << q(c.shot_anchor_probe_w, "W");
  e << YAML::Key << "reference_rbw" << YAML::Value << q(c.reference_rbw_hz, "Hz");
  e << YAML::Key << "modulation_depth" << YAML::Value << fmt_shortest(c.modulation_depth);
  e << YAML::Key << "dc_responsivity" << YAML::Value << fmt_shortest(c.dc_responsivity);
  e << YAML::Key << "pump_leakage" << YAML::Value << fmt_shortest(c.pump_leakage);
  e << YAML::Key << "sample_rate" << YAML::Value << q(c.sample_rate_hz, "Hz");
  e << YAML::Key << "common_mode_noise" << YAML::Value
    << (std::isfinite(c.common_mode_noise_dbm_hz) ? fmt_shortest(c.common_mode_noise_dbm_hz) + " dBm/Hz"
                                                  : std::string("none"));
  e << YAML::Key << "common_mode_tones" << YAML::Value << YAML::BeginSeq;
  for (const auto& t : c.common_mode_tones) {
    e << YAML::Flow << YAML::BeginMap;
    e << YAML::Key << "frequency" << YAML::Value << q(t.frequency_hz, "Hz");
    e << YAML::Key << "power" << YAML::Value << q(t.power_dbm, "dBm");
    e << YAML::EndMap;
  }
  e << YAML::EndSeq << YAML::EndMap;

  const AnalyzerSettings& a = cfg.analyzer;
  e << YAML::Key << "analyzer" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "mode" << YAML::Value << (a.mode == AnalyzerMode::Swept ? "swept" : "zero_span");
  e << YAML::Key << "rbw" << YAML::Value << q(a.rbw_hz, "Hz");
  e << YAML::Key << "vbw" << YAML::Value << q(a.vbw_hz, "Hz");
  e << YAML::Key << "start" << YAML::Value << q(a.start_hz, "Hz");
  e << YAML::Key << "stop" << YAML::Value << q(a.stop_hz, "Hz");
  e << YAML::Key << "center" << YAML::Value << q(a.center_hz, "Hz");
  e << YAML::Key << "points" << YAML::Value << std::to_string(a.points);
  e << YAML::Key << "sweep_time" << YAML::Value << q(a.sweep_time_s, "s");
  e << YAML::EndMap;

  const LockInSettings& l = cfg.lockin;
  e << YAML::Key << "lockin" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "time_constant" << YAML::Value << q(l.time_constant_s, "s");
  e << YAML::Key << "scan_rate" << YAML::Value << q(l.scan_rate_hz, "Hz");
  e << YAML::Key << "grid_step" << YAML::Value << q(l.grid_step_hz, "Hz");
  e << YAML::Key << "min_grid_step" << YAML::Value << q(l.min_grid_step_hz, "Hz");
  e << YAML::Key << "averages" << YAML::Value << std::to_string(l.averages);
  e << YAML::EndMap;

  e << YAML::Key << "fit" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "max_relative_residual" << YAML::Value << fmt_shortest(cfg.fit.max_relative_residual);
  e << YAML::Key << "max_function_evaluations" << YAML::Value
    << std::to_string(cfg.fit.max_function_evaluations);
  e << YAML::Key << "rayleigh_width_guess" << YAML::Value << q(cfg.fit.rayleigh_width_guess_hz, "Hz");
  e << YAML::EndMap;

  if (cfg.spectrum) {
    e << YAML::Key << "spectrum" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "traces" << YAML::Value << YAML::BeginMap;
    for (const auto& t : cfg.spectrum->traces) {
      e << YAML::Key << t.name << YAML::Value;
      emit_mixture(e, t.mixture);
    }
    e << YAML::EndMap;
    e << YAML::Key << "detuning_start" << YAML::Value << q(cfg.spectrum->range.start_hz, "Hz");
    e << YAML::Key << "detuning_stop" << YAML::Value << q(cfg.spectrum->range.stop_hz, "Hz");
    e << YAML::EndMap;
  }

  if (cfg.gain) {
    const GainSection& g = *cfg.gain;
    e << YAML::Key << "gain" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "mixture" << YAML::Value;
    emit_mixture(e, g.mixture);
    e << YAML::Key << "lock_detuning" << YAML::Value << q(g.lock_detuning_hz, "Hz");
    e << YAML::Key << "states" << YAML::Value;
    config_detail::emit_states(e, g.states);
    e << YAML::Key << "enabled" << YAML::Value << (g.enabled ? "true" : "false");
    e << YAML::Key << "signal_exclusion" << YAML::Value << q(g.signal_exclusion_hz, "Hz");
    e << YAML::EndMap;
  }

  if (cfg.image) {
    const ImageSection& im = *cfg.image;
    e << YAML::Key << "image" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "states" << YAML::Value;
    config_detail::emit_states(e, im.states);
    e << YAML::Key << "nx" << YAML::Value << std::to_string(im.nx);
    e << YAML::Key << "ny" << YAML::Value << std::to_string(im.ny);
    e << YAML::Key << "step" << YAML::Value << q(im.step_m, "m");
    e << YAML::Key << "origin_x" << YAML::Value << q(im.origin_x_m, "m");
    e << YAML::Key << "origin_y" << YAML::Value << q(im.origin_y_m, "m");
    e << YAML::Key << "lock_detuning" << YAML::Value << q(im.lock_detuning_hz, "Hz");
    e << YAML::Key << "spot_diameter" << YAML::Value << q(im.spot_diameter_m, "m");
    e << YAML::Key << "estimation_noise" << YAML::Value << (im.estimation_noise ? "true" : "false");
    e << YAML::Key << "gray_black" << YAML::Value << q(im.gray_black_db, "dB");
    e << YAML::Key << "gray_white" << YAML::Value << q(im.gray_white_db, "dB");
    const PhantomSection& p = im.phantom;
    e << YAML::Key << "phantom" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "width" << YAML::Value << std::to_string(p.width);
    e << YAML::Key << "height" << YAML::Value << std::to_string(p.height);
    e << YAML::Key << "pitch" << YAML::Value << q(p.pitch_m, "m");
    e << YAML::Key << "background" << YAML::Value;
    emit_mixture(e, p.background);
    e << YAML::Key << "blob" << YAML::Value;
    emit_mixture(e, p.blob);
    e << YAML::Key << "blobs" << YAML::Value << YAML::BeginSeq;
    for (const auto& d : p.blobs) {
      e << YAML::Flow << YAML::BeginMap;
      e << YAML::Key << "x" << YAML::Value << q(d.x_m, "m");
      e << YAML::Key << "y" << YAML::Value << q(d.y_m, "m");
      e << YAML::Key << "radius" << YAML::Value << q(d.radius_m, "m");
      e << YAML::EndMap;
    }
    e << YAML::EndSeq;
    e << YAML::Key << "random_blobs" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "count" << YAML::Value << std::to_string(p.random_blobs.count);
    e << YAML::Key << "min_radius" << YAML::Value << q(p.random_blobs.min_radius_m, "m");
    e << YAML::Key << "max_radius" << YAML::Value << q(p.random_blobs.max_radius_m, "m");
    e << YAML::EndMap;
    e << YAML::EndMap << YAML::EndMap;
  }

  if (cfg.viability) {
    const ViabilitySection& v = *cfg.viability;
    e << YAML::Key << "viability" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "target_material" << YAML::Value << v.target_material;
    e << YAML::Key << "target_resonance_index" << YAML::Value << std::to_string(v.target_resonance_index);
    if (!v.calibration.empty()) {
      e << YAML::Key << "calibration" << YAML::Value << YAML::BeginSeq;
      for (const auto& pt : v.calibration) {
        e << YAML::Flow << YAML::BeginMap;
        e << YAML::Key << "power" << YAML::Value << q(pt.power_w, "W");
        e << YAML::Key << "time" << YAML::Value << q(pt.time_s, "s");
        e << YAML::Key << "viability" << YAML::Value << fmt_shortest(pt.viability);
        e << YAML::EndMap;
      }
      e << YAML::EndSeq;
    }
    if (v.rate_k) e << YAML::Key << "rate_per_mw_alpha_hour" << YAML::Value << fmt_shortest(*v.rate_k);
    if (v.alpha) e << YAML::Key << "alpha" << YAML::Value << fmt_shortest(*v.alpha);
    e << YAML::Key << "conditions" << YAML::Value << YAML::BeginSeq;
    for (const auto& cs : v.conditions) {
      e << YAML::Flow << YAML::BeginMap;
      e << YAML::Key << "label" << YAML::Value << cs.label;
      e << YAML::Key << "state" << YAML::Value << state_name(cs.state);
      e << YAML::Key << "pump_power" << YAML::Value << q(cs.pump_power_w, "W");
      e << YAML::EndMap;
    }
    e << YAML::EndSeq;
    e << YAML::Key << "horizon" << YAML::Value << q(v.horizon_s, "s");
    e << YAML::Key << "interval" << YAML::Value << q(v.interval_s, "s");
    e << YAML::Key << "spectra" << YAML::Value << (v.spectra ? "true" : "false");
    e << YAML::Key << "sample" << YAML::Value;
    emit_mixture(e, v.sample);
    e << YAML::Key << "spectrum_averages" << YAML::Value << std::to_string(v.spectrum_averages);
    e << YAML::Key << "detuning_start" << YAML::Value << q(v.range.start_hz, "Hz");
    e << YAML::Key << "detuning_stop" << YAML::Value << q(v.range.stop_hz, "Hz");
    e << YAML::EndMap;
  }

  e << YAML::EndMap;
  if (!e.good()) throw ConfigError("failed to serialize resolved config: " + e.GetLastError());
  return std::string(e.c_str()) + "\n";
}

}  // namespace qsbs
