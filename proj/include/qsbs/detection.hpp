#pragma once

// Detection-chain description and its closed-form signal/noise model.
//
// Electrical quantities use amplitude units of sqrt(mW) (rms), so the power of
// a tone is the square of its amplitude in mW. The whole electrical scale is
// anchored to one calibration point: the coherent balanced shot-noise floor
// read by the spectrum analyzer at a reference probe power and RBW.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qsbs/materials.hpp"
#include "qsbs/quantum_light.hpp"
#include "qsbs/units.hpp"

namespace qsbs {

class SettingsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Equivalent noise bandwidth of the Gaussian RBW filter with -3 dB width `rbw_hz`.
inline double noise_bandwidth(double rbw_hz) {
  return rbw_hz * std::sqrt(std::numbers::pi / (4.0 * std::numbers::ln2));
}

struct CommonModeTone {
  double frequency_hz = 0.0;
  double power_dbm = -30.0;  ///< as seen on a single detector
  bool operator==(const CommonModeTone&) const = default;
};

struct DetectionChain {
  double pump_mod_freq_hz = 300.0 * units::kHz;
  double probe_mod_freq_hz = 400.0 * units::kHz;
  /// rms amplitude (sqrt(mW)) of the sum-frequency tone per unit material
  /// response per W of pump per W of probe.
  double detector_gain = 120.0;
  double cmrr_db = 25.0;
  double electronic_noise_dbm = -81.0;  ///< in the reference RBW
  double shot_anchor_dbm = -67.0;       ///< coherent floor at the anchor probe power
  double shot_anchor_probe_w = 700.0 * units::uW;
  double reference_rbw_hz = 10.0 * units::kHz;
  double modulation_depth = 0.1;
  double dc_responsivity = 1.0;  ///< sqrt(mW) of photocurrent per mW of light
  double pump_leakage = 0.0;     ///< fraction of pump light reaching the probe detector
  std::vector<CommonModeTone> common_mode_tones;
  double common_mode_noise_dbm_hz = -std::numeric_limits<double>::infinity();
  double sample_rate_hz = 4.0 * units::MHz;
  std::uint64_t rng_seed = 1;

  double signal_freq_hz() const { return pump_mod_freq_hz + probe_mod_freq_hz; }

  /// Amplitude ratio of the common-mode residual left after subtraction.
  double common_mode_residual() const { return std::pow(10.0, -cmrr_db / 20.0); }

  /// One-sided shot-noise density (mW/Hz) contributed per W of light on one detector.
  double shot_density_per_watt() const {
    return dbm_to_mw(shot_anchor_dbm) /
           (noise_bandwidth(reference_rbw_hz) * 2.0 * shot_anchor_probe_w);
  }

  double electronic_density_mw_hz() const {
    return dbm_to_mw(electronic_noise_dbm) / noise_bandwidth(reference_rbw_hz);
  }

  void validate() const {
    auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!positive(pump_mod_freq_hz) || !positive(probe_mod_freq_hz)) {
      throw SettingsError("modulation frequencies must be > 0");
    }
    if (pump_mod_freq_hz == probe_mod_freq_hz) {
      throw SettingsError("pump and probe modulation frequencies must differ");
    }
    if (!(detector_gain >= 0.0) || !std::isfinite(detector_gain)) {
      throw SettingsError("detector_gain must be >= 0");
    }
    if (!(cmrr_db >= 0.0) || !std::isfinite(cmrr_db)) throw SettingsError("cmrr must be >= 0 dB");
    if (!std::isfinite(electronic_noise_dbm) || !std::isfinite(shot_anchor_dbm)) {
      throw SettingsError("noise levels must be finite");
    }
    if (!positive(shot_anchor_probe_w) || !positive(reference_rbw_hz)) {
      throw SettingsError("shot-noise anchor must have positive probe power and RBW");
    }
    if (!(modulation_depth > 0.0 && modulation_depth <= 1.0)) {
      throw SettingsError("modulation depth must lie in (0, 1]");
    }
    if (!(dc_responsivity >= 0.0)) throw SettingsError("dc responsivity must be >= 0");
    if (!(pump_leakage >= 0.0 && pump_leakage <= 1.0)) {
      throw SettingsError("pump leakage must lie in [0, 1]");
    }
    if (!positive(sample_rate_hz)) throw SettingsError("sample rate must be > 0");
  }

  bool operator==(const DetectionChain&) const = default;
};

enum class AnalyzerMode { Swept, ZeroSpan };

struct AnalyzerSettings {
  AnalyzerMode mode = AnalyzerMode::Swept;
  double rbw_hz = 10.0 * units::kHz;
  double vbw_hz = 10.0;
  double start_hz = 625.0 * units::kHz;
  double stop_hz = 775.0 * units::kHz;
  double center_hz = 700.0 * units::kHz;  ///< zero-span only
  int points = 601;
  double sweep_time_s = 1.0;

  static AnalyzerSettings zero_span(double center_hz = 700.0 * units::kHz) {
    AnalyzerSettings s;
    s.mode = AnalyzerMode::ZeroSpan;
    s.rbw_hz = 3.0 * units::kHz;
    s.vbw_hz = 300.0;
    s.center_hz = center_hz;
    s.points = 101;
    s.sweep_time_s = 2.0 * units::ms;
    return s;
  }

  /// Moving-average length whose noise bandwidth equals the VBW.
  double video_averaging_time() const { return 1.0 / (2.0 * vbw_hz); }

  /// Independent power samples behind one displayed point.
  double independent_samples() const { return noise_bandwidth(rbw_hz) * video_averaging_time(); }

  double point_frequency(int i) const {
    if (mode == AnalyzerMode::ZeroSpan) return center_hz;
    return start_hz + (stop_hz - start_hz) * i / (points - 1);
  }

  void validate() const {
    if (!(rbw_hz > 0.0) || !(vbw_hz > 0.0)) throw SettingsError("rbw and vbw must be > 0");
    if (vbw_hz > rbw_hz) throw SettingsError("vbw must not exceed rbw");
    if (!(sweep_time_s > 0.0)) throw SettingsError("sweep time must be > 0");
    if (mode == AnalyzerMode::Swept) {
      if (points < 2) throw SettingsError("a swept trace needs at least 2 points");
      if (!(start_hz >= 0.0) || !(stop_hz > start_hz)) {
        throw SettingsError("sweep span must satisfy 0 <= start < stop");
      }
    } else {
      if (points < 1) throw SettingsError("a zero-span trace needs at least 1 point");
      if (!(center_hz > 0.0)) throw SettingsError("zero-span center must be > 0");
    }
  }

  bool operator==(const AnalyzerSettings&) const = default;
};

struct LockInSettings {
  double time_constant_s = 0.3;
  double scan_rate_hz = 0.02;
  double grid_step_hz = 40.0 * units::MHz;
  double min_grid_step_hz = 40.0 * units::MHz;  ///< detuning-lock hardware floor
  int averages = 1;

  /// Equivalent noise bandwidth of a first-order RC output filter.
  double noise_bandwidth() const { return 1.0 / (4.0 * time_constant_s); }

  void validate() const {
    if (!(time_constant_s > 0.0)) throw SettingsError("lock-in time constant must be > 0");
    if (!(scan_rate_hz > 0.0)) throw SettingsError("lock-in scan rate must be > 0");
    if (!(grid_step_hz > 0.0)) throw SettingsError("detuning grid step must be > 0");
    if (grid_step_hz < min_grid_step_hz) {
      throw SettingsError("detuning grid step is below the configured floor");
    }
    if (averages < 1) throw SettingsError("lock-in averages must be >= 1");
  }

  bool operator==(const LockInSettings&) const = default;
};

/// A measured or synthesized trace with enough metadata to regenerate it.
struct SpectrumTrace {
  std::string x_name = "frequency";
  std::string x_unit = "Hz";
  std::string y_name = "power";
  std::string y_unit = "dBm";
  std::vector<double> axis;
  std::vector<double> values;
  std::vector<std::pair<std::string, std::string>> metadata;

  void set(const std::string& key, std::string value) {
    for (auto& [k, v] : metadata) {
      if (k == key) {
        v = std::move(value);
        return;
      }
    }
    metadata.emplace_back(key, std::move(value));
  }

  const std::string* find(const std::string& key) const {
    for (const auto& [k, v] : metadata) {
      if (k == key) return &v;
    }
    return nullptr;
  }

  void validate() const {
    if (axis.size() != values.size()) throw SettingsError("trace axis/value length mismatch");
    for (std::size_t i = 0; i < axis.size(); ++i) {
      if (!std::isfinite(axis[i]) || !std::isfinite(values[i])) {
        throw SettingsError("trace contains non-finite samples");
      }
      if (i > 0 && !(axis[i] > axis[i - 1])) {
        throw SettingsError("trace axis must be strictly increasing");
      }
    }
  }
};

// ---------------------------------------------------------------------------
// Closed-form signal and noise model

/// Signed rms amplitude (sqrt(mW)) of the SBS tone at the sum frequency.
inline double sbs_signal_amplitude(const DetectionChain& chain, double gain, double pump_power_w,
                                   double probe_power_w) {
  if (pump_power_w < 0.0 || probe_power_w < 0.0) {
    throw SettingsError("optical powers must be >= 0");
  }
  return chain.detector_gain * gain * pump_power_w * probe_power_w;
}

inline double sbs_signal_power_mw(const DetectionChain& chain, double gain, double pump_power_w,
                                  double probe_power_w) {
  const double a = sbs_signal_amplitude(chain, gain, pump_power_w, probe_power_w);
  return a * a;
}

/// Coherent balanced shot-noise power in `rbw_hz`, assuming a conjugate arm
/// matched to the probe.
inline double shot_noise_dbm(const DetectionChain& chain, double probe_power_w, double rbw_hz) {
  if (!(probe_power_w > 0.0) || !(rbw_hz > 0.0)) {
    throw SettingsError("shot noise needs probe power > 0 and rbw > 0");
  }
  return mw_to_dbm(chain.shot_density_per_watt() * 2.0 * probe_power_w * noise_bandwidth(rbw_hz));
}

inline double shot_noise_dbm(double probe_power_w, double rbw_hz) {
  return shot_noise_dbm(DetectionChain{}, probe_power_w, rbw_hz);
}

inline double electronic_noise_mw(const DetectionChain& chain, double rbw_hz) {
  return chain.electronic_density_mw_hz() * noise_bandwidth(rbw_hz);
}

/// One-sided noise density (mW/Hz) of the balanced output near `freq_hz`.
inline double balanced_noise_density(const DetectionChain& chain, const LightSource& source,
                                     double freq_hz) {
  const double shot =
      chain.shot_density_per_watt() * (source.probe_power_w + source.conjugate_power_w);
  const double r = noise_budget(source, freq_hz).relative_noise_power;
  double density = shot * r + chain.electronic_density_mw_hz();
  if (std::isfinite(chain.common_mode_noise_dbm_hz)) {
    const double d = chain.common_mode_residual();
    density += dbm_to_mw(chain.common_mode_noise_dbm_hz) * d * d;
  }
  return density;
}

struct SnrResult {
  double signal_mw = 0.0;
  double noise_mw = 0.0;
  double raw_db = -std::numeric_limits<double>::infinity();  ///< may be -inf
  double contrast_db = 0.0;                                  ///< max(0, raw_db)
};

inline SnrResult make_snr(double signal_mw, double noise_mw) {
  SnrResult out;
  out.signal_mw = signal_mw;
  out.noise_mw = noise_mw;
  if (signal_mw > 0.0) out.raw_db = ratio_to_db(signal_mw / noise_mw);
  out.contrast_db = out.raw_db > 0.0 ? out.raw_db : 0.0;
  return out;
}

/// Closed-form SNR of the sum-frequency tone for a given medium response.
inline SnrResult analytic_snr(const DetectionChain& chain, const LightSource& source,
                              double response, double rbw_hz) {
  const double s =
      sbs_signal_power_mw(chain, response, source.pump_power_w, source.probe_power_w);
  const double n =
      balanced_noise_density(chain, source, chain.signal_freq_hz()) * noise_bandwidth(rbw_hz);
  return make_snr(s, n);
}

inline SnrResult analytic_snr(const DetectionChain& chain, const LightSource& source,
                              const MaterialRegistry& registry, const Mixture& mixture,
                              double lock_detuning_hz, double rbw_hz) {
  return analytic_snr(chain, source, material_response(registry, mixture, lock_detuning_hz),
                      rbw_hz);
}

inline double analytic_snr_db(const DetectionChain& chain, const LightSource& source,
                              const MaterialRegistry& registry, const Mixture& mixture,
                              double lock_detuning_hz,
                              double rbw_hz = 10.0 * units::kHz) {
  return analytic_snr(chain, source, registry, mixture, lock_detuning_hz, rbw_hz).raw_db;
}

}  // namespace qsbs
