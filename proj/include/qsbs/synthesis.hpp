#pragma once

// Time-domain synthesis of the two balanced-detector photocurrents.
//
// Probe arm:     DC + probe AM (400 kHz) + SBS product + pump leakage
//                + common-mode technical terms + shot noise
// Conjugate arm: (1 - d) * (DC + probe AM + common-mode terms) + shot noise
//
// The arm mismatch d sets the common-mode rejection: only the deterministic
// and technical terms see it, the shot noise subtracts exactly. Two-mode
// squeezing enters as anti-correlated differential noise scaled to the
// relative noise power R, with the per-arm excess noise of a lossy twin beam.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "qsbs/detection.hpp"
#include "qsbs/quantum_light.hpp"
#include "qsbs/rng.hpp"

namespace qsbs {

struct PhotocurrentRecord {
  double sample_rate_hz = 0.0;
  std::vector<double> probe;      ///< sqrt(mW) units
  std::vector<double> conjugate;  ///< sqrt(mW) units
  std::vector<double> balanced;   ///< probe - conjugate + electronic noise

  double duration() const { return static_cast<double>(balanced.size()) / sample_rate_hz; }
};

inline constexpr std::size_t kMaxSynthesisSamples = std::size_t{1} << 26;

/// `gain` is the signed medium response at the locked detuning.
inline PhotocurrentRecord synthesize_photocurrents(const DetectionChain& chain,
                                                   const LightSource& source, double gain,
                                                   double duration_s, double sample_rate_hz) {
  chain.validate();
  source.validate();
  if (!(sample_rate_hz > 4.0 * chain.signal_freq_hz())) {
    throw SettingsError("sample rate must exceed four times the sum frequency");
  }
  if (!(duration_s > 0.0)) throw SettingsError("synthesis duration must be > 0");
  const double n_real = std::floor(duration_s * sample_rate_hz);
  if (n_real < 2.0 || n_real > static_cast<double>(kMaxSynthesisSamples)) {
    throw SettingsError("synthesis length outside the supported range");
  }
  const auto n = static_cast<std::size_t>(n_real);

  const double fs = sample_rate_hz;
  const double m = chain.modulation_depth;
  const double rho = chain.dc_responsivity;
  const double w_pump = 2.0 * std::numbers::pi * chain.pump_mod_freq_hz / fs;
  const double w_probe = 2.0 * std::numbers::pi * chain.probe_mod_freq_hz / fs;
  const double mismatch = 1.0 - chain.common_mode_residual();

  // SBS term K (1 + m cos w1 t)(1 + m cos w2 t); the sum-frequency tone then
  // has peak amplitude K m^2 / 2 = sqrt(2) A.
  const double amp = sbs_signal_amplitude(chain, gain, source.pump_power_w, source.probe_power_w);
  const double k_sbs = 2.0 * std::numbers::sqrt2 * amp / (m * m);

  const double dc_probe = rho * source.probe_power_w / units::mW;
  const double dc_conj = rho * source.conjugate_power_w / units::mW;
  const double leak = rho * chain.pump_leakage * source.pump_power_w / units::mW;

  // Per-sample standard deviations for white noise of one-sided density D: D fs / 2.
  const double kappa = chain.shot_density_per_watt();
  const double sigma_p = std::sqrt(kappa * source.probe_power_w * fs / 2.0);
  const double sigma_c = std::sqrt(kappa * source.conjugate_power_w * fs / 2.0);
  const double sigma_e = std::sqrt(chain.electronic_density_mw_hz() * fs / 2.0);
  const double sigma_cm = std::isfinite(chain.common_mode_noise_dbm_hz)
                              ? std::sqrt(dbm_to_mw(chain.common_mode_noise_dbm_hz) * fs / 2.0)
                              : 0.0;

  // Shared (u) and differential (v) variates: n_p = s_p (a u + b v), n_c = s_c (a u - b v).
  const double r_noise = noise_budget(source, chain.signal_freq_hz()).relative_noise_power;
  const double arm = single_arm_noise_factor(source, chain.signal_freq_hz());
  const double b = std::sqrt(r_noise / 2.0);
  const double a = std::sqrt(arm - r_noise / 2.0);

  struct ToneTerm {
    double omega;
    double peak;
  };
  std::vector<ToneTerm> cm_tones;
  for (const auto& t : chain.common_mode_tones) {
    cm_tones.push_back({2.0 * std::numbers::pi * t.frequency_hz / fs,
                        std::numbers::sqrt2 * std::sqrt(dbm_to_mw(t.power_dbm))});
  }

  PhotocurrentRecord rec;
  rec.sample_rate_hz = fs;
  rec.probe.resize(n);
  rec.conjugate.resize(n);
  rec.balanced.resize(n);

  Rng rng(chain.rng_seed);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i);
    const double c_pump = std::cos(w_pump * t);
    const double c_probe = std::cos(w_probe * t);

    double common = 0.0;
    for (const auto& tone : cm_tones) common += tone.peak * std::cos(tone.omega * t);
    if (sigma_cm > 0.0) common += sigma_cm * rng.normal();

    const double u = rng.normal();
    const double v = rng.normal();
    const double shot_p = sigma_p * (a * u + b * v);
    const double shot_c = sigma_c * (a * u - b * v);

    const double probe = dc_probe * (1.0 + m * c_probe) + k_sbs * (1.0 + m * c_pump) * (1.0 + m * c_probe) +
                         leak * (1.0 + m * c_pump) + common + shot_p;
    const double conj = mismatch * (dc_conj * (1.0 + m * c_probe) + common) + shot_c;

    rec.probe[i] = probe;
    rec.conjugate[i] = conj;
    rec.balanced[i] = probe - conj + sigma_e * rng.normal();
  }
  return rec;
}

inline PhotocurrentRecord synthesize_photocurrents(const DetectionChain& chain,
                                                   const LightSource& source, double gain,
                                                   double duration_s) {
  return synthesize_photocurrents(chain, source, gain, duration_s, chain.sample_rate_hz);
}

}  // namespace qsbs
