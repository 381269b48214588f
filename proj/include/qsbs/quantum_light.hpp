#pragma once

// Probe/conjugate light statistics: coherent versus two-mode
// intensity-difference squeezed light with beam-splitter loss.

#include <cmath>
#include <stdexcept>
#include <string>
#include <variant>

#include "qsbs/units.hpp"

namespace qsbs {

class SourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Coherent {
  bool operator==(const Coherent&) const = default;
};

struct TwoModeSqueezed {
  double squeezing_db = 7.0;  ///< source intensity-difference squeezing
  bool operator==(const TwoModeSqueezed&) const = default;
};

using QuantumState = std::variant<Coherent, TwoModeSqueezed>;

struct LightSource {
  double probe_power_w = 700.0 * units::uW;
  double conjugate_power_w = 700.0 * units::uW;
  double pump_power_w = 7.0 * units::mW;
  QuantumState state = Coherent{};
  double transmission = 0.691;  ///< end-to-end detection efficiency
  /// Optional roll-off of squeezing with analysis frequency; 0 keeps it flat.
  double squeezing_corner_hz = 0.0;

  bool squeezed() const { return std::holds_alternative<TwoModeSqueezed>(state); }

  double squeezing_db() const {
    if (auto* s = std::get_if<TwoModeSqueezed>(&state)) return s->squeezing_db;
    return 0.0;
  }

  void validate() const {
    auto finite_nonneg = [](double v) { return std::isfinite(v) && v >= 0.0; };
    if (!finite_nonneg(probe_power_w)) throw SourceError("probe power must be >= 0");
    if (!finite_nonneg(conjugate_power_w)) throw SourceError("conjugate power must be >= 0");
    if (!finite_nonneg(pump_power_w)) throw SourceError("pump power must be >= 0");
    if (!finite_nonneg(squeezing_db())) throw SourceError("squeezing must be >= 0 dB");
    if (!(transmission > 0.0 && transmission <= 1.0)) {
      throw SourceError("transmission must lie in (0, 1]");
    }
    if (!finite_nonneg(squeezing_corner_hz)) {
      throw SourceError("squeezing corner frequency must be >= 0");
    }
  }

  LightSource with_state(QuantumState s) const {
    LightSource copy = *this;
    copy.state = s;
    return copy;
  }

  LightSource with_pump(double watts) const {
    LightSource copy = *this;
    copy.pump_power_w = watts;
    return copy;
  }

  bool operator==(const LightSource&) const = default;
};

struct NoiseBudget {
  double beta = 1.0;                 ///< differential noise amplitude / shot noise amplitude
  double relative_noise_power = 1.0; ///< beta^2
};

/// Squeezing parameter r with cosh(2r) = 10^(dB/10).
inline double squeezing_to_r(double squeezing_db) {
  if (!(squeezing_db >= 0.0) || !std::isfinite(squeezing_db)) {
    throw SourceError("squeezing must be a finite value >= 0 dB");
  }
  return 0.5 * std::acosh(db_to_ratio(squeezing_db));
}

inline double r_to_squeezing_db(double r) { return ratio_to_db(std::cosh(2.0 * r)); }

/// Differential-noise budget at analysis frequency `analysis_hz` (only used
/// when the source has a squeezing corner frequency).
inline NoiseBudget noise_budget(const LightSource& source, double analysis_hz = 0.0) {
  source.validate();
  if (!source.squeezed()) return {};
  double db = source.squeezing_db();
  if (source.squeezing_corner_hz > 0.0) {
    const double x = analysis_hz / source.squeezing_corner_hz;
    db /= 1.0 + x * x;
  }
  const double cosh2r = std::cosh(2.0 * squeezing_to_r(db));
  const double eta = source.transmission;
  const double r = eta / cosh2r + (1.0 - eta);
  return {std::sqrt(r), r};
}

/// Noise-floor reduction of the differential channel, in dB (0 for coherent).
inline double quantum_advantage_db(const LightSource& source, double analysis_hz = 0.0) {
  return -ratio_to_db(noise_budget(source, analysis_hz).relative_noise_power);
}

/// Single-arm intensity noise relative to shot noise. A two-mode squeezed
/// beam alone is excess-noisy (thermal-like); loss mixes in vacuum.
inline double single_arm_noise_factor(const LightSource& source, double analysis_hz = 0.0) {
  if (!source.squeezed()) return 1.0;
  double db = source.squeezing_db();
  if (source.squeezing_corner_hz > 0.0) {
    const double x = analysis_hz / source.squeezing_corner_hz;
    db /= 1.0 + x * x;
  }
  const double cosh2r = std::cosh(2.0 * squeezing_to_r(db));
  return source.transmission * cosh2r + (1.0 - source.transmission);
}

inline std::string state_label(const LightSource& source) {
  return source.squeezed() ? "squeezed" : "coherent";
}

}  // namespace qsbs
