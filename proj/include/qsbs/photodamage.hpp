#pragma once

// Dose-driven decay of one resonance in a live sample, V(P, t) = exp(-k P^a t),
// with P in mW and t in hours. Public functions take SI quantities.

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "qsbs/detection.hpp"
#include "qsbs/lockin.hpp"
#include "qsbs/materials.hpp"
#include "qsbs/quantum_light.hpp"
#include "qsbs/rng.hpp"

namespace qsbs {

class DamageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DamageModel {
  double rate_k = 0.0;  ///< 1 / (mW^alpha h)
  double alpha = 1.0;
  std::string target_material = "cell";
  std::size_t target_resonance = 1;  ///< index into the material's resonances

  void validate() const {
    if (!std::isfinite(rate_k) || rate_k < 0.0) throw DamageError("damage rate must be >= 0");
    if (!std::isfinite(alpha) || alpha <= 0.0) throw DamageError("damage exponent must be > 0");
    if (target_material.empty()) throw DamageError("damage target material must be named");
  }

  /// Fraction of the target strength remaining after `duration_s` at `power_w`.
  double viability(double power_w, double duration_s) const {
    if (power_w < 0.0 || duration_s < 0.0) throw DamageError("power and duration must be >= 0");
    const double p_mw = power_w / units::mW;
    const double t_h = duration_s / units::hour;
    if (p_mw == 0.0 || t_h == 0.0) return 1.0;
    return std::exp(-rate_k * std::pow(p_mw, alpha) * t_h);
  }
};

struct DamagePoint {
  double power_w = 0.0;
  double time_s = 0.0;
  double viability = 1.0;
};

/// Least-squares fit of ln(-ln V / t) = ln k + alpha ln P. Two points with
/// distinct powers are solved exactly. Points without any decay (V = 1) admit
/// only k = 0 and cannot be mixed with decaying points.
inline DamageModel calibrate_damage(const std::vector<DamagePoint>& points,
                                    const DamageModel& target = {}) {
  if (points.empty()) throw DamageError("damage calibration needs at least one point");
  std::size_t undamaged = 0;
  for (const auto& pt : points) {
    if (!(pt.power_w > 0.0) || !(pt.time_s > 0.0)) {
      throw DamageError("calibration points need positive power and time");
    }
    if (!(pt.viability > 0.0 && pt.viability <= 1.0)) {
      throw DamageError("calibration viability must lie in (0, 1]");
    }
    if (pt.viability == 1.0) ++undamaged;
  }

  DamageModel model = target;
  if (undamaged == points.size()) {
    model.rate_k = 0.0;
    return model;
  }
  if (undamaged != 0) {
    throw DamageError("calibration mixes undamaged (V = 1) and damaged points; no k > 0 fits both");
  }

  const std::size_t n = points.size();
  double sx = 0, sy = 0;
  std::vector<double> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = std::log(points[i].power_w / units::mW);
    ys[i] = std::log(-std::log(points[i].viability) / (points[i].time_s / units::hour));
    sx += xs[i];
    sy += ys[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (!(sxx > 1e-24)) {
    throw DamageError("damage calibration is underdetermined: points need at least two distinct powers");
  }
  model.alpha = sxy / sxx;
  model.rate_k = std::exp(my - model.alpha * mx);
  if (!(model.alpha > 0.0)) {
    throw DamageError("calibration implies damage falling with power (exponent <= 0)");
  }
  model.validate();
  return model;
}

/// Registry copy with the target resonance weakened by V(P, duration).
inline MaterialRegistry apply_dose(const MaterialRegistry& registry, const DamageModel& model,
                                   double power_w, double duration_s) {
  model.validate();
  if (!registry.contains(model.target_material)) {
    throw DamageError("damage target material '" + model.target_material + "' is not registered");
  }
  MaterialSpec spec = registry.at(model.target_material);
  if (model.target_resonance >= spec.resonances.size()) {
    throw DamageError("material '" + model.target_material + "' has no resonance index " +
                      std::to_string(model.target_resonance));
  }
  const double v = model.viability(power_w, duration_s);
  if (v == 1.0) return registry;
  spec.resonances[model.target_resonance].gain_strength *= v;
  return registry.with(std::move(spec));
}

struct ExposureCondition {
  std::string label;
  LightSource source;  ///< pump power sets the dose; state is reported
};

struct ViabilityCurve {
  std::string label;
  std::string state;
  double pump_power_w = 0.0;
  std::vector<double> times_h;
  std::vector<double> values;
};

struct TimedSpectrum {
  std::string label;
  double time_h = 0.0;
  SpectrumTrace trace;
};

struct SpectrumProbe {
  bool enabled = false;
  Mixture sample = Mixture::pure("cell");
  DetuningRange range;
  LockInSettings lockin;
  int averages = 10;
  std::uint64_t seed = 1;
};

struct ViabilityResult {
  std::vector<ViabilityCurve> curves;
  std::vector<TimedSpectrum> spectra;
};

inline std::vector<double> sample_times_h(double horizon_h, double interval_h) {
  if (!(horizon_h > 0.0)) throw DamageError("viability horizon must be > 0");
  if (!(interval_h > 0.0)) throw DamageError("viability sample interval must be > 0");
  std::vector<double> t;
  const auto steps = static_cast<long>(std::floor(horizon_h / interval_h + 1e-9));
  for (long i = 0; i <= steps; ++i) t.push_back(static_cast<double>(i) * interval_h);
  if (horizon_h - t.back() > 1e-9 * horizon_h) t.push_back(horizon_h);
  return t;
}

inline ViabilityResult viability_experiment(const DamageModel& model,
                                            const std::vector<ExposureCondition>& conditions,
                                            double horizon_s, double interval_s,
                                            const MaterialRegistry& registry = {},
                                            const DetectionChain& chain = {},
                                            const SpectrumProbe& probe = {}) {
  model.validate();
  const auto times = sample_times_h(horizon_s / units::hour, interval_s / units::hour);
  ViabilityResult out;
  std::uint64_t spectrum_index = 0;
  for (const auto& cond : conditions) {
    cond.source.validate();
    ViabilityCurve curve;
    curve.label = cond.label;
    curve.state = state_label(cond.source);
    curve.pump_power_w = cond.source.pump_power_w;
    curve.times_h = times;
    for (double t : times) {
      curve.values.push_back(model.viability(cond.source.pump_power_w, t * units::hour));
    }
    if (probe.enabled) {
      if (probe.averages < 1) throw DamageError("spectrum averages must be >= 1");
      for (double t : times) {
        const MaterialRegistry dosed =
            apply_dose(registry, model, cond.source.pump_power_w, t * units::hour);
        SpectrumTrace avg;
        for (int k = 0; k < probe.averages; ++k) {
          const std::uint64_t seed = derive_seed(probe.seed, spectrum_index++);
          SpectrumTrace one =
              lockin_scan(chain, cond.source, dosed, probe.sample, probe.range, probe.lockin, seed);
          if (k == 0) {
            avg = std::move(one);
          } else {
            for (std::size_t i = 0; i < avg.values.size(); ++i) avg.values[i] += one.values[i];
          }
        }
        for (double& v : avg.values) v /= probe.averages;
        const double sigma = std::stod(*avg.find("noise_sigma")) / std::sqrt(probe.averages);
        avg.set("noise_sigma", fmt_exact(sigma));
        avg.set("averaged_traces", std::to_string(probe.averages));
        avg.set("seed", std::to_string(probe.seed));
        avg.set("condition", cond.label);
        avg.set("elapsed_h", fmt_num(t));
        avg.set("viability", fmt_exact(model.viability(cond.source.pump_power_w, t * units::hour)));
        out.spectra.push_back({cond.label, t, std::move(avg)});
      }
    }
    out.curves.push_back(std::move(curve));
  }
  return out;
}

}  // namespace qsbs
