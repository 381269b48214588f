#pragma once

// Lock-in detection of the sum-frequency tone while the pump-probe detuning
// is stepped over a grid. Each grid point is treated as a settled reading of
// the first-order output filter: the in-phase output is the signed tone
// amplitude plus Gaussian noise with variance density * ENBW.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "qsbs/detection.hpp"
#include "qsbs/format.hpp"
#include "qsbs/materials.hpp"
#include "qsbs/quantum_light.hpp"
#include "qsbs/rng.hpp"

namespace qsbs {

/// Lock-in output voltage scale: rms volts across 50 ohm per sqrt(mW), in uV.
inline constexpr double kMicrovoltsPerRootMilliwatt = 223606.797749979;  // sqrt(0.05 W*ohm) * 1e6

struct DetuningRange {
  double start_hz = -7e9;
  double stop_hz = 7e9;
};

inline std::vector<double> detuning_grid(const DetuningRange& range, double step_hz) {
  if (!(range.stop_hz > range.start_hz)) throw SettingsError("empty detuning range");
  if (!(step_hz > 0.0)) throw SettingsError("detuning step must be > 0");
  std::vector<double> grid;
  const auto count = static_cast<long long>(std::floor((range.stop_hz - range.start_hz) / step_hz + 1e-9));
  grid.reserve(static_cast<std::size_t>(count + 1));
  for (long long k = 0; k <= count; ++k) grid.push_back(range.start_hz + static_cast<double>(k) * step_hz);
  return grid;
}

inline SpectrumTrace lockin_scan(const DetectionChain& chain, const LightSource& source,
                                 const MaterialRegistry& registry, const Mixture& mixture,
                                 const DetuningRange& range, const LockInSettings& settings,
                                 std::uint64_t seed) {
  chain.validate();
  source.validate();
  settings.validate();
  registry.check(mixture);
  const std::vector<double> grid = detuning_grid(range, settings.grid_step_hz);

  const double scale = sbs_signal_amplitude(chain, 1.0, source.pump_power_w, source.probe_power_w);
  const double sigma =
      std::sqrt(balanced_noise_density(chain, source, chain.signal_freq_hz()) *
                settings.noise_bandwidth() / settings.averages);

  SpectrumTrace trace;
  trace.x_name = "detuning";
  trace.x_unit = "GHz";
  trace.y_name = "amplitude";
  trace.y_unit = "uV";
  trace.axis.reserve(grid.size());
  trace.values.reserve(grid.size());
  Rng rng(seed);
  for (double delta : grid) {
    const double x = scale * material_response(registry, mixture, delta) + sigma * rng.normal();
    trace.axis.push_back(delta / units::GHz);
    trace.values.push_back(x * kMicrovoltsPerRootMilliwatt);
  }

  // Dwell per grid point for one up-sweep of the triangular detuning scan.
  const double dwell = 0.5 / settings.scan_rate_hz / static_cast<double>(grid.size());
  trace.set("instrument", "lockin");
  trace.set("seed", std::to_string(seed));
  trace.set("state", state_label(source));
  trace.set("pump_power_w", fmt_num(source.pump_power_w));
  trace.set("probe_power_w", fmt_num(source.probe_power_w));
  trace.set("time_constant_s", fmt_num(settings.time_constant_s));
  trace.set("scan_rate_hz", fmt_num(settings.scan_rate_hz));
  trace.set("grid_step_hz", fmt_num(settings.grid_step_hz));
  trace.set("averages", std::to_string(settings.averages));
  trace.set("dwell_per_point_s", fmt_num(dwell));
  trace.set("response_scale", fmt_exact(scale * kMicrovoltsPerRootMilliwatt));
  trace.set("noise_sigma", fmt_exact(sigma * kMicrovoltsPerRootMilliwatt));
  return trace;
}

}  // namespace qsbs
