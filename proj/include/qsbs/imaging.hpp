#pragma once

// Raster-scan SBS imaging of a 2-D composition phantom.
//
// Each pixel samples the phantom through a Gaussian focal spot (weights on
// cell compositions, renormalized over in-bounds cells), evaluates the medium
// response at the lock detuning, and reports the analyzer SNR through the
// closed-form path. Pixel readings carry the analyzer's estimation noise:
// the peak reading fluctuates by N / sqrt(K), K = ENBW(RBW) * video time,
// against a calibrated floor, so the contrast estimate is
// 10 log10(S/N + z / sqrt(K)), clamped at 0 dB.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "qsbs/detection.hpp"
#include "qsbs/format.hpp"
#include "qsbs/materials.hpp"
#include "qsbs/quantum_light.hpp"
#include "qsbs/rng.hpp"

namespace qsbs {

struct Phantom {
  int width = 0;
  int height = 0;
  double pitch_m = 6e-6;
  std::vector<Mixture> cells;  ///< row-major, cells[iy * width + ix]

  Phantom() = default;
  Phantom(int w, int h, double pitch, const Mixture& fill = {})
      : width(w), height(h), pitch_m(pitch), cells(static_cast<std::size_t>(w) * h, fill) {
    validate();
  }

  const Mixture& at(int ix, int iy) const { return cells[static_cast<std::size_t>(iy) * width + ix]; }
  Mixture& at(int ix, int iy) { return cells[static_cast<std::size_t>(iy) * width + ix]; }

  /// Physical center of cell (ix, iy).
  double cell_x(int ix) const { return (ix + 0.5) * pitch_m; }
  double cell_y(int iy) const { return (iy + 0.5) * pitch_m; }

  void validate() const {
    if (width < 1 || height < 1) throw SettingsError("phantom dimensions must be >= 1");
    if (!(pitch_m > 0.0)) throw SettingsError("phantom pitch must be > 0");
    if (cells.size() != static_cast<std::size_t>(width) * height) {
      throw SettingsError("phantom cell count does not match its dimensions");
    }
    for (const auto& c : cells) c.validate();
  }

  /// Copy shifted by (dx, dy) cells; vacated cells take `fill`.
  Phantom shifted(int dx, int dy, const Mixture& fill = {}) const {
    Phantom out(width, height, pitch_m, fill);
    for (int iy = 0; iy < height; ++iy) {
      for (int ix = 0; ix < width; ++ix) {
        const int sx = ix - dx, sy = iy - dy;
        if (sx >= 0 && sx < width && sy >= 0 && sy < height) out.at(ix, iy) = at(sx, sy);
      }
    }
    return out;
  }
};

struct Disc {
  double x_m = 0.0;
  double y_m = 0.0;
  double radius_m = 0.0;
};

/// Disc-shaped blobs of one composition on a uniform background.
inline Phantom spheroid_phantom(int width, int height, double pitch_m, const Mixture& background,
                                const Mixture& blob, const std::vector<Disc>& discs) {
  Phantom p(width, height, pitch_m, background);
  for (int iy = 0; iy < height; ++iy) {
    for (int ix = 0; ix < width; ++ix) {
      for (const auto& d : discs) {
        const double dx = p.cell_x(ix) - d.x_m, dy = p.cell_y(iy) - d.y_m;
        if (dx * dx + dy * dy <= d.radius_m * d.radius_m) {
          p.at(ix, iy) = blob;
          break;
        }
      }
    }
  }
  return p;
}

/// `count` discs with uniformly drawn centers (inside the field) and radii.
inline std::vector<Disc> random_discs(int count, double field_w_m, double field_h_m,
                                      double min_radius_m, double max_radius_m,
                                      std::uint64_t seed) {
  if (count < 0 || !(max_radius_m >= min_radius_m) || !(min_radius_m >= 0.0)) {
    throw SettingsError("invalid random blob parameters");
  }
  Rng rng(seed);
  std::vector<Disc> out;
  for (int i = 0; i < count; ++i) {
    Disc d;
    d.radius_m = min_radius_m + (max_radius_m - min_radius_m) * rng.uniform();
    d.x_m = field_w_m * rng.uniform();
    d.y_m = field_h_m * rng.uniform();
    out.push_back(d);
  }
  return out;
}

struct ScanPlan {
  int nx = 55;
  int ny = 55;
  double step_m = 6e-6;
  double origin_x_m = 3e-6;  ///< position of pixel (0, 0)
  double origin_y_m = 3e-6;
  double lock_detuning_hz = 6.7e9;
  double spot_diameter_m = 5e-6;  ///< 1/e^2 intensity diameter
  AnalyzerSettings analyzer;      ///< RBW, VBW and per-pixel sweep time
  bool estimation_noise = true;
  std::uint64_t seed = 1;

  double dwell_s() const { return analyzer.sweep_time_s; }

  void validate() const {
    if (nx < 1 || ny < 1) throw SettingsError("scan needs at least one pixel in each direction");
    if (!(step_m > 0.0)) throw SettingsError("scan step must be > 0");
    if (!(spot_diameter_m > 0.0)) throw SettingsError("spot diameter must be > 0");
    if (!(lock_detuning_hz > 0.0)) throw SettingsError("lock detuning must be positive");
    analyzer.validate();
  }
};

/// Gaussian-weighted composition under the focal spot centered at (x, y).
/// Positions outside the phantom are clamped to its extent.
inline Mixture effective_mixture(const Phantom& phantom, double x_m, double y_m,
                                 double spot_diameter_m) {
  const double x_max = phantom.width * phantom.pitch_m;
  const double y_max = phantom.height * phantom.pitch_m;
  x_m = std::clamp(x_m, 0.0, x_max);
  y_m = std::clamp(y_m, 0.0, y_max);

  // Nearest cell: the delta-spot limit.
  const int nx = std::clamp(static_cast<int>(std::floor(x_m / phantom.pitch_m)), 0, phantom.width - 1);
  const int ny = std::clamp(static_cast<int>(std::floor(y_m / phantom.pitch_m)), 0, phantom.height - 1);
  if (!(spot_diameter_m > 0.0)) return phantom.at(nx, ny);

  const double w = 0.5 * spot_diameter_m;  // 1/e^2 radius
  const double reach = 3.0 * w + phantom.pitch_m;
  const int ix0 = std::max(0, static_cast<int>(std::floor((x_m - reach) / phantom.pitch_m)));
  const int ix1 = std::min(phantom.width - 1, static_cast<int>(std::floor((x_m + reach) / phantom.pitch_m)));
  const int iy0 = std::max(0, static_cast<int>(std::floor((y_m - reach) / phantom.pitch_m)));
  const int iy1 = std::min(phantom.height - 1, static_cast<int>(std::floor((y_m + reach) / phantom.pitch_m)));

  // Exponents are taken relative to the nearest cell so narrow spots do not underflow.
  double r2_min = std::numeric_limits<double>::infinity();
  for (int iy = iy0; iy <= iy1; ++iy) {
    for (int ix = ix0; ix <= ix1; ++ix) {
      const double dx = phantom.cell_x(ix) - x_m, dy = phantom.cell_y(iy) - y_m;
      r2_min = std::min(r2_min, dx * dx + dy * dy);
    }
  }
  std::map<std::string, double> acc;
  double total = 0.0;
  for (int iy = iy0; iy <= iy1; ++iy) {
    for (int ix = ix0; ix <= ix1; ++ix) {
      const double dx = phantom.cell_x(ix) - x_m, dy = phantom.cell_y(iy) - y_m;
      const double wt = std::exp(-2.0 * (dx * dx + dy * dy - r2_min) / (w * w));
      if (wt < 1e-12) continue;
      total += wt;
      for (const auto& [name, frac] : phantom.at(ix, iy).weights()) acc[name] += wt * frac;
    }
  }
  for (auto& [_, v] : acc) v = std::min(1.0, v / total);
  return Mixture(std::move(acc));
}

struct ImageResult {
  int nx = 0;
  int ny = 0;
  std::vector<double> contrast_db;   ///< clamped >= 0, row-major
  std::vector<double> snr_estimate;  ///< linear S/N reading before the clamp
  double acquisition_time_s = 0.0;
  std::vector<std::pair<std::string, std::string>> metadata;

  double at(int ix, int iy) const { return contrast_db[static_cast<std::size_t>(iy) * nx + ix]; }

  double mean_contrast_db() const {
    double sum = 0.0;
    for (double v : contrast_db) sum += v;
    return sum / static_cast<double>(contrast_db.size());
  }
};

/// Pixels x dwell, with the dwell of the plan's analyzer mode.
inline double acquisition_time_estimate(int nx, int ny, const AnalyzerSettings& analyzer) {
  if (nx < 1 || ny < 1) throw SettingsError("scan needs at least one pixel in each direction");
  if (!(analyzer.sweep_time_s > 0.0)) throw SettingsError("sweep time must be > 0");
  return static_cast<double>(nx) * static_cast<double>(ny) * analyzer.sweep_time_s;
}

inline double acquisition_time_estimate(const ScanPlan& plan) {
  return acquisition_time_estimate(plan.nx, plan.ny, plan.analyzer);
}

inline double pixel_contrast_db(double snr_linear) {
  return snr_linear > 1.0 ? ratio_to_db(snr_linear) : 0.0;
}

inline ImageResult acquire_image(const MaterialRegistry& registry, const Phantom& phantom,
                                 const ScanPlan& plan, const DetectionChain& chain,
                                 const LightSource& source, unsigned workers = 0) {
  phantom.validate();
  plan.validate();
  chain.validate();
  source.validate();
  for (const auto& c : phantom.cells) registry.check(c);

  ImageResult img;
  img.nx = plan.nx;
  img.ny = plan.ny;
  const std::size_t n = static_cast<std::size_t>(plan.nx) * plan.ny;
  img.contrast_db.assign(n, 0.0);
  img.snr_estimate.assign(n, 0.0);
  const double k_samples = plan.analyzer.independent_samples();

  auto run_rows = [&](int row_begin, int row_end) {
    for (int iy = row_begin; iy < row_end; ++iy) {
      for (int ix = 0; ix < plan.nx; ++ix) {
        const std::size_t idx = static_cast<std::size_t>(iy) * plan.nx + ix;
        const Mixture mix = effective_mixture(phantom, plan.origin_x_m + ix * plan.step_m,
                                              plan.origin_y_m + iy * plan.step_m,
                                              plan.spot_diameter_m);
        const double response = material_response(registry, mix, plan.lock_detuning_hz);
        const SnrResult snr = analytic_snr(chain, source, response, plan.analyzer.rbw_hz);
        double reading = snr.signal_mw / snr.noise_mw;
        if (plan.estimation_noise) {
          Rng rng(derive_seed(plan.seed, idx));
          reading += rng.normal() / std::sqrt(k_samples);
        }
        img.snr_estimate[idx] = reading;
        img.contrast_db[idx] = pixel_contrast_db(reading);
      }
    }
  };

  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(plan.ny));
  if (workers <= 1) {
    run_rows(0, plan.ny);
  } else {
    std::vector<std::thread> pool;
    const int per = (plan.ny + static_cast<int>(workers) - 1) / static_cast<int>(workers);
    for (unsigned w = 0; w < workers; ++w) {
      const int b = static_cast<int>(w) * per;
      const int e = std::min(plan.ny, b + per);
      if (b < e) pool.emplace_back(run_rows, b, e);
    }
    for (auto& t : pool) t.join();
  }

  img.acquisition_time_s = acquisition_time_estimate(plan);
  img.metadata = {
      {"state", state_label(source)},
      {"seed", std::to_string(plan.seed)},
      {"nx", std::to_string(plan.nx)},
      {"ny", std::to_string(plan.ny)},
      {"step_m", fmt_num(plan.step_m)},
      {"lock_detuning_hz", fmt_num(plan.lock_detuning_hz)},
      {"spot_diameter_m", fmt_num(plan.spot_diameter_m)},
      {"pump_power_w", fmt_num(source.pump_power_w)},
      {"probe_power_w", fmt_num(source.probe_power_w)},
      {"rbw_hz", fmt_num(plan.analyzer.rbw_hz)},
      {"vbw_hz", fmt_num(plan.analyzer.vbw_hz)},
      {"dwell_s", fmt_num(plan.dwell_s())},
      {"acquisition_time_s", fmt_num(img.acquisition_time_s)},
      {"estimation_noise", plan.estimation_noise ? "true" : "false"},
  };
  return img;
}

}  // namespace qsbs
