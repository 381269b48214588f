#pragma once

// RF spectrum analyzer and lock-in amplifier emulation on sampled series.
//
// Swept mode: the record is cut into video-averaging blocks of length
// 1/(2 VBW); a sweep point reads the block the local oscillator is in when it
// passes that frequency, and reports the Gaussian-RBW-weighted power of that
// block's periodogram. Zero-span mode mixes the record down at the center
// frequency, applies the Gaussian RBW filter in time, and moving-averages the
// detected power over the video time.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "qsbs/detection.hpp"
#include "qsbs/format.hpp"

namespace qsbs {

namespace detail {

inline double rbw_power_response(double offset_hz, double rbw_hz) {
  const double x = offset_hz / rbw_hz;
  return std::exp(-4.0 * std::numbers::ln2 * x * x);
}

/// One-sided power (mW) per periodogram bin of a mean-removed block.
inline std::vector<double> block_power_spectrum(std::span<const double> block,
                                                Eigen::FFT<double>& fft) {
  const std::size_t n = block.size();
  double mean = 0.0;
  for (double x : block) mean += x;
  mean /= static_cast<double>(n);
  std::vector<double> centered(block.begin(), block.end());
  for (double& x : centered) x -= mean;

  std::vector<std::complex<double>> spectrum;
  fft.fwd(spectrum, centered);

  const std::size_t half = n / 2;
  std::vector<double> power(half + 1, 0.0);
  const double norm = 1.0 / (static_cast<double>(n) * static_cast<double>(n));
  for (std::size_t k = 1; k <= half; ++k) {
    const double p = std::norm(spectrum[k]) * norm;
    power[k] = (k == half && n % 2 == 0) ? p : 2.0 * p;
  }
  return power;
}

}  // namespace detail

inline SpectrumTrace analyzer_swept(std::span<const double> series, double sample_rate_hz,
                                    const AnalyzerSettings& settings) {
  settings.validate();
  if (settings.mode != AnalyzerMode::Swept) throw SettingsError("analyzer_swept needs swept settings");
  const double nyquist = sample_rate_hz / 2.0;
  if (settings.stop_hz + 3.0 * settings.rbw_hz > nyquist) {
    throw SettingsError("sweep span lies outside the Nyquist range of the series");
  }
  const std::size_t n = series.size();
  const auto video_len = static_cast<std::size_t>(
      std::llround(settings.video_averaging_time() * sample_rate_hz));
  const std::size_t block_len = std::max<std::size_t>(video_len, 16);
  if (n < block_len) throw SettingsError("record shorter than one video averaging window");
  const std::size_t n_blocks = std::max<std::size_t>(1, n / block_len);
  const double df = sample_rate_hz / static_cast<double>(block_len);
  const double reach = 4.0 * settings.rbw_hz;

  SpectrumTrace trace;
  trace.x_name = "frequency";
  trace.x_unit = "Hz";
  trace.y_name = "power";
  trace.y_unit = "dBm";
  trace.axis.resize(settings.points);
  trace.values.resize(settings.points);

  Eigen::FFT<double> fft;
  std::size_t current = n_blocks;  // none loaded
  std::vector<double> power;
  for (int i = 0; i < settings.points; ++i) {
    const double f = settings.point_frequency(i);
    const double sweep_fraction = static_cast<double>(i) / (settings.points - 1);
    const std::size_t block = std::min(
        n_blocks - 1, static_cast<std::size_t>(sweep_fraction * static_cast<double>(n_blocks)));
    if (block != current) {
      power = detail::block_power_spectrum(series.subspan(block * block_len, block_len), fft);
      current = block;
    }
    const auto lo = static_cast<std::size_t>(std::max(1.0, std::floor((f - reach) / df)));
    const auto hi = std::min(power.size() - 1, static_cast<std::size_t>(std::ceil((f + reach) / df)));
    double sum = 0.0;
    for (std::size_t k = lo; k <= hi; ++k) {
      sum += detail::rbw_power_response(static_cast<double>(k) * df - f, settings.rbw_hz) * power[k];
    }
    trace.axis[i] = f;
    trace.values[i] = mw_to_dbm(std::max(sum, 1e-300));
  }

  trace.set("instrument", "spectrum_analyzer");
  trace.set("mode", "swept");
  trace.set("rbw_hz", fmt_num(settings.rbw_hz));
  trace.set("vbw_hz", fmt_num(settings.vbw_hz));
  trace.set("sweep_time_s", fmt_num(settings.sweep_time_s));
  trace.set("sample_rate_hz", fmt_num(sample_rate_hz));
  trace.set("record_duration_s", fmt_num(static_cast<double>(n) / sample_rate_hz));
  trace.set("video_blocks", std::to_string(n_blocks));
  return trace;
}

inline SpectrumTrace analyzer_zero_span(std::span<const double> series, double sample_rate_hz,
                                        const AnalyzerSettings& settings) {
  settings.validate();
  if (settings.mode != AnalyzerMode::ZeroSpan) {
    throw SettingsError("analyzer_zero_span needs zero-span settings");
  }
  if (settings.center_hz + 3.0 * settings.rbw_hz > sample_rate_hz / 2.0) {
    throw SettingsError("zero-span center lies outside the Nyquist range of the series");
  }
  const double fs = sample_rate_hz;
  const double sigma_t = std::sqrt(std::numbers::ln2) / (std::numbers::pi * settings.rbw_hz);
  const auto half_taps = static_cast<std::ptrdiff_t>(std::ceil(4.0 * sigma_t * fs));
  const auto stride =
      std::max<std::ptrdiff_t>(1, static_cast<std::ptrdiff_t>(fs / (8.0 * settings.rbw_hz)));
  const double video_time = settings.video_averaging_time();
  const auto video_steps = std::max<std::ptrdiff_t>(
      1, static_cast<std::ptrdiff_t>(std::llround(video_time * fs / static_cast<double>(stride))));

  const auto n = static_cast<std::ptrdiff_t>(series.size());
  // The first displayed point needs one settled video window behind it.
  const std::ptrdiff_t first = half_taps + video_steps * stride;
  const auto sweep_samples = static_cast<std::ptrdiff_t>(std::llround(settings.sweep_time_s * fs));
  if (first + sweep_samples + half_taps >= n) {
    throw SettingsError("record too short for the zero-span sweep time and video averaging");
  }

  std::vector<double> taps(static_cast<std::size_t>(2 * half_taps + 1));
  double tap_sum = 0.0;
  for (std::ptrdiff_t j = -half_taps; j <= half_taps; ++j) {
    const double t = static_cast<double>(j) / fs;
    const double w = std::exp(-t * t / (2.0 * sigma_t * sigma_t));
    taps[static_cast<std::size_t>(j + half_taps)] = w;
    tap_sum += w;
  }
  for (double& w : taps) w /= tap_sum;

  const double omega = 2.0 * std::numbers::pi * settings.center_hz / fs;
  auto detected_power = [&](std::ptrdiff_t center) {
    std::complex<double> acc = 0.0;
    for (std::ptrdiff_t j = -half_taps; j <= half_taps; ++j) {
      const std::ptrdiff_t idx = center - j;
      const double phase = omega * static_cast<double>(idx);
      acc += taps[static_cast<std::size_t>(j + half_taps)] * series[static_cast<std::size_t>(idx)] *
             std::complex<double>(std::cos(phase), -std::sin(phase));
    }
    return 2.0 * std::norm(acc);
  };

  // Detected power on a regular grid, then a trailing moving average.
  const std::ptrdiff_t grid_begin = half_taps;
  const std::ptrdiff_t grid_end = first + sweep_samples;
  std::vector<double> video;
  for (std::ptrdiff_t c = grid_begin; c <= grid_end; c += stride) video.push_back(detected_power(c));
  std::vector<double> prefix(video.size() + 1, 0.0);
  for (std::size_t k = 0; k < video.size(); ++k) prefix[k + 1] = prefix[k] + video[k];

  SpectrumTrace trace;
  trace.x_name = "time";
  trace.x_unit = "s";
  trace.y_name = "power";
  trace.y_unit = "dBm";
  for (int i = 0; i < settings.points; ++i) {
    const double t = settings.points == 1
                         ? settings.sweep_time_s
                         : settings.sweep_time_s * i / (settings.points - 1);
    const std::ptrdiff_t sample = first + static_cast<std::ptrdiff_t>(std::llround(t * fs));
    const auto k_end = static_cast<std::size_t>((sample - grid_begin) / stride) + 1;
    const std::size_t k_begin = k_end > static_cast<std::size_t>(video_steps)
                                    ? k_end - static_cast<std::size_t>(video_steps)
                                    : 0;
    const double avg = (prefix[k_end] - prefix[k_begin]) / static_cast<double>(k_end - k_begin);
    trace.axis.push_back(t);
    trace.values.push_back(mw_to_dbm(std::max(avg, 1e-300)));
  }
  trace.set("instrument", "spectrum_analyzer");
  trace.set("mode", "zero_span");
  trace.set("center_hz", fmt_num(settings.center_hz));
  trace.set("rbw_hz", fmt_num(settings.rbw_hz));
  trace.set("vbw_hz", fmt_num(settings.vbw_hz));
  trace.set("sweep_time_s", fmt_num(settings.sweep_time_s));
  trace.set("sample_rate_hz", fmt_num(sample_rate_hz));
  return trace;
}

inline SpectrumTrace analyzer_sweep(std::span<const double> series, double sample_rate_hz,
                                    const AnalyzerSettings& settings) {
  return settings.mode == AnalyzerMode::Swept
             ? analyzer_swept(series, sample_rate_hz, settings)
             : analyzer_zero_span(series, sample_rate_hz, settings);
}

/// Record length a swept acquisition consumes with the time-to-frequency mapping.
inline double analyzer_record_duration(const AnalyzerSettings& settings) {
  if (settings.mode == AnalyzerMode::Swept) {
    return std::max(settings.sweep_time_s, settings.video_averaging_time());
  }
  const double sigma_t = std::sqrt(std::numbers::ln2) / (std::numbers::pi * settings.rbw_hz);
  return settings.sweep_time_s + settings.video_averaging_time() + 10.0 * sigma_t;
}

// ---------------------------------------------------------------------------
// Reading a swept trace

struct PeakReading {
  double peak_frequency_hz = 0.0;
  double peak_dbm = 0.0;
  double floor_dbm = 0.0;  ///< mean (linear) of points away from the signal
  double peak_above_floor_db = 0.0;
  /// (peak - floor) / floor, in dB; NaN when the peak does not exceed the floor.
  double snr_db = 0.0;
};

/// Reads the tone near `signal_hz` and the floor from points farther than
/// `exclusion_hz` from it.
inline PeakReading read_peak(const SpectrumTrace& trace, double signal_hz, double exclusion_hz) {
  if (trace.axis.empty()) throw SettingsError("empty trace");
  std::size_t best = 0;
  double best_d = 1e300;
  double floor_sum = 0.0;
  std::size_t floor_n = 0;
  for (std::size_t i = 0; i < trace.axis.size(); ++i) {
    const double d = std::abs(trace.axis[i] - signal_hz);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
    if (d > exclusion_hz) {
      floor_sum += dbm_to_mw(trace.values[i]);
      ++floor_n;
    }
  }
  if (floor_n == 0) throw SettingsError("no trace points outside the signal exclusion band");
  PeakReading out;
  const double floor_mw = floor_sum / static_cast<double>(floor_n);
  const double peak_mw = dbm_to_mw(trace.values[best]);
  out.peak_frequency_hz = trace.axis[best];
  out.peak_dbm = trace.values[best];
  out.floor_dbm = mw_to_dbm(floor_mw);
  out.peak_above_floor_db = out.peak_dbm - out.floor_dbm;
  out.snr_db = peak_mw > floor_mw ? ratio_to_db((peak_mw - floor_mw) / floor_mw) : std::nan("");
  return out;
}

/// Mean power (mW) over all trace points.
inline double mean_power_mw(const SpectrumTrace& trace) {
  double sum = 0.0;
  for (double v : trace.values) sum += dbm_to_mw(v);
  return sum / static_cast<double>(trace.values.size());
}

// ---------------------------------------------------------------------------
// Lock-in demodulation of a sampled series

struct DemodulatedSeries {
  std::vector<double> x;  ///< in-phase, rms-calibrated
  std::vector<double> y;  ///< quadrature
  double output_interval_s = 0.0;
};

/// Multiplies by sqrt(2) cos / sin at `reference_hz` and low-passes with a
/// first-order filter of `time_constant_s`; outputs every `decimate` samples
/// after `settle_s`.
inline DemodulatedSeries lockin_demodulate(std::span<const double> series, double sample_rate_hz,
                                           double reference_hz, double time_constant_s,
                                           double settle_s, std::size_t decimate) {
  if (!(time_constant_s > 0.0)) throw SettingsError("lock-in time constant must be > 0");
  if (decimate == 0) decimate = 1;
  const double alpha = -std::expm1(-1.0 / (sample_rate_hz * time_constant_s));
  const double omega = 2.0 * std::numbers::pi * reference_hz / sample_rate_hz;
  const auto settle = static_cast<std::size_t>(settle_s * sample_rate_hz);
  DemodulatedSeries out;
  out.output_interval_s = static_cast<double>(decimate) / sample_rate_hz;
  double x = 0.0;
  double y = 0.0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double phase = omega * static_cast<double>(i);
    x += alpha * (std::numbers::sqrt2 * series[i] * std::cos(phase) - x);
    y += alpha * (-std::numbers::sqrt2 * series[i] * std::sin(phase) - y);
    if (i >= settle && (i - settle) % decimate == 0) {
      out.x.push_back(x);
      out.y.push_back(y);
    }
  }
  return out;
}

}  // namespace qsbs
