#pragma once

// Nonlinear least-squares recovery of Brillouin resonances from a lock-in
// detuning trace. The model is the forward material response scaled by the
// trace's response scale: per resonance a gain lobe at +shift and a loss lobe
// at -shift sharing one strength and width, plus the Rayleigh dip at zero
// detuning when the trace covers it. Starting values come from peak picking
// on the gain-minus-loss (antisymmetric) part of the trace.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/LevenbergMarquardt>

#include "qsbs/detection.hpp"
#include "qsbs/materials.hpp"

namespace qsbs {

class FitError : public std::runtime_error {
 public:
  FitError(const std::string& what, double relative_residual)
      : std::runtime_error(what), relative_residual_(relative_residual) {}
  double relative_residual() const { return relative_residual_; }

 private:
  double relative_residual_;
};

struct FitOptions {
  /// Fit fails when rms(residual) / max|data| exceeds this.
  double max_relative_residual = 0.2;
  int max_function_evaluations = 4000;
  /// Starting Rayleigh width when the trace covers zero detuning.
  double rayleigh_width_guess_hz = 150e6;
};

struct FitResult {
  std::vector<BrillouinResonance> resonances;  ///< sorted by shift
  bool rayleigh_fitted = false;
  double rayleigh_strength = 0.0;
  double rayleigh_width_hz = 0.0;
  double response_scale = 1.0;  ///< trace units per unit material response
  double residual_rms = 0.0;
  double relative_residual = 0.0;
  int iterations = 0;
};

namespace detail {

inline double lorentz_ghz(double x, double s, double w) {
  const double h = 0.5 * w;
  const double d = x - s;
  return h * h / (d * d + h * h);
}

// Derivatives of L(x; s, w) with respect to s and w.
inline void lorentz_grad(double x, double s, double w, double& d_s, double& d_w) {
  const double h = 0.5 * w;
  const double d = x - s;
  const double den = d * d + h * h;
  d_s = 2.0 * h * h * d / (den * den);
  d_w = h * d * d / (den * den);
}

struct ResponseModel : Eigen::DenseFunctor<double> {
  const std::vector<double>& x;  // GHz
  const std::vector<double>& y;
  int n_res;
  bool rayleigh;

  ResponseModel(const std::vector<double>& xs, const std::vector<double>& ys, int n, bool ray)
      : Eigen::DenseFunctor<double>(3 * n + (ray ? 2 : 0), static_cast<int>(xs.size())),
        x(xs), y(ys), n_res(n), rayleigh(ray) {}

  static double model(const InputType& p, int n_res, bool rayleigh, double xi) {
    double v = 0.0;
    for (int k = 0; k < n_res; ++k) {
      const double s = p[3 * k], w = p[3 * k + 1], a = p[3 * k + 2];
      v += a * (lorentz_ghz(xi, s, w) - lorentz_ghz(xi, -s, w));
    }
    if (rayleigh) v -= p[3 * n_res] * lorentz_ghz(xi, 0.0, p[3 * n_res + 1]);
    return v;
  }

  int operator()(const InputType& p, ValueType& f) const {
    for (std::size_t i = 0; i < x.size(); ++i) {
      f[static_cast<Eigen::Index>(i)] = model(p, n_res, rayleigh, x[i]) - y[i];
    }
    return 0;
  }

  int df(const InputType& p, JacobianType& jac) const {
    for (std::size_t i = 0; i < x.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      const double xi = x[i];
      for (int k = 0; k < n_res; ++k) {
        const double s = p[3 * k], w = p[3 * k + 1], a = p[3 * k + 2];
        double gs, gw, ls, lw;
        lorentz_grad(xi, s, w, gs, gw);
        lorentz_grad(xi, -s, w, ls, lw);
        jac(r, 3 * k) = a * (gs + ls);  // loss lobe sits at -s
        jac(r, 3 * k + 1) = a * (gw - lw);
        jac(r, 3 * k + 2) = lorentz_ghz(xi, s, w) - lorentz_ghz(xi, -s, w);
      }
      if (rayleigh) {
        const double a = p[3 * n_res], w = p[3 * n_res + 1];
        double unused, gw;
        lorentz_grad(xi, 0.0, w, unused, gw);
        jac(r, 3 * n_res) = -lorentz_ghz(xi, 0.0, w);
        jac(r, 3 * n_res + 1) = -a * gw;
      }
    }
    return 0;
  }
};

inline double interp(const std::vector<double>& x, const std::vector<double>& y, double at) {
  if (at <= x.front()) return y.front();
  if (at >= x.back()) return y.back();
  const auto it = std::upper_bound(x.begin(), x.end(), at);
  const auto j = static_cast<std::size_t>(it - x.begin());
  const double t = (at - x[j - 1]) / (x[j] - x[j - 1]);
  return y[j - 1] + t * (y[j] - y[j - 1]);
}

inline double axis_to_ghz(const std::string& unit) {
  if (unit == "GHz") return 1.0;
  if (unit == "MHz") return 1e-3;
  if (unit == "kHz") return 1e-6;
  if (unit == "Hz") return 1e-9;
  throw FitError("unsupported detuning axis unit '" + unit + "'", 0.0);
}

}  // namespace detail

inline FitResult fit_spectrum(const SpectrumTrace& trace, int n_resonances,
                              const FitOptions& options = {}) {
  if (n_resonances < 1) throw FitError("n_resonances must be >= 1", 0.0);
  trace.validate();
  const double to_ghz = detail::axis_to_ghz(trace.x_unit);
  std::vector<double> x(trace.axis.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = trace.axis[i] * to_ghz;
  const std::vector<double>& y = trace.values;
  if (x.size() < static_cast<std::size_t>(3 * n_resonances + 3)) {
    throw FitError("trace has too few points for the requested fit", 0.0);
  }

  double y_max = 0.0;
  for (double v : y) y_max = std::max(y_max, std::abs(v));
  if (!(y_max > 0.0)) throw FitError("trace is identically zero", 1.0);

  const double step = (x.back() - x.front()) / static_cast<double>(x.size() - 1);
  const bool covers_zero = x.front() < 0.0 && x.back() > 0.0;
  const bool covers_positive = x.back() > 0.0;

  // Rayleigh starting values from the dip at zero detuning.
  double ray_a = 0.0;
  double ray_w = options.rayleigh_width_guess_hz * 1e-9;
  if (covers_zero) ray_a = std::max(0.0, -detail::interp(x, y, 0.0));
  const double exclusion = std::max(3.0 * ray_w, 2.0 * step);

  // Antisymmetric part h(d) = (y(d) - y(-d)) / 2 on the positive side, which
  // cancels the Rayleigh term and doubles up gain and loss lobes.
  std::vector<double> hx, hy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = covers_positive ? x[i] : -x[i];
    if (d <= exclusion) continue;
    const double own = covers_positive ? y[i] : -y[i];
    // Mirror point -d exists only when the trace spans both signs.
    const bool has_mirror = covers_zero && -d >= x.front();
    const double v = has_mirror ? 0.5 * (own - detail::interp(x, y, -d)) : own;
    hx.push_back(d);
    hy.push_back(v);
  }
  if (!covers_positive) {
    std::reverse(hx.begin(), hx.end());
    std::reverse(hy.begin(), hy.end());
  }
  if (hx.size() < 3) throw FitError("trace does not cover a resolvable resonance", 1.0);

  const int n_params = 3 * n_resonances + (covers_zero ? 2 : 0);
  Eigen::VectorXd p(n_params);
  std::vector<double> work = hy;
  for (int k = 0; k < n_resonances; ++k) {
    const auto peak = static_cast<std::size_t>(std::max_element(work.begin(), work.end()) - work.begin());
    const double a = work[peak];
    const double s = hx[peak];
    // Half-maximum crossings on either side.
    std::size_t lo = peak, hi = peak;
    while (lo > 0 && work[lo] > 0.5 * a) --lo;
    while (hi + 1 < work.size() && work[hi] > 0.5 * a) ++hi;
    double w = std::max(hx[hi] - hx[lo], 2.0 * step);
    if (k > 0) w = std::min(w, 0.5 * std::abs(s - p[0]) + 2.0 * step);
    p[3 * k] = s;
    p[3 * k + 1] = w;
    p[3 * k + 2] = std::max(a, 1e-6 * y_max);
    for (std::size_t i = 0; i < work.size(); ++i) work[i] -= p[3 * k + 2] * detail::lorentz_ghz(hx[i], s, w);
  }
  if (covers_zero) {
    p[3 * n_resonances] = ray_a;
    p[3 * n_resonances + 1] = ray_w;
  }

  detail::ResponseModel functor(x, y, n_resonances, covers_zero);
  Eigen::LevenbergMarquardt<detail::ResponseModel> lm(functor);
  lm.setMaxfev(options.max_function_evaluations);
  lm.setXtol(1e-12);
  lm.setFtol(1e-14);
  const auto status = lm.minimize(p);

  Eigen::VectorXd residual(static_cast<Eigen::Index>(x.size()));
  functor(p, residual);
  FitResult out;
  out.residual_rms = std::sqrt(residual.squaredNorm() / static_cast<double>(x.size()));
  out.relative_residual = out.residual_rms / y_max;
  out.iterations = static_cast<int>(lm.iterations());

  const auto fail = [&](const std::string& why) {
    throw FitError("fit failed: " + why + " (relative residual " +
                       std::to_string(out.relative_residual) + ")",
                   out.relative_residual);
  };
  if (status == Eigen::LevenbergMarquardtSpace::ImproperInputParameters) fail("improper input");
  if (!p.allFinite()) fail("non-finite parameters");
  if (out.relative_residual > options.max_relative_residual) fail("residual above threshold");

  double scale = 1.0;
  if (const std::string* s = trace.find("response_scale")) scale = std::stod(*s);
  if (!(scale > 0.0)) scale = 1.0;
  out.response_scale = scale;

  const double x_extent = std::max(std::abs(x.front()), std::abs(x.back()));
  for (int k = 0; k < n_resonances; ++k) {
    BrillouinResonance r;
    r.shift_hz = std::abs(p[3 * k]) * 1e9;
    r.linewidth_hz = std::abs(p[3 * k + 1]) * 1e9;
    r.gain_strength = p[3 * k + 2] / scale;
    if (r.shift_hz <= 0.0 || r.shift_hz > x_extent * 1e9) fail("shift outside the scanned range");
    if (!(r.linewidth_hz > 0.0) || r.linewidth_hz >= r.shift_hz) fail("unphysical linewidth");
    if (r.gain_strength < 0.0) fail("negative gain strength");
    out.resonances.push_back(r);
  }
  std::sort(out.resonances.begin(), out.resonances.end(),
            [](const auto& a, const auto& b) { return a.shift_hz < b.shift_hz; });
  if (covers_zero) {
    out.rayleigh_fitted = true;
    out.rayleigh_strength = p[3 * n_resonances] / scale;
    out.rayleigh_width_hz = std::abs(p[3 * n_resonances + 1]) * 1e9;
  }
  return out;
}

}  // namespace qsbs
