#pragma once

// SI conventions used throughout the library: frequencies in Hz, optical
// powers in W, lengths in m, times in s. Electrical powers are carried in mW
// so that dBm conversions are direct.

#include <cctype>
#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>

namespace qsbs {

namespace units {

constexpr double Hz = 1.0;
constexpr double kHz = 1e3;
constexpr double MHz = 1e6;
constexpr double GHz = 1e9;

constexpr double W = 1.0;
constexpr double mW = 1e-3;
constexpr double uW = 1e-6;

constexpr double m = 1.0;
constexpr double mm = 1e-3;
constexpr double um = 1e-6;

constexpr double s = 1.0;
constexpr double ms = 1e-3;
constexpr double hour = 3600.0;

namespace literals {
constexpr double operator""_GHz(long double v) { return static_cast<double>(v) * GHz; }
constexpr double operator""_MHz(long double v) { return static_cast<double>(v) * MHz; }
constexpr double operator""_kHz(long double v) { return static_cast<double>(v) * kHz; }
constexpr double operator""_mW(long double v) { return static_cast<double>(v) * mW; }
constexpr double operator""_uW(long double v) { return static_cast<double>(v) * uW; }
constexpr double operator""_um(long double v) { return static_cast<double>(v) * um; }
}  // namespace literals

}  // namespace units

inline double db_to_ratio(double db) { return std::pow(10.0, db / 10.0); }
inline double ratio_to_db(double ratio) { return 10.0 * std::log10(ratio); }
inline double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }
inline double mw_to_dbm(double mw) { return 10.0 * std::log10(mw); }

/// Physical dimension expected when reading a quantity from text.
enum class Dimension { Frequency, Power, Length, Time, Decibel, DecibelMilliwatt };

inline const char* dimension_name(Dimension d) {
  switch (d) {
    case Dimension::Frequency: return "frequency (Hz, kHz, MHz, GHz)";
    case Dimension::Power: return "optical power (W, mW, uW, nW)";
    case Dimension::Length: return "length (m, mm, um, nm)";
    case Dimension::Time: return "time (s, ms, us, min, h)";
    case Dimension::Decibel: return "ratio (dB)";
    case Dimension::DecibelMilliwatt: return "level (dBm)";
  }
  return "?";
}

class UnitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Returns the SI scale for `unit` under dimension `d`, or NaN if it does not
// belong to that dimension.
inline double unit_scale(std::string_view unit, Dimension d) {
  // "µ" arrives as UTF-8 (0xC2 0xB5) or as the Greek mu (0xCE 0xBC).
  std::string u(unit);
  for (std::string_view mu : {std::string_view("\xC2\xB5"), std::string_view("\xCE\xBC")}) {
    if (u.rfind(mu, 0) == 0) u = "u" + u.substr(mu.size());
  }
  switch (d) {
    case Dimension::Frequency:
      if (u == "Hz") return 1.0;
      if (u == "kHz" || u == "KHz") return 1e3;
      if (u == "MHz") return 1e6;
      if (u == "GHz") return 1e9;
      break;
    case Dimension::Power:
      if (u == "W") return 1.0;
      if (u == "mW") return 1e-3;
      if (u == "uW") return 1e-6;
      if (u == "nW") return 1e-9;
      break;
    case Dimension::Length:
      if (u == "m") return 1.0;
      if (u == "mm") return 1e-3;
      if (u == "um") return 1e-6;
      if (u == "nm") return 1e-9;
      break;
    case Dimension::Time:
      if (u == "s") return 1.0;
      if (u == "ms") return 1e-3;
      if (u == "us") return 1e-6;
      if (u == "min") return 60.0;
      if (u == "h") return 3600.0;
      break;
    case Dimension::Decibel:
      if (u == "dB") return 1.0;
      break;
    case Dimension::DecibelMilliwatt:
      if (u == "dBm") return 1.0;
      break;
  }
  return std::nan("");
}

}  // namespace detail

/// Parses "<number> <unit>" (space optional) into SI units. A bare number is
/// rejected: every physical quantity must carry its unit.
inline double parse_quantity(std::string_view text, Dimension d) {
  const std::string_view t = detail::trim(text);
  std::string buf(t);
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(buf, &used);
  } catch (const std::exception&) {
    throw UnitError("expected a number with a unit, got '" + buf + "'");
  }
  const std::string_view unit = detail::trim(t.substr(used));
  if (unit.empty()) {
    throw UnitError("missing unit in '" + buf + "'; expected " + dimension_name(d));
  }
  const double scale = detail::unit_scale(unit, d);
  if (std::isnan(scale)) {
    throw UnitError("unit '" + std::string(unit) + "' in '" + buf + "' is not a " +
                    dimension_name(d));
  }
  if (!std::isfinite(value)) throw UnitError("non-finite value in '" + buf + "'");
  return value * scale;
}

}  // namespace qsbs
