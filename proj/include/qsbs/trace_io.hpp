#pragma once

// Text formats for traces, images and viability curves.
//
// Trace file:
//   # qsbs-trace 1
//   # <key>: <value>            (metadata, in insertion order)
//   # columns: <x_name> [<x_unit>], <y_name> [<y_unit>]
//   <x>,<y>
//   ...

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "qsbs/detection.hpp"
#include "qsbs/format.hpp"
#include "qsbs/imaging.hpp"
#include "qsbs/photodamage.hpp"

namespace qsbs {

class TraceParseError : public std::runtime_error {
 public:
  TraceParseError(const std::string& source, std::size_t line, const std::string& what)
      : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

inline void write_trace(std::ostream& os, const SpectrumTrace& trace) {
  os << "# qsbs-trace 1\n";
  for (const auto& [k, v] : trace.metadata) os << "# " << k << ": " << v << "\n";
  os << "# columns: " << trace.x_name << " [" << trace.x_unit << "], " << trace.y_name << " ["
     << trace.y_unit << "]\n";
  for (std::size_t i = 0; i < trace.axis.size(); ++i) {
    os << fmt_num(trace.axis[i], 12) << "," << fmt_num(trace.values[i], 12) << "\n";
  }
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + path + "'");
  f << content;
  if (!f) throw std::runtime_error("write failed for '" + path + "'");
}

inline void write_trace_file(const std::string& path, const SpectrumTrace& trace) {
  std::ostringstream os;
  write_trace(os, trace);
  write_file(path, os.str());
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// "name [unit]" -> (name, unit)
inline bool split_column(const std::string& text, std::string& name, std::string& unit) {
  const auto lb = text.find('[');
  const auto rb = text.rfind(']');
  if (lb == std::string::npos || rb == std::string::npos || rb < lb) return false;
  name = trim(text.substr(0, lb));
  unit = trim(text.substr(lb + 1, rb - lb - 1));
  return !name.empty() && trim(text.substr(rb + 1)).empty();
}

inline bool parse_double(const std::string& text, double& out) {
  const std::string t = trim(text);
  if (t.empty()) return false;
  char* end = nullptr;
  out = std::strtod(t.c_str(), &end);
  return end == t.c_str() + t.size() && std::isfinite(out);
}

}  // namespace detail

inline SpectrumTrace parse_trace(std::istream& is, const std::string& source = "<trace>") {
  SpectrumTrace trace;
  trace.metadata.clear();
  std::string line;
  std::size_t lineno = 0;
  bool have_columns = false;
  bool have_magic = false;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    if (t[0] == '#') {
      const std::string body = detail::trim(t.substr(1));
      if (!have_magic) {
        if (body.rfind("qsbs-trace", 0) != 0) {
          throw TraceParseError(source, lineno, "expected '# qsbs-trace 1' header");
        }
        if (detail::trim(body.substr(10)) != "1") {
          throw TraceParseError(source, lineno, "unsupported trace format version");
        }
        have_magic = true;
        continue;
      }
      if (have_columns) throw TraceParseError(source, lineno, "header line after data columns");
      const auto colon = body.find(':');
      if (colon == std::string::npos) {
        throw TraceParseError(source, lineno, "header line is not 'key: value'");
      }
      const std::string key = detail::trim(body.substr(0, colon));
      const std::string value = detail::trim(body.substr(colon + 1));
      if (key.empty()) throw TraceParseError(source, lineno, "empty header key");
      if (key == "columns") {
        const auto comma = value.find(',');
        if (comma == std::string::npos ||
            !detail::split_column(value.substr(0, comma), trace.x_name, trace.x_unit) ||
            !detail::split_column(value.substr(comma + 1), trace.y_name, trace.y_unit)) {
          throw TraceParseError(source, lineno, "columns must read 'x [unit], y [unit]'");
        }
        have_columns = true;
      } else {
        trace.set(key, value);
      }
      continue;
    }
    if (!have_magic) throw TraceParseError(source, lineno, "expected '# qsbs-trace 1' header");
    if (!have_columns) throw TraceParseError(source, lineno, "data before '# columns:' header");
    const auto comma = t.find(',');
    if (comma == std::string::npos || t.find(',', comma + 1) != std::string::npos) {
      throw TraceParseError(source, lineno, "expected exactly two comma-separated values");
    }
    double x = 0, y = 0;
    if (!detail::parse_double(t.substr(0, comma), x)) {
      throw TraceParseError(source, lineno, "invalid number '" + detail::trim(t.substr(0, comma)) + "'");
    }
    if (!detail::parse_double(t.substr(comma + 1), y)) {
      throw TraceParseError(source, lineno, "invalid number '" + detail::trim(t.substr(comma + 1)) + "'");
    }
    if (!trace.axis.empty() && !(x > trace.axis.back())) {
      throw TraceParseError(source, lineno, "axis values must be strictly increasing");
    }
    trace.axis.push_back(x);
    trace.values.push_back(y);
  }
  if (!have_magic) throw TraceParseError(source, lineno, "empty trace file");
  if (trace.axis.empty()) throw TraceParseError(source, lineno, "trace has no data rows");
  return trace;
}

inline SpectrumTrace read_trace_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw TraceParseError(path, 0, "cannot open file");
  return parse_trace(f, path);
}

// ---------------------------------------------------------------------------
// Images

inline std::string image_text(const ImageResult& img) {
  std::ostringstream os;
  os << "# qsbs-image 1\n";
  for (const auto& [k, v] : img.metadata) os << "# " << k << ": " << v << "\n";
  os << "# values: contrast [dB], rows are y, columns are x\n";
  for (int iy = 0; iy < img.ny; ++iy) {
    for (int ix = 0; ix < img.nx; ++ix) {
      if (ix) os << ' ';
      os << fmt_num(img.at(ix, iy), 6);
    }
    os << '\n';
  }
  return os.str();
}

struct GrayMapping {
  double black_db = 0.0;
  double white_db = 10.0;

  unsigned char level(double db) const {
    const double t = std::clamp((db - black_db) / (white_db - black_db), 0.0, 1.0);
    return static_cast<unsigned char>(std::lround(255.0 * t));
  }
};

/// Binary 8-bit PGM (P5).
inline std::string image_pgm(const ImageResult& img, const GrayMapping& map) {
  std::string out = "P5\n" + std::to_string(img.nx) + " " + std::to_string(img.ny) + "\n255\n";
  for (int iy = 0; iy < img.ny; ++iy) {
    for (int ix = 0; ix < img.nx; ++ix) out.push_back(static_cast<char>(map.level(img.at(ix, iy))));
  }
  return out;
}

inline std::string gray_sidecar(const GrayMapping& map) {
  return "mapping: linear\nquantity: contrast_db\nblack_db: " + fmt_num(map.black_db) +
         "\nwhite_db: " + fmt_num(map.white_db) + "\nlevels: 256\n";
}

// ---------------------------------------------------------------------------
// Viability

inline std::string viability_table(const std::vector<ViabilityCurve>& curves) {
  std::ostringstream os;
  os << "time_h,condition,viability\n";
  for (const auto& c : curves) {
    for (std::size_t i = 0; i < c.times_h.size(); ++i) {
      os << fmt_num(c.times_h[i]) << "," << c.label << "," << fmt_num(c.values[i], 12) << "\n";
    }
  }
  return os.str();
}

}  // namespace qsbs
