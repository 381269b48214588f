#pragma once

// Material definitions and the deterministic SBS spectral response: gain
// lobes at +shift, loss lobes at -shift, and an absorptive Rayleigh dip at
// zero pump-probe detuning.

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qsbs/units.hpp"

namespace qsbs {

class MaterialError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One acoustic resonance. `gain_strength` is relative to water (water = 1).
struct BrillouinResonance {
  double shift_hz = 0.0;      ///< Omega_B / 2pi
  double linewidth_hz = 0.0;  ///< Gamma / 2pi, full width at half maximum
  double gain_strength = 0.0;

  void validate() const {
    if (!std::isfinite(shift_hz) || !std::isfinite(linewidth_hz) ||
        !std::isfinite(gain_strength)) {
      throw MaterialError("resonance parameters must be finite");
    }
    if (shift_hz <= 0.0) throw MaterialError("resonance shift must be > 0");
    if (linewidth_hz <= 0.0) throw MaterialError("resonance linewidth must be > 0");
    if (gain_strength < 0.0) throw MaterialError("resonance gain strength must be >= 0");
    if (linewidth_hz >= shift_hz) {
      throw MaterialError("resonance linewidth must be smaller than its shift");
    }
  }

  bool operator==(const BrillouinResonance&) const = default;
};

struct MaterialSpec {
  std::string name;
  std::vector<BrillouinResonance> resonances;
  double rayleigh_strength = 0.0;
  double rayleigh_width_hz = 150.0 * units::MHz;

  void validate() const {
    if (name.empty()) throw MaterialError("material name must not be empty");
    if (resonances.empty()) {
      throw MaterialError("material '" + name + "' needs at least one resonance");
    }
    for (std::size_t i = 0; i < resonances.size(); ++i) {
      try {
        resonances[i].validate();
      } catch (const MaterialError& e) {
        throw MaterialError("material '" + name + "' resonance " + std::to_string(i + 1) +
                            ": " + e.what());
      }
      if (i > 0 && resonances[i].shift_hz <= resonances[i - 1].shift_hz) {
        throw MaterialError("material '" + name + "': resonance shifts must be strictly increasing");
      }
    }
    if (!std::isfinite(rayleigh_strength) || rayleigh_strength < 0.0) {
      throw MaterialError("material '" + name + "': rayleigh strength must be >= 0");
    }
    if (!std::isfinite(rayleigh_width_hz) || rayleigh_width_hz <= 0.0) {
      throw MaterialError("material '" + name + "': rayleigh width must be > 0");
    }
  }

  bool operator==(const MaterialSpec&) const = default;
};

/// Composition of a sample volume. Weights sum to at most one; the remainder
/// contributes no response.
class Mixture {
 public:
  Mixture() = default;
  Mixture(std::initializer_list<std::pair<const std::string, double>> weights)
      : weights_(weights) {
    validate();
  }
  explicit Mixture(std::map<std::string, double> weights) : weights_(std::move(weights)) {
    validate();
  }

  static Mixture pure(const std::string& name) { return Mixture({{name, 1.0}}); }

  const std::map<std::string, double>& weights() const { return weights_; }

  double weight(const std::string& name) const {
    auto it = weights_.find(name);
    return it == weights_.end() ? 0.0 : it->second;
  }

  double total() const {
    double sum = 0.0;
    for (const auto& [_, w] : weights_) sum += w;
    return sum;
  }

  Mixture scaled(double alpha) const {
    std::map<std::string, double> out;
    for (const auto& [name, w] : weights_) out[name] = alpha * w;
    return Mixture(std::move(out));
  }

  void validate() const {
    for (const auto& [name, w] : weights_) {
      if (!std::isfinite(w) || w < 0.0 || w > 1.0) {
        throw MaterialError("mixture weight for '" + name + "' must lie in [0, 1]");
      }
    }
    if (total() > 1.0 + 1e-9) {
      throw MaterialError("mixture weights sum to more than 1");
    }
  }

  bool operator==(const Mixture&) const = default;

 private:
  std::map<std::string, double> weights_;
};

/// Immutable-by-convention set of named materials. Updates return copies.
class MaterialRegistry {
 public:
  MaterialRegistry() = default;
  explicit MaterialRegistry(std::vector<MaterialSpec> materials) {
    for (auto& m : materials) add(std::move(m));
  }

  void add(MaterialSpec material) {
    material.validate();
    if (materials_.count(material.name)) {
      throw MaterialError("duplicate material '" + material.name + "'");
    }
    std::string key = material.name;
    materials_.emplace(std::move(key), std::move(material));
  }

  bool contains(const std::string& name) const { return materials_.count(name) != 0; }

  const MaterialSpec& at(const std::string& name) const {
    auto it = materials_.find(name);
    if (it == materials_.end()) throw MaterialError("unknown material '" + name + "'");
    return it->second;
  }

  MaterialRegistry with(MaterialSpec replacement) const {
    replacement.validate();
    MaterialRegistry copy = *this;
    copy.materials_.at(replacement.name) = std::move(replacement);
    return copy;
  }

  const std::map<std::string, MaterialSpec>& materials() const { return materials_; }

  void check(const Mixture& mixture) const {
    for (const auto& [name, _] : mixture.weights()) at(name);
  }

  bool operator==(const MaterialRegistry&) const = default;

 private:
  std::map<std::string, MaterialSpec> materials_;
};

/// Unit-peak Lorentzian, (G/2)^2 / ((d - s)^2 + (G/2)^2).
inline double lorentzian(double delta, double shift, double linewidth) {
  if (!std::isfinite(delta) || !std::isfinite(shift) || !std::isfinite(linewidth)) {
    throw MaterialError("lorentzian: non-finite input");
  }
  if (linewidth <= 0.0) throw MaterialError("lorentzian: linewidth must be > 0");
  const double half = 0.5 * linewidth;
  const double x = delta - shift;
  return half * half / (x * x + half * half);
}

/// Signed response of a single material at pump-probe detuning `delta_hz`.
inline double material_response(const MaterialSpec& material, double delta_hz) {
  double value = 0.0;
  for (const auto& r : material.resonances) {
    value += r.gain_strength * (lorentzian(delta_hz, r.shift_hz, r.linewidth_hz) -
                                lorentzian(delta_hz, -r.shift_hz, r.linewidth_hz));
  }
  if (material.rayleigh_strength > 0.0) {
    value -= material.rayleigh_strength * lorentzian(delta_hz, 0.0, material.rayleigh_width_hz);
  }
  return value;
}

inline double material_response(const MaterialRegistry& registry, const Mixture& mixture,
                                double delta_hz) {
  double value = 0.0;
  for (const auto& [name, w] : mixture.weights()) {
    const MaterialSpec& m = registry.at(name);
    if (w != 0.0) value += w * material_response(m, delta_hz);
  }
  return value;
}

/// The shipped library. Strengths other than water's are calibration values
/// relative to water; Rayleigh parameters are placeholders.
inline MaterialRegistry default_material_library() {
  using namespace units::literals;
  return MaterialRegistry({
      {"water", {{5.03_GHz, 287.0_MHz, 1.0}}, 0.25, 150.0_MHz},
      {"hydrogel", {{6.7_GHz, 300.0_MHz, 0.8}}, 0.25, 150.0_MHz},
      {"cell", {{5.05_GHz, 300.0_MHz, 1.0}, {5.6_GHz, 300.0_MHz, 0.4}}, 0.25, 150.0_MHz},
      {"lipid", {{12.0_GHz, 300.0_MHz, 0.5}}, 0.25, 150.0_MHz},
  });
}

}  // namespace qsbs
