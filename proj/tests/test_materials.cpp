#include <gtest/gtest.h>

#include <cmath>

#include "qsbs/materials.hpp"

using namespace qsbs;
using namespace qsbs::units::literals;

TEST(Lorentzian, UnitPeakAndHalfWidth) {
  EXPECT_DOUBLE_EQ(lorentzian(5.03_GHz, 5.03_GHz, 287.0_MHz), 1.0);
  EXPECT_NEAR(lorentzian(5.03e9 + 143.5e6, 5.03_GHz, 287.0_MHz), 0.5, 1e-15);
}

TEST(Lorentzian, FarWingMatchesOracle) {
  // Independent high-precision evaluation of (G/2)^2 / ((d-s)^2 + (G/2)^2).
  EXPECT_NEAR(lorentzian(6.7_GHz, 5.03_GHz, 287.0_MHz), 0.00732952724820650, 1e-15);
}

TEST(MaterialResponse, WaterGainAndLossLobes) {
  const auto reg = default_material_library();
  const auto& water = reg.at("water");
  const double peak = material_response(water, 5.03_GHz);
  EXPECT_NEAR(peak, 1.0, 0.01);
  EXPECT_LT(material_response(water, -5.03_GHz), -0.99);
  // Rayleigh dip at zero detuning.
  EXPECT_NEAR(material_response(water, 0.0), -water.rayleigh_strength, 1e-3);
}

TEST(MaterialResponse, GainLossAntisymmetryAwayFromZero) {
  const auto reg = default_material_library();
  for (const auto& [name, m] : reg.materials()) {
    for (double d : {3e9, 5.05e9, 5.6e9, 6.7e9, 12e9}) {
      const double plus = material_response(m, d);
      const double minus = material_response(m, -d);
      const double rayleigh = m.rayleigh_strength * lorentzian(d, 0.0, m.rayleigh_width_hz);
      EXPECT_NEAR(plus + minus, -2.0 * rayleigh, 1e-12) << name << " at " << d;
    }
  }
}

TEST(MaterialResponse, MixtureIsLinear) {
  const auto reg = default_material_library();
  const Mixture mix{{"water", 0.3}, {"cell", 0.5}};
  for (double d : {-6e9, -1e9, 0.0, 2e9, 5.05e9, 5.6e9}) {
    const double expect = 0.3 * material_response(reg.at("water"), d) +
                          0.5 * material_response(reg.at("cell"), d);
    EXPECT_NEAR(material_response(reg, mix, d), expect, 1e-14);
  }
  EXPECT_EQ(material_response(reg, Mixture{}, 5e9), 0.0);
}

TEST(MaterialResponse, CellHasTwoPeaks) {
  const auto reg = default_material_library();
  const auto& cell = reg.at("cell");
  EXPECT_GT(material_response(cell, 5.05_GHz), material_response(cell, 5.35_GHz));
  EXPECT_GT(material_response(cell, 5.6_GHz), material_response(cell, 5.35_GHz));
}

TEST(Validation, RejectsBadResonances) {
  EXPECT_THROW((BrillouinResonance{0.0, 1e6, 1.0}.validate()), MaterialError);
  EXPECT_THROW((BrillouinResonance{5e9, -1.0, 1.0}.validate()), MaterialError);
  EXPECT_THROW((BrillouinResonance{5e9, 1e8, -0.1}.validate()), MaterialError);
  EXPECT_THROW((BrillouinResonance{1e8, 2e8, 1.0}.validate()), MaterialError);
  MaterialSpec m{"x", {{6e9, 1e8, 1.0}, {5e9, 1e8, 1.0}}, 0.0, 1e8};
  EXPECT_THROW(m.validate(), MaterialError);
}

TEST(Validation, MixtureWeights) {
  EXPECT_THROW((Mixture{{"water", 0.7}, {"cell", 0.4}}), MaterialError);
  EXPECT_THROW((Mixture{{"water", -0.1}}), MaterialError);
  EXPECT_NO_THROW((Mixture{{"water", 0.6}, {"cell", 0.4}}));
}

TEST(Registry, DuplicatesAndUnknowns) {
  auto reg = default_material_library();
  EXPECT_THROW(reg.add({"water", {{5e9, 1e8, 1.0}}, 0.0, 1e8}), MaterialError);
  EXPECT_THROW(reg.at("glass"), MaterialError);
  EXPECT_THROW(reg.check(Mixture{{"glass", 1.0}}), MaterialError);
}

TEST(Registry, WithReturnsUpdatedCopy) {
  const auto reg = default_material_library();
  MaterialSpec cell = reg.at("cell");
  cell.resonances[1].gain_strength = 0.1;
  const auto updated = reg.with(cell);
  EXPECT_DOUBLE_EQ(reg.at("cell").resonances[1].gain_strength, 0.4);
  EXPECT_DOUBLE_EQ(updated.at("cell").resonances[1].gain_strength, 0.1);
  EXPECT_EQ(updated.at("water"), reg.at("water"));
}

TEST(Library, WaterParameters) {
  const auto reg = default_material_library();
  const auto& w = reg.at("water").resonances.at(0);
  EXPECT_DOUBLE_EQ(w.shift_hz, 5.03e9);
  EXPECT_DOUBLE_EQ(w.linewidth_hz, 287e6);
  EXPECT_DOUBLE_EQ(reg.at("hydrogel").resonances.at(0).shift_hz, 6.7e9);
  EXPECT_DOUBLE_EQ(reg.at("lipid").resonances.at(0).shift_hz, 12e9);
  EXPECT_DOUBLE_EQ(reg.at("cell").resonances.at(1).shift_hz, 5.6e9);
}
