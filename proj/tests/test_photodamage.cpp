#include <gtest/gtest.h>

#include <cmath>

#include "qsbs/photodamage.hpp"

using namespace qsbs;

namespace {

constexpr double kH = 3600.0;

// Closed-form two-point solution, computed independently of the fitter.
const double kAlpha = std::log(std::log(0.13) / std::log(0.41)) / std::log(45.0 / 24.0);
const double kRate = -std::log(0.13) / (std::pow(45.0, kAlpha) * 3.0);

DamageModel calibrated() {
  return calibrate_damage({{45e-3, 3 * kH, 0.13}, {24e-3, 3 * kH, 0.41}});
}

LightSource at_pump(double w, bool sq = false) {
  LightSource s;
  s.probe_power_w = s.conjugate_power_w = 900e-6;
  s.pump_power_w = w;
  if (sq) s.state = TwoModeSqueezed{7.0};
  return s;
}

}  // namespace

TEST(Calibration, ExactTwoPointSolution) {
  const auto m = calibrated();
  EXPECT_NEAR(m.alpha, kAlpha, 1e-12);
  EXPECT_NEAR(m.rate_k, kRate, 1e-15);
  EXPECT_NEAR(m.alpha, 1.31687310652192, 1e-12);
  EXPECT_NEAR(m.rate_k, 4.52360654198976e-3, 1e-15);
  EXPECT_NEAR(m.viability(45e-3, 3 * kH), 0.13, 1e-12);
  EXPECT_NEAR(m.viability(24e-3, 3 * kH), 0.41, 1e-12);
}

TEST(Calibration, LeastSquaresOnConsistentPoints) {
  DamageModel truth;
  truth.rate_k = 2e-3;
  truth.alpha = 1.5;
  std::vector<DamagePoint> pts;
  for (double p : {10e-3, 20e-3, 30e-3})
    for (double t : {1.0, 2.0}) pts.push_back({p, t * kH, truth.viability(p, t * kH)});
  const auto m = calibrate_damage(pts);
  EXPECT_NEAR(m.alpha, 1.5, 1e-10);
  EXPECT_NEAR(m.rate_k, 2e-3, 1e-13);
}

TEST(Calibration, DegenerateAndInvalidInputs) {
  EXPECT_THROW(calibrate_damage({{45e-3, 1 * kH, 0.5}, {45e-3, 3 * kH, 0.2}}), DamageError);
  EXPECT_THROW(calibrate_damage({{45e-3, 3 * kH, 0.13}}), DamageError);
  EXPECT_THROW(calibrate_damage({}), DamageError);
  EXPECT_THROW(calibrate_damage({{45e-3, 3 * kH, 0.0}, {24e-3, 3 * kH, 0.4}}), DamageError);
  EXPECT_THROW(calibrate_damage({{45e-3, 3 * kH, 1.2}, {24e-3, 3 * kH, 0.4}}), DamageError);
  EXPECT_THROW(calibrate_damage({{45e-3, 3 * kH, 1.0}, {24e-3, 3 * kH, 0.4}}), DamageError);
  EXPECT_THROW(calibrate_damage({{24e-3, 3 * kH, 0.13}, {45e-3, 3 * kH, 0.41}}), DamageError);
}

TEST(Calibration, NoDamageAdmitsZeroRate) {
  const auto m = calibrate_damage({{30e-3, 2 * kH, 1.0}});
  EXPECT_EQ(m.rate_k, 0.0);
  EXPECT_EQ(m.viability(100e-3, 10 * kH), 1.0);
}

TEST(Viability, MonotoneInPowerAndTime) {
  const auto m = calibrated();
  double prev = 1.0;
  for (double p = 5e-3; p <= 60e-3; p += 5e-3) {
    const double v = m.viability(p, 2 * kH);
    EXPECT_LT(v, prev);
    EXPECT_GT(v, 0.0);
    prev = v;
  }
  prev = 1.0;
  for (double t = 0.25; t <= 5.0; t += 0.25) {
    const double v = m.viability(30e-3, t * kH);
    EXPECT_LT(v, prev);
    prev = v;
  }
  EXPECT_EQ(m.viability(0.0, 5 * kH), 1.0);
  EXPECT_EQ(m.viability(30e-3, 0.0), 1.0);
}

TEST(ApplyDose, EndpointsScaleSecondaryPeak) {
  const auto reg = default_material_library();
  const auto m = calibrated();
  const auto coh = apply_dose(reg, m, 45e-3, 3 * kH);
  const auto sq = apply_dose(reg, m, 24e-3, 3 * kH);
  EXPECT_NEAR(coh.at("cell").resonances[1].gain_strength, 0.4 * 0.13, 1e-12);
  EXPECT_NEAR(sq.at("cell").resonances[1].gain_strength, 0.4 * 0.41, 1e-12);
  EXPECT_EQ(coh.at("cell").resonances[0], reg.at("cell").resonances[0]);
  EXPECT_EQ(coh.at("water"), reg.at("water"));
  EXPECT_EQ(coh.at("cell").rayleigh_strength, reg.at("cell").rayleigh_strength);
}

TEST(ApplyDose, ZeroDurationIsIdentity) {
  const auto reg = default_material_library();
  EXPECT_EQ(apply_dose(reg, calibrated(), 45e-3, 0.0), reg);
}

TEST(ApplyDose, SemigroupProperty) {
  const auto reg = default_material_library();
  const auto m = calibrated();
  for (double p : {10e-3, 24e-3, 45e-3}) {
    for (double t1 : {0.3, 1.0, 1.7}) {
      for (double t2 : {0.5, 1.3}) {
        const auto split = apply_dose(apply_dose(reg, m, p, t1 * kH), m, p, t2 * kH);
        const auto whole = apply_dose(reg, m, p, (t1 + t2) * kH);
        // Products of exponentials agree with the exponential of the sum to rounding.
        EXPECT_NEAR(split.at("cell").resonances[1].gain_strength,
                    whole.at("cell").resonances[1].gain_strength, 1e-15);
      }
    }
  }
}

TEST(ApplyDose, UnknownTargets) {
  auto m = calibrated();
  m.target_material = "glass";
  EXPECT_THROW(apply_dose(default_material_library(), m, 45e-3, kH), DamageError);
  m.target_material = "water";
  m.target_resonance = 1;
  EXPECT_THROW(apply_dose(default_material_library(), m, 45e-3, kH), DamageError);
}

TEST(Experiment, ThreeFoldViabilityGain) {
  const auto res = viability_experiment(calibrated(),
                                        {{"coherent", at_pump(45e-3)}, {"squeezed", at_pump(24e-3, true)}},
                                        3 * kH, kH);
  ASSERT_EQ(res.curves.size(), 2u);
  for (const auto& c : res.curves) {
    ASSERT_EQ(c.times_h.size(), 4u);
    EXPECT_EQ(c.values.front(), 1.0);
    for (std::size_t i = 1; i < c.values.size(); ++i) EXPECT_LE(c.values[i], c.values[i - 1]);
  }
  const double ratio = res.curves[1].values.back() / res.curves[0].values.back();
  EXPECT_NEAR(ratio, 0.41 / 0.13, 1e-9);
  EXPECT_NEAR(ratio, 3.15, 0.01);
  EXPECT_TRUE(res.spectra.empty());
}

TEST(Experiment, EqualPowerGivesIdenticalCurves) {
  const auto res = viability_experiment(calibrated(),
                                        {{"a", at_pump(30e-3)}, {"b", at_pump(30e-3, true)}}, 3 * kH, kH);
  EXPECT_EQ(res.curves[0].values, res.curves[1].values);
}

TEST(Experiment, ZeroPowerIsFlat) {
  const auto res = viability_experiment(calibrated(), {{"dark", at_pump(0.0)}}, 3 * kH, 0.5 * kH);
  for (double v : res.curves[0].values) EXPECT_EQ(v, 1.0);
  EXPECT_EQ(res.curves[0].values.size(), 7u);
}

TEST(Experiment, RejectsNonPositiveHorizon) {
  EXPECT_THROW(viability_experiment(calibrated(), {{"x", at_pump(1e-3)}}, 0.0, kH), DamageError);
}

TEST(Experiment, HourlySpectraDecayOnlyTheSecondaryPeak) {
  SpectrumProbe probe;
  probe.enabled = true;
  probe.seed = 3;
  const auto reg = default_material_library();
  const auto res = viability_experiment(calibrated(), {{"coherent", at_pump(45e-3)}}, 3 * kH, kH, reg,
                                        DetectionChain{}, probe);
  ASSERT_EQ(res.spectra.size(), 4u);
  auto value_near = [](const SpectrumTrace& t, double ghz) {
    std::size_t best = 0;
    for (std::size_t i = 0; i < t.axis.size(); ++i)
      if (std::abs(t.axis[i] - ghz) < std::abs(t.axis[best] - ghz)) best = i;
    return t.values[best];
  };
  const auto& first = res.spectra.front().trace;
  const auto& last = res.spectra.back().trace;
  EXPECT_EQ(*first.find("averaged_traces"), "10");
  const double scale = std::stod(*first.find("response_scale"));
  const auto cell0 = reg.at("cell");
  const auto cell3 = apply_dose(reg, calibrated(), 45e-3, 3 * kH).at("cell");
  const double sigma = std::stod(*first.find("noise_sigma"));
  // The main peak persists; the secondary peak follows the dosed model.
  EXPECT_NEAR(value_near(last, 5.04), scale * material_response(cell3, 5.04e9), 5 * sigma);
  EXPECT_NEAR(value_near(first, 5.6), scale * material_response(cell0, 5.6e9), 5 * sigma);
  EXPECT_NEAR(value_near(last, 5.6), scale * material_response(cell3, 5.6e9), 5 * sigma);
  EXPECT_LT(value_near(last, 5.6), value_near(first, 5.6) - 10 * sigma);
}
