#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "qsbs/format.hpp"
#include "qsbs/rng.hpp"
#include "qsbs/units.hpp"

using namespace qsbs;

TEST(ParseQuantity, AcceptsUnitSuffixes) {
  EXPECT_DOUBLE_EQ(parse_quantity("6.7 GHz", Dimension::Frequency), 6.7e9);
  EXPECT_DOUBLE_EQ(parse_quantity("287MHz", Dimension::Frequency), 287e6);
  EXPECT_DOUBLE_EQ(parse_quantity("10 kHz", Dimension::Frequency), 1e4);
  EXPECT_DOUBLE_EQ(parse_quantity("7 mW", Dimension::Power), 7e-3);
  EXPECT_DOUBLE_EQ(parse_quantity("700 uW", Dimension::Power), 700e-6);
  EXPECT_DOUBLE_EQ(parse_quantity("700 \xC2\xB5W", Dimension::Power), 700e-6);
  EXPECT_DOUBLE_EQ(parse_quantity("6 um", Dimension::Length), 6e-6);
  EXPECT_DOUBLE_EQ(parse_quantity("3 h", Dimension::Time), 10800.0);
  EXPECT_DOUBLE_EQ(parse_quantity("2.0 ms", Dimension::Time), 2e-3);
  EXPECT_DOUBLE_EQ(parse_quantity("-81 dBm", Dimension::DecibelMilliwatt), -81.0);
  EXPECT_DOUBLE_EQ(parse_quantity("7 dB", Dimension::Decibel), 7.0);
}

TEST(ParseQuantity, RejectsBareNumbersAndWrongDimensions) {
  EXPECT_THROW(parse_quantity("7", Dimension::Power), UnitError);
  EXPECT_THROW(parse_quantity("7 GHz", Dimension::Power), UnitError);
  EXPECT_THROW(parse_quantity("mW", Dimension::Power), UnitError);
  EXPECT_THROW(parse_quantity("7 dBm", Dimension::Decibel), UnitError);
  EXPECT_THROW(parse_quantity("inf W", Dimension::Power), UnitError);
}

TEST(DecibelConversions, RoundTrip) {
  EXPECT_NEAR(db_to_ratio(6.0), 3.98107170553497, 1e-13);
  EXPECT_NEAR(ratio_to_db(2.0), 3.01029995663981, 1e-13);
  EXPECT_DOUBLE_EQ(dbm_to_mw(0.0), 1.0);
  for (double x : {-90.0, -67.0, -3.0, 0.0, 12.5}) EXPECT_NEAR(mw_to_dbm(dbm_to_mw(x)), x, 1e-12);
}

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42), c(43);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const double x = a.normal();
    EXPECT_EQ(x, b.normal());
    differs |= x != c.normal();
  }
  EXPECT_TRUE(differs);
}

TEST(Rng, NormalMoments) {
  Rng r(7);
  const int n = 200000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double x = r.normal();
    s += x;
    s2 += x * x;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.01);
}

TEST(Rng, UniformInUnitInterval) {
  Rng r(3);
  for (int i = 0; i < 10000; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(Rng, DerivedSeedsAreDistinct) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 10000; ++i) seen.insert(derive_seed(1, i));
  EXPECT_EQ(seen.size(), 10000u);
}

TEST(Format, ShortestRoundTrips) {
  for (double v : {0.0007, 5.03e9, 120.0, 0.691, 1.0 / 3.0, -81.0, 6e-6}) {
    EXPECT_EQ(std::stod(fmt_shortest(v)), v);
  }
  EXPECT_EQ(fmt_shortest(120.0), "120");
  EXPECT_EQ(std::stod(fmt_exact(0.1 + 0.2)), 0.1 + 0.2);
}
