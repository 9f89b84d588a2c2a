#include <gtest/gtest.h>

#include <cmath>

#include "hypendo/thermo.hpp"

using namespace hypendo;

namespace {

const IntMat2 kA{3, 2, 2, 2};
const double kLambdaS = (5.0 - std::sqrt(17.0)) / 2.0;
const double kLambdaU = (5.0 + std::sqrt(17.0)) / 2.0;

}  // namespace

TEST(LogSumExp, Basics) {
  EXPECT_NEAR(log_sum_exp(std::vector<double>{0.0, 0.0}), std::log(2.0), 1e-15);
  EXPECT_NEAR(log_sum_exp(std::vector<double>{1000.0, 1000.0}), 1000.0 + std::log(2.0), 1e-12);
  EXPECT_TRUE(std::isinf(log_sum_exp(std::vector<double>{})));
}

TEST(Potential, Parse) {
  EXPECT_EQ(Potential::parse("zero").tag(), "zero");
  EXPECT_EQ(Potential::parse("stable").tag(), "stable");
  EXPECT_DOUBLE_EQ(Potential::parse("const:-0.5").constant, -0.5);
  EXPECT_THROW(Potential::parse("const:abc"), Error);
  EXPECT_THROW(Potential::parse("unstable"), Error);
}

TEST(PartitionSum, Examples) {
  auto lin = EndomorphismModel::toral_linear(kA);
  auto z1 = partition_sum(lin, Potential::zero(), 1);
  EXPECT_EQ(z1.count, 2u);
  EXPECT_NEAR(z1.value, 2.0, 1e-12);
  auto s1 = partition_sum(lin, Potential::stable(), 1);
  EXPECT_NEAR(s1.log_value, std::log(2.0 * kLambdaS), 1e-12);
  EXPECT_NEAR(s1.log_value, -0.131369, 1e-6);
  auto z3 = partition_sum(lin, Potential::zero(), 3);
  EXPECT_NEAR(z3.value, 86.0, 1e-9);
}

TEST(Pressure, ToralZeroPotential) {
  auto lin = EndomorphismModel::toral_linear(kA);
  auto p = pressure(lin, Potential::zero(), 8);
  EXPECT_NEAR(p.value, std::log(kLambdaU), 0.01);
  EXPECT_LT(p.uncertainty, 0.01);
  // closed form of the successive difference
  EXPECT_NEAR(p.value, std::log(187200.0 / 40966.0), 1e-12);
}

TEST(Pressure, CircleDoubling) {
  auto circle = EndomorphismModel::circle_power(2);
  auto p = pressure(circle, Potential::zero(), 12);
  EXPECT_NEAR(p.value, std::log(2.0), 0.005);
  EXPECT_NEAR(p.value, std::log(4095.0 / 2047.0), 1e-12);
}

TEST(Pressure, ConstantShiftAdditivity) {
  auto m = EndomorphismModel::toral_perturbed(kA, 0.01);
  PeriodicCache cache(m);
  auto base = pressure(cache, Potential::stable(), 7);
  auto shifted = pressure(cache, Potential::stable(1.0, 0.37), 7);
  EXPECT_NEAR(shifted.value - base.value, 0.37, 2.0 * std::max(base.uncertainty, 1e-12));
}

TEST(Pressure, PartitionGrowthBounded) {
  auto m = EndomorphismModel::toral_perturbed(kA, 0.01);
  PeriodicCache cache(m);
  auto p = pressure(cache, Potential::stable(), 8);
  double lo = 1e300, hi = -1e300;
  for (int n = 1; n <= 8; ++n) {
    double r = p.log_values[n - 1] - n * p.value;
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  EXPECT_LT(hi - lo, 1.0);
}

TEST(Pressure, RequiresThreeLevels) {
  auto lin = EndomorphismModel::toral_linear(kA);
  EXPECT_THROW(pressure(lin, Potential::zero(), 2), Error);
}

TEST(BowenRoot, ToralLinear) {
  auto lin = EndomorphismModel::toral_linear(kA);
  auto r = bowen_root(lin, 8, lin.degree());
  EXPECT_NEAR(r.t_star, 1.0, 0.02);
  EXPECT_LT(r.residual, 0.02);
  EXPECT_LE(r.t_hi - r.t_lo, 1e-3);
  // g is decreasing along every evaluated pair
  for (const auto& a : r.evaluations)
    for (const auto& b : r.evaluations)
      if (a.t < b.t) {
        EXPECT_GT(a.g, b.g - 1e-12);
      }
}

TEST(BowenRoot, ProductAttractorCircle) {
  auto m = EndomorphismModel::product_attractor_circle(0.1);
  auto r = bowen_root(m, 10, m.degree());
  EXPECT_NEAR(r.t_star, 0.0, 0.02);
}

TEST(BowenRoot, ConstantPotentialClosedForm) {
  // for d = 1 the root of log lambda_u + t log lambda_s = 0
  auto lin = EndomorphismModel::toral_linear(kA);
  auto r = bowen_root(lin, 8, 1);
  double expected = std::log(kLambdaU) / -std::log(kLambdaS);
  EXPECT_NEAR(expected, 1.8407, 1e-4);
  EXPECT_NEAR(r.t_star, expected, 0.02);
}

TEST(BowenRoot, NoSignChange) {
  auto lin = EndomorphismModel::toral_linear(kA);
  try {
    bowen_root(lin, 8, 1000);
    FAIL() << "expected NoSignChange";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NoSignChange);
  }
}

TEST(BowenRoot, PressureConsistency) {
  auto m = EndomorphismModel::toral_perturbed(kA, 0.01);
  PeriodicCache cache(m);
  auto r = bowen_root(cache, 8, m.degree());
  auto p = pressure(cache, Potential::stable(r.t_star), 8);
  EXPECT_LT(std::abs(p.value - std::log(2.0)), 0.02);
}
