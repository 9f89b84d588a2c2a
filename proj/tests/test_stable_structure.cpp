#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "hypendo/orbits.hpp"
#include "hypendo/stable_structure.hpp"

using namespace hypendo;

namespace {

const IntMat2 kA{3, 2, 2, 2};
const double kLambdaS = (5.0 - std::sqrt(17.0)) / 2.0;

double angle(const Vec& a, const Vec& b) {
  double c = std::abs(a.dot(b)) / (a.norm() * b.norm());
  return std::acos(std::min(1.0, c));
}

// Bracketing and comparability on every entry, recomputing the contraction
// products from the tree independently of the walk.
void check_bracketing(const EndomorphismModel& m, const PrehistoryTree& tree, const RhoMaximalSet& set) {
  for (const auto& e : set.entries) {
    auto branch = tree.branch(e.p, e.node);
    double prod = 1.0, prev = 1.0;
    for (int j = 1; j <= e.p; ++j) {
      prev = prod;
      prod *= std::exp(stable_log_derivative(m, branch[j]));
    }
    EXPECT_NEAR(prod, e.contraction, 1e-12 * prod);
    EXPECT_LT(prod * set.eps, set.rho);
    EXPECT_LE(set.rho, prev * set.eps);
  }
  for (const auto& a : set.entries)
    for (const auto& b : set.entries) {
      double r = a.contraction / b.contraction;
      EXPECT_GE(r, set.min_stable_factor * (1 - 1e-12));
      EXPECT_LE(r, 1.0 / set.min_stable_factor * (1 + 1e-12));
    }
}

}  // namespace

TEST(StableDirection, LinearEigenvector) {
  auto lin = EndomorphismModel::toral_linear(kA);
  Vec expected(2);
  expected << 2.0, kLambdaS - 3.0;
  expected.normalize();
  if (expected[0] < 0) expected = -expected;
  for (int h : {1, 5, 25}) {
    auto d = stable_direction(lin, Point{0.3, 0.7}, h);
    EXPECT_LT((d.vector - expected).norm(), 1e-15);
    EXPECT_NEAR(d.vector.norm(), 1.0, 1e-15);
  }
  auto zero = EndomorphismModel::toral_perturbed(kA, 0.0);
  EXPECT_EQ(stable_direction(zero, Point{0.1, 0.2}).vector, stable_direction(lin, Point{0.1, 0.2}).vector);
}

TEST(StableDirection, HorizonConsistency) {
  auto m = EndomorphismModel::toral_perturbed(kA, 0.02);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 50; ++i) {
    Point x = m.sample_basic_set(rng);
    auto a = stable_direction(m, x, 15);
    auto b = stable_direction(m, x, 25);
    EXPECT_LT(angle(a.vector, b.vector), 1e-6);
    EXPECT_NEAR(b.vector.norm(), 1.0, 1e-14);
  }
}

TEST(StableDirection, InvariantUnderDf) {
  for (double eps : {0.0, 0.01, 0.02}) {
    auto m = EndomorphismModel::toral_perturbed(kA, eps);
    std::mt19937_64 rng(2);
    for (int i = 0; i < 50; ++i) {
      Point x = m.sample_basic_set(rng);
      Vec pushed = m.differential(x) * stable_direction(m, x).vector;
      EXPECT_LT(angle(pushed, stable_direction(m, m.apply(x)).vector), 1e-6);
    }
  }
}

TEST(StableDirection, CircleHasNone) {
  auto c = EndomorphismModel::circle_power(2);
  try {
    stable_direction(c, Point{0.1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NoStableDirection);
  }
}

TEST(StablePotential, Examples) {
  auto lin = EndomorphismModel::toral_linear(kA);
  EXPECT_NEAR(stable_log_derivative(lin, Point{0.2, 0.9}), std::log(kLambdaS), 1e-14);
  EXPECT_NEAR(std::log(kLambdaS), -0.824516, 1e-6);

  auto prod = EndomorphismModel::product_attractor_circle(0.1);
  double pc = (1.0 - std::sqrt(0.6)) / 2.0;
  EXPECT_NEAR(stable_log_derivative(prod, Point{pc, 0.37}), std::log(2.0 * pc), 1e-12);
  EXPECT_NEAR(std::log(2.0 * pc), -1.48986, 1e-5);
}

TEST(StablePotential, Cocycle) {
  auto m = EndomorphismModel::toral_perturbed(kA, 0.02);
  std::mt19937_64 rng(4);
  for (int i = 0; i < 50; ++i) {
    Point x = m.sample_basic_set(rng);
    double two = stable_log_derivative(m, x) + stable_log_derivative(m, m.apply(x));
    Vec v = stable_direction(m, x).vector;
    Mat d2 = m.differential(m.apply(x)) * m.differential(x);
    EXPECT_NEAR(two, std::log((d2 * v).norm()), 1e-8);
    EXPECT_NEAR(stable_birkhoff_sum(m, x, 2), two, 1e-8);
    for (int a = 0; a <= 4; ++a)
      for (int b = 0; b <= 4; ++b)
        EXPECT_NEAR(stable_birkhoff_sum(m, x, a + b),
                    stable_birkhoff_sum(m, x, a) + stable_birkhoff_sum(m, iterate(m, x, a), b), 1e-10);
  }
}

TEST(PrehistoryTree, Sizes) {
  auto lin = EndomorphismModel::toral_linear(kA);
  auto t = prehistory_tree(lin, Point{0.3, 0.7}, 3);
  EXPECT_EQ(t.leaves().size(), 8u);
  auto prod = EndomorphismModel::product_power_toral(3, kA, 0.01);
  auto t2 = prehistory_tree(prod, Point{0.1, 0.3, 0.7}, 2);
  EXPECT_EQ(t2.leaves().size(), 36u);
  EXPECT_THROW(prehistory_tree(lin, Point{0.3, 0.7}, 21), Error);
}

TEST(PrehistoryTree, BranchesAreBackwardOrbits) {
  for (const auto& m : {EndomorphismModel::toral_perturbed(kA, 0.02), EndomorphismModel::product_attractor_circle(0.1),
                        EndomorphismModel::product_power_toral(3, kA, 0.01)}) {
    std::mt19937_64 rng(6);
    Point x = m.sample_basic_set(rng);
    auto t = prehistory_tree(m, x, 4);
    for (std::size_t leaf = 0; leaf < t.leaves().size(); ++leaf) {
      auto br = t.branch(4, leaf);
      EXPECT_EQ(br[0], x);
      for (int j = 1; j <= 4; ++j) EXPECT_LT(torus_distance(m.apply(br[j]), br[j - 1]), 1e-10);
    }
  }
}

TEST(RhoMaximal, LinearExample) {
  auto lin = EndomorphismModel::toral_linear(kA);
  auto tree = prehistory_tree(lin, Point{0.3, 0.7}, 6);
  auto set = rho_maximal(lin, tree, 0.01, 0.1);
  ASSERT_EQ(set.cutoffs, std::vector<int>{3});
  EXPECT_EQ(set.entries.size(), 8u);
  for (const auto& e : set.entries) EXPECT_NEAR(e.contraction * 0.1, 0.00843, 1e-5);
  check_bracketing(lin, tree, set);
}

TEST(RhoMaximal, TieMovesToNextLevel) {
  auto lin = EndomorphismModel::toral_linear(kA);
  auto tree = prehistory_tree(lin, Point{0.3, 0.7}, 6);
  const double eps = 0.1;
  const double factor = std::exp(stable_log_derivative(lin, tree.levels[1][0].point));
  // rho = eps * lambda_s exactly: the one-step product ties, so the strict inequality first holds at p = 2
  auto tie = rho_maximal(lin, tree, factor * eps, eps);
  EXPECT_EQ(tie.cutoffs, std::vector<int>{2});
  check_bracketing(lin, tree, tie);
  auto above = rho_maximal(lin, tree, std::nextafter(factor * eps, 1.0), eps);
  EXPECT_EQ(above.cutoffs, std::vector<int>{1});
}

TEST(RhoMaximal, DepthInsufficient) {
  auto lin = EndomorphismModel::toral_linear(kA);
  auto tree = prehistory_tree(lin, Point{0.3, 0.7}, 2);
  try {
    rho_maximal(lin, tree, 0.01, 0.1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DepthInsufficient);
    EXPECT_NE(std::string(e.what()).find("depth >= 3"), std::string::npos);
  }
  EXPECT_THROW(rho_maximal(lin, tree, 0.2, 0.1), Error);
}

TEST(RhoMaximal, PerturbedBracketing) {
  auto m = EndomorphismModel::toral_perturbed(kA, 0.02);
  auto tree = prehistory_tree(m, Point{0.3, 0.7}, 14);
  bool several = false;
  for (int i = 0; i < 20; ++i) {
    double rho = 0.1 * std::pow(10.0, -0.1 - 0.05 * i);
    auto set = rho_maximal(m, tree, rho, 0.1);
    check_bracketing(m, tree, set);
    EXPECT_TRUE(std::is_sorted(set.cutoffs.rbegin(), set.cutoffs.rend()));
    several = several || set.cutoffs.size() >= 2;
  }
  EXPECT_TRUE(several);
}
