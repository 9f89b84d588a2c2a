#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "hypendo/orbits.hpp"

using namespace hypendo;

namespace {

const IntMat2 kA{3, 2, 2, 2};

// Brute-force oracle: every solution of (A^n - I) y in Z^2 has denominator
// dividing det(A^n - I), so scanning the grid (1/D) Z^2 mod 1 finds all of them.
std::vector<Point> grid_scan_fixed_points(const IntMat2& a, int n) {
  IntMat2 b = a.pow(n).minus_identity();
  std::int64_t D = std::llabs(b.det());
  std::vector<Point> out;
  for (std::int64_t i = 0; i < D; ++i)
    for (std::int64_t j = 0; j < D; ++j) {
      std::int64_t u = b.a11 * i + b.a12 * j;
      std::int64_t v = b.a21 * i + b.a22 * j;
      if (u % D == 0 && v % D == 0)
        out.push_back(Point{static_cast<double>(i) / static_cast<double>(D), static_cast<double>(j) / static_cast<double>(D)});
    }
  std::sort(out.begin(), out.end());
  return out;
}

// Single-shooting Newton on f^n(y) - y - k, for the small-n oracle below.
bool single_shooting(const ToralFactor& t, Eigen::Vector2d& y, int n) {
  auto iterate_lift = [&](const Eigen::Vector2d& y0, Eigen::Matrix2d& jac) {
    Eigen::Vector2d v = y0;
    jac.setIdentity();
    for (int i = 0; i < n; ++i) {
      jac = t.jacobian(v[0], v[1]) * jac;
      Vec f = t.lift(v[0], v[1]);
      v = Eigen::Vector2d(f[0], f[1]);
    }
    return v;
  };
  Eigen::Matrix2d jac;
  Eigen::Vector2d k = (iterate_lift(y, jac) - y).array().round().matrix();
  for (int iter = 0; iter < 60; ++iter) {
    Eigen::Vector2d r = iterate_lift(y, jac) - y - k;
    if (!r.allFinite()) return false;
    if (r.lpNorm<Eigen::Infinity>() < 1e-11) return true;
    y -= (jac - Eigen::Matrix2d::Identity()).partialPivLu().solve(r);
  }
  return false;
}

double min_pairwise_distance(const std::vector<Point>& pts) {
  double best = 1e300;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) best = std::min(best, torus_distance(pts[i], pts[j]));
  return best;
}

}  // namespace

TEST(Orbits, TraceRecursionCounts) {
  // |det(A^n - I)| = tr(A^n) - 2^n - 1 for det A = 2 and tr(A^n) > 0, with tr(A^n) = 5 tr(A^{n-1}) - 2 tr(A^{n-2})
  std::int64_t p0 = 2, p1 = 5;
  for (int n = 1; n <= 12; ++n) {
    std::int64_t expected = p1 - (std::int64_t{1} << n) - 1;
    EXPECT_EQ(toral_periodic_count(kA, n), expected) << "n=" << n;
    std::int64_t p2 = 5 * p1 - 2 * p0;
    p0 = p1;
    p1 = p2;
  }
  EXPECT_EQ(toral_periodic_count(kA, 1), 2);
  EXPECT_EQ(toral_periodic_count(kA, 2), 16);
  EXPECT_EQ(toral_periodic_count(kA, 3), 86);
}

TEST(Orbits, ExactEnumerationCounts) {
  auto lin = EndomorphismModel::toral_linear(kA);
  for (int n = 1; n <= 8; ++n) {
    auto set = fixed_points(lin, n);
    EXPECT_EQ(static_cast<std::int64_t>(set.points.size()), toral_periodic_count(kA, n));
    EXPECT_EQ(set.method, OrbitMethod::ExactLattice);
    EXPECT_TRUE(std::is_sorted(set.points.begin(), set.points.end()));
    EXPECT_EQ(std::adjacent_find(set.points.begin(), set.points.end()), set.points.end());
  }
}

TEST(Orbits, ExactEnumerationMatchesGridScan) {
  auto lin = EndomorphismModel::toral_linear(kA);
  for (int n = 1; n <= 4; ++n) {
    auto set = fixed_points(lin, n);
    auto oracle = grid_scan_fixed_points(kA, n);
    ASSERT_EQ(set.points.size(), oracle.size());
    for (std::size_t i = 0; i < oracle.size(); ++i) EXPECT_LT(torus_distance(set.points[i], oracle[i]), 1e-12);
  }
  // a second matrix with negative determinant
  IntMat2 b{5, 2, 1, 0};
  auto m = EndomorphismModel::toral_linear(b);
  for (int n = 1; n <= 3; ++n) {
    auto set = fixed_points(m, n);
    auto oracle = grid_scan_fixed_points(b, n);
    ASSERT_EQ(set.points.size(), oracle.size()) << "n=" << n;
    for (std::size_t i = 0; i < oracle.size(); ++i) EXPECT_LT(torus_distance(set.points[i], oracle[i]), 1e-12);
  }
}

TEST(Orbits, CircleAndProductCounts) {
  auto circle = EndomorphismModel::circle_power(2);
  auto set = fixed_points(circle, 3);
  ASSERT_EQ(set.points.size(), 7u);
  for (int j = 0; j < 7; ++j) EXPECT_NEAR(set.points[j][0], j / 7.0, 1e-15);

  auto prod = EndomorphismModel::product_attractor_circle(0.1);
  auto ps = fixed_points(prod, 5);
  EXPECT_EQ(ps.points.size(), 31u);
  for (const auto& p : ps.points) EXPECT_NEAR(p[0], (1.0 - std::sqrt(0.6)) / 2.0, 1e-15);

  auto pt = EndomorphismModel::product_power_toral(3, kA, 0.01);
  EXPECT_EQ(fixed_points(pt, 2).points.size(), 8u * 16u);
}

TEST(Orbits, PerturbedCountPreservedByContinuation) {
  for (double eps : {0.005, 0.01, 0.02}) {
    auto m = EndomorphismModel::toral_perturbed(kA, eps);
    for (int n = 1; n <= 4; ++n) {
      auto set = fixed_points(m, n);
      EXPECT_EQ(set.method, OrbitMethod::NewtonContinuation);
      EXPECT_EQ(static_cast<std::int64_t>(set.points.size()), toral_periodic_count(kA, n));
      EXPECT_GT(min_pairwise_distance(set.points), 1e-4) << "eps=" << eps << " n=" << n;
      for (const auto& p : set.points) EXPECT_LT(torus_distance(iterate(m, p, n), p), 1e-9);
    }
  }
}

// Independent oracle for the perturbed map: Newton started from a fine grid,
// deduplicated. Every periodic point is found from some nearby grid seed.
TEST(Orbits, PerturbedMatchesNewtonFromGrid) {
  auto m = EndomorphismModel::toral_perturbed(kA, 0.02);
  const auto& t = std::get<ToralFactor>(m.factors()[0]);
  for (int n = 1; n <= 2; ++n) {
    std::vector<Point> found;
    const int g = 120;
    for (int i = 0; i < g; ++i)
      for (int j = 0; j < g; ++j) {
        Eigen::Vector2d y((i + 0.5) / g, (j + 0.5) / g);
        if (!single_shooting(t, y, n)) continue;
        Point p{wrap_unit(y[0]), wrap_unit(y[1])};
        bool dup = false;
        for (const auto& q : found) dup = dup || torus_distance(p, q) < 1e-8;
        if (!dup) found.push_back(p);
      }
    auto set = fixed_points(m, n);
    ASSERT_EQ(found.size(), set.points.size()) << "n=" << n;
    for (const auto& p : found) {
      double best = 1e300;
      for (const auto& q : set.points) best = std::min(best, torus_distance(p, q));
      EXPECT_LT(best, 1e-9);
    }
  }
}

TEST(Orbits, NewtonContinuationIdentityAtZero) {
  auto m = EndomorphismModel::toral_perturbed(kA, 0.01);
  Point seed{0.0, 0.0};
  EXPECT_EQ(newton_continuation(m, seed, 1, 0.0), seed);
  Point moved = newton_continuation(m, seed, 1, 0.01);
  EXPECT_LT(torus_distance(m.apply(moved), moved), 1e-12);
  EXPECT_LT(torus_distance(moved, seed), 0.05);
  EXPECT_THROW(newton_continuation(m, Point{0.1, 0.1}, 1, 0.01), Error);
}

TEST(Orbits, BudgetGuard) {
  auto lin = EndomorphismModel::toral_linear(kA);
  EXPECT_THROW(fixed_points(lin, 12), Error);
  try {
    fixed_points(lin, 12);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::BudgetExceeded);
  }
  EXPECT_NO_THROW(fixed_points(lin, 3, 100.0));
  EXPECT_THROW(fixed_points(lin, 4, 100.0), Error);
}

TEST(Orbits, FixedPointsArePermutedByTheMap) {
  std::vector<std::pair<EndomorphismModel, int>> cases{
      {EndomorphismModel::toral_linear(kA), 5},
      {EndomorphismModel::toral_perturbed(kA, 0.01), 4},
      {EndomorphismModel::product_power_toral(3, kA, 0.01), 2},
      {EndomorphismModel::product_attractor_circle(0.1), 6},
      {EndomorphismModel::circle_power(3), 4}};
  for (const auto& [m, n] : cases) {
    auto set = fixed_points(m, n);
    ASSERT_EQ(set.image.size(), set.points.size());
    std::vector<char> hit(set.points.size(), 0);
    for (std::size_t i = 0; i < set.points.size(); ++i) {
      Point q = m.apply(set.points[i]);
      std::size_t best = 0;
      double bd = 1e300;
      for (std::size_t j = 0; j < set.points.size(); ++j) {
        double d = torus_distance(q, set.points[j]);
        if (d < bd) {
          bd = d;
          best = j;
        }
      }
      EXPECT_LT(bd, 1e-9) << m.describe();
      EXPECT_EQ(best, set.image[i]) << m.describe();
      hit[best] = 1;
    }
    EXPECT_EQ(std::count(hit.begin(), hit.end(), 1), static_cast<long>(set.points.size()));
    for (const auto& cyc : permutation_cycles(set.image)) EXPECT_EQ(n % static_cast<int>(cyc.size()), 0);
  }
}

TEST(Orbits, BirkhoffCocycle) {
  auto m = EndomorphismModel::toral_perturbed(kA, 0.02);
  auto phi = [](const Point& p) { return std::sin(6.0 * p[0]) + p[1] * p[1]; };
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    Point x = m.sample_basic_set(rng);
    for (int a = 0; a <= 6; ++a)
      for (int b = 0; b <= 6; ++b) {
        double lhs = birkhoff_sum(m, phi, x, a + b).value;
        double rhs = birkhoff_sum(m, phi, x, a).value + birkhoff_sum(m, phi, iterate(m, x, a), b).value;
        EXPECT_NEAR(lhs, rhs, 1e-10);
      }
  }
  EXPECT_EQ(birkhoff_sum(m, phi, Point{0.1, 0.2}, 0).value, 0.0);
}
