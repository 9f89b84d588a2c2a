#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "hypendo/error.hpp"
#include "hypendo/int_matrix.hpp"
#include "hypendo/models.hpp"
#include "hypendo/parallel.hpp"
#include "hypendo/point.hpp"

namespace hypendo {

/// Upper bound on the number of periodic points enumerated at once.
inline constexpr double kAtomBudget = 1e7;

/// Step in eps for the periodic-point homotopy.
inline constexpr double kHomotopyStep = 0.005;

enum class OrbitMethod { ExactLattice, NewtonContinuation };

inline std::string to_string(OrbitMethod m) {
  return m == OrbitMethod::ExactLattice ? "exact_lattice" : "newton_continuation";
}

/// Fix(f^n), sorted lexicographically. image[i] is the index of f(points[i]), so
/// f acts on the set as the permutation `image`.
struct PeriodicOrbitSet {
  int n = 0;
  std::vector<Point> points;
  std::vector<std::size_t> image;
  OrbitMethod method = OrbitMethod::ExactLattice;
};

/// The cycles of a permutation, each listed from its smallest index in orbit order.
inline std::vector<std::vector<std::size_t>> permutation_cycles(const std::vector<std::size_t>& image) {
  std::vector<char> seen(image.size(), 0);
  std::vector<std::vector<std::size_t>> cycles;
  for (std::size_t i = 0; i < image.size(); ++i) {
    if (seen[i]) continue;
    std::vector<std::size_t> c;
    for (std::size_t j = i; !seen[j]; j = image[j]) {
      seen[j] = 1;
      c.push_back(j);
    }
    cycles.push_back(std::move(c));
  }
  return cycles;
}

/// S_n phi(x) = phi(x) + ... + phi(f^{n-1} x); n terms.
struct BirkhoffSum {
  double value = 0.0;
  int n = 0;
  Point base_point;
};

template <class Potential>
BirkhoffSum birkhoff_sum(const EndomorphismModel& model, Potential&& phi, const Point& x, int n) {
  BirkhoffSum s{0.0, n, x};
  Point y = x;
  for (int i = 0; i < n; ++i) {
    s.value += phi(y);
    if (i + 1 < n) y = model.apply(y);
  }
  return s;
}

/// f^n applied in the reduced phase space.
inline Point iterate(const EndomorphismModel& model, Point x, int n) {
  for (int i = 0; i < n; ++i) x = model.apply(x);
  return x;
}

/// |det(A^n - I)| for a toral factor.
inline std::int64_t toral_periodic_count(const IntMat2& a, int n) {
  return std::llabs(a.pow(n).minus_identity().det());
}

/// Predicted #Fix(f^n) as a product of factor counts.
inline double predicted_periodic_count(const EndomorphismModel& model, int n) {
  double count = 1.0;
  for (const auto& f : model.factors()) {
    if (const auto* c = std::get_if<CircleFactor>(&f)) count *= std::pow(static_cast<double>(c->k), n) - 1.0;
    if (const auto* t = std::get_if<ToralFactor>(&f)) {
      // |det(A^n - I)| = |lambda_u^n - 1| |lambda_s^n - 1|, evaluated in floating point
      // so that the guard itself cannot overflow
      count *= std::abs(std::pow(t->eig.unstable, n) - 1.0) * std::abs(std::pow(t->eig.stable, n) - 1.0);
    }
  }
  return count;
}

namespace detail {

// Multiple shooting: the orbit y_0, ..., y_{n-1} solves
//   G_i = F_eps(y_i) - y_{i+1} - k_i = 0   (indices mod n)
// with integer jumps k_i fixed by the linear orbit. Every equation lives at unit
// scale, so Newton keeps a basin of size O(1) instead of O(lambda_u^{-n}).
struct ShootingOrbit {
  std::vector<Eigen::Vector2d> y;
  std::vector<Eigen::Vector2d> k;
};

inline Eigen::VectorXd shooting_residual(const ToralFactor& t, const ShootingOrbit& o) {
  const int n = static_cast<int>(o.y.size());
  Eigen::VectorXd g(2 * n);
  for (int i = 0; i < n; ++i) {
    Vec f = t.lift(o.y[i][0], o.y[i][1]);
    const Eigen::Vector2d& next = o.y[(i + 1) % n];
    g[2 * i] = f[0] - next[0] - o.k[i][0];
    g[2 * i + 1] = f[1] - next[1] - o.k[i][1];
  }
  return g;
}

inline Eigen::MatrixXd shooting_jacobian(const ToralFactor& t, const ShootingOrbit& o) {
  const int n = static_cast<int>(o.y.size());
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  for (int i = 0; i < n; ++i) {
    j.block<2, 2>(2 * i, 2 * i) += t.jacobian(o.y[i][0], o.y[i][1]);
    int next = (i + 1) % n;
    j.block<2, 2>(2 * i, 2 * next) -= Eigen::Matrix2d::Identity();
  }
  return j;
}

/// d G / d eps: the perturbation term p(y_i).
inline Eigen::VectorXd shooting_eps_derivative(const ToralFactor& t, const ShootingOrbit& o) {
  ToralFactor unit = t;
  unit.eps = 1.0;
  ToralFactor lin = t;
  lin.eps = 0.0;
  const int n = static_cast<int>(o.y.size());
  Eigen::VectorXd d(2 * n);
  for (int i = 0; i < n; ++i) {
    Vec p = unit.lift(o.y[i][0], o.y[i][1]) - lin.lift(o.y[i][0], o.y[i][1]);
    d[2 * i] = p[0];
    d[2 * i + 1] = p[1];
  }
  return d;
}

inline void shooting_apply(ShootingOrbit& o, const Eigen::VectorXd& delta) {
  for (std::size_t i = 0; i < o.y.size(); ++i) {
    o.y[i][0] += delta[2 * i];
    o.y[i][1] += delta[2 * i + 1];
  }
}

inline bool shooting_newton(const ToralFactor& t, ShootingOrbit& o) {
  for (int iter = 0; iter < 40; ++iter) {
    Eigen::VectorXd g = shooting_residual(t, o);
    if (!g.allFinite()) return false;
    if (g.lpNorm<Eigen::Infinity>() < 1e-14) return true;
    Eigen::VectorXd step = shooting_jacobian(t, o).partialPivLu().solve(-g);
    shooting_apply(o, step);
    if (step.lpNorm<Eigen::Infinity>() < 1e-16) break;
  }
  return shooting_residual(t, o).lpNorm<Eigen::Infinity>() < 1e-12;
}

/// Continues a periodic point of the linear map along eps in [0, eps_target]; returns
/// the continued orbit y, f(y), ..., f^{n-1}(y) in the lift.
inline std::vector<Eigen::Vector2d> toral_continue_orbit(const ToralFactor& t, Eigen::Vector2d y, int n,
                                                         double eps_target) {
  ToralFactor lin{t.a, 0.0, t.eig};
  ShootingOrbit o;
  o.y.push_back(y);
  for (int i = 0; i < n; ++i) {
    Vec f = lin.lift(o.y[i][0], o.y[i][1]);
    Eigen::Vector2d image(f[0], f[1]);
    Eigen::Vector2d next = i + 1 < n ? Eigen::Vector2d(image.array() - image.array().floor()) : y;
    o.k.push_back((image - next).array().round().matrix());
    if ((image - next - o.k.back()).lpNorm<Eigen::Infinity>() > 1e-9)
      throw Error(ErrorKind::DomainError, "continuation seed is not periodic for the linear map");
    if (i + 1 < n) o.y.push_back(next);
  }
  if (eps_target == 0.0) return o.y;
  // polish the seed orbit at eps = 0 (the forward images carry rounding)
  if (!shooting_newton(lin, o))
    throw Error(ErrorKind::ContinuationFailure, "seed orbit does not close at eps=0 (n=" + std::to_string(n) + ")");

  int steps = static_cast<int>(std::ceil(std::abs(eps_target) / kHomotopyStep - 1e-12));
  double eps = 0.0;
  for (int s = 1; s <= steps; ++s) {
    double next = s == steps ? eps_target : eps_target * s / steps;
    // tangent predictor: dY/deps = -DG^{-1} dG/deps
    ToralFactor cur{t.a, eps, t.eig};
    Eigen::VectorXd tangent = shooting_jacobian(cur, o).partialPivLu().solve(-shooting_eps_derivative(cur, o));
    shooting_apply(o, (next - eps) * tangent);
    eps = next;
    if (!shooting_newton(ToralFactor{t.a, eps, t.eig}, o))
      throw Error(ErrorKind::ContinuationFailure, "Newton path stalled at eps=" + std::to_string(eps) +
                                                      " (n=" + std::to_string(n) + ")");
  }
  return o.y;
}

inline Eigen::Vector2d toral_continue(const ToralFactor& t, Eigen::Vector2d y, int n, double eps_target) {
  if (eps_target == 0.0) return y;
  return toral_continue_orbit(t, y, n, eps_target)[0];
}

/// Fix(A^n) on T^2 as exact fractions num / |det(A^n - I)|, with the permutation
/// induced by A.
struct ToralLattice {
  std::int64_t denom = 1;
  std::vector<std::array<std::int64_t, 2>> numerators;
  std::vector<std::size_t> image;
};

inline ToralLattice toral_linear_fixed_points(const IntMat2& a, int n) {
  IntMat2 b = a.pow(n).minus_identity();
  HermiteBasis h = hermite_basis(b);
  ToralLattice lat;
  lat.denom = std::llabs(b.det());
  auto reps = coset_representatives(b);
  lat.numerators.resize(reps.size());
  lat.image.resize(reps.size());
  const __int128 m = lat.denom;
  parallel_for(reps.size(), [&](std::size_t i) {
    lat.numerators[i] = inverse_image_numerators(b, reps[i]);
    const auto& v = lat.numerators[i];
    // A (v / m) mod 1 has numerators A v mod m; its coset is B (A v mod m) / m
    std::array<__int128, 2> av{a.a11 * static_cast<__int128>(v[0]) + a.a12 * static_cast<__int128>(v[1]),
                               a.a21 * static_cast<__int128>(v[0]) + a.a22 * static_cast<__int128>(v[1])};
    for (auto& z : av) z = ((z % m) + m) % m;
    __int128 w0 = b.a11 * av[0] + b.a12 * av[1];
    __int128 w1 = b.a21 * av[0] + b.a22 * av[1];
    lat.image[i] = coset_index(h, {static_cast<std::int64_t>(w0 / m), static_cast<std::int64_t>(w1 / m)});
  });
  return lat;
}

}  // namespace detail

/// Continues a periodic point of the eps = 0 toral map to the periodic point of the
/// model's toral factor at amplitude eps_target. The model must contain a toral factor;
/// other coordinates of the seed are returned unchanged.
inline Point newton_continuation(const EndomorphismModel& model, const Point& seed, int n, double eps_target) {
  if (n < 1) throw Error(ErrorKind::DomainError, "period must be >= 1");
  if (std::abs(eps_target) > kMaxPerturbation)
    throw Error(ErrorKind::InvalidModel, "eps_target outside the admissible range");
  Point out = seed;
  int off = 0;
  bool found = false;
  for (const auto& f : model.factors()) {
    if (const auto* t = std::get_if<ToralFactor>(&f)) {
      Eigen::Vector2d y = detail::toral_continue(*t, Eigen::Vector2d(seed[off], seed[off + 1]), n, eps_target);
      out[off] = wrap_unit(y[0]);
      out[off + 1] = wrap_unit(y[1]);
      found = true;
    }
    off += factor_dim(f);
  }
  if (!found) throw Error(ErrorKind::DomainError, "model has no toral factor to continue");
  return out;
}

/// Complete set of solutions of f^n(y) = y in the basic set, with the action of f.
inline PeriodicOrbitSet fixed_points(const EndomorphismModel& model, int n, double budget = kAtomBudget) {
  if (n < 1) throw Error(ErrorKind::DomainError, "period must be >= 1");
  double predicted = predicted_periodic_count(model, n);
  if (predicted > budget)
    throw Error(ErrorKind::BudgetExceeded, "#Fix(f^" + std::to_string(n) + ") ~ " + std::to_string(predicted) +
                                               " exceeds the atom budget");
  PeriodicOrbitSet out;
  out.n = n;
  out.method = model.is_linear() ? OrbitMethod::ExactLattice : OrbitMethod::NewtonContinuation;

  // per-factor coordinate lists and image permutations, combined as a Cartesian product
  struct FactorList {
    std::vector<std::vector<double>> coords;
    std::vector<std::size_t> next;
  };
  std::vector<FactorList> lists;
  for (const auto& f : model.factors()) {
    FactorList l;
    if (const auto* att = std::get_if<AttractorFactor>(&f)) {
      l.coords.push_back({att->fixed_point()});
      l.next.push_back(0);
    } else if (const auto* c = std::get_if<CircleFactor>(&f)) {
      std::int64_t m = 1;
      for (int i = 0; i < n; ++i) m *= c->k;
      m -= 1;
      for (std::int64_t j = 0; j < m; ++j) {
        l.coords.push_back({static_cast<double>(j) / static_cast<double>(m)});
        l.next.push_back(static_cast<std::size_t>((c->k * j) % m));
      }
    } else {
      const auto& t = std::get<ToralFactor>(f);
      detail::ToralLattice lat = detail::toral_linear_fixed_points(t.a, n);
      const double m = static_cast<double>(lat.denom);
      l.coords.resize(lat.numerators.size());
      for (std::size_t i = 0; i < lat.numerators.size(); ++i)
        l.coords[i] = {static_cast<double>(lat.numerators[i][0]) / m, static_cast<double>(lat.numerators[i][1]) / m};
      if (t.eps != 0.0) {
        // one continuation per orbit of A; the shooting orbit carries the other points
        auto cycles = permutation_cycles(lat.image);
        parallel_for(cycles.size(), [&](std::size_t ci) {
          const auto& cyc = cycles[ci];
          Eigen::Vector2d seed(l.coords[cyc[0]][0], l.coords[cyc[0]][1]);
          auto orbit = detail::toral_continue_orbit(t, seed, n, t.eps);
          for (std::size_t j = 0; j < cyc.size(); ++j)
            l.coords[cyc[j]] = {wrap_unit(orbit[j][0]), wrap_unit(orbit[j][1])};
        }, 16);
      }
      l.next = std::move(lat.image);
    }
    lists.push_back(std::move(l));
  }

  std::size_t total = 1;
  for (const auto& l : lists) total *= l.coords.size();
  std::vector<Point> points(total);
  std::vector<std::size_t> image(total);
  const int dim = model.phase_dim();
  parallel_for(total, [&](std::size_t idx) {
    Point p(dim);
    // last factor varies fastest
    std::size_t rem = idx, stride = 1, img = 0;
    int off = dim;
    for (std::size_t f = lists.size(); f-- > 0;) {
      std::size_t size = lists[f].coords.size();
      std::size_t pick = rem % size;
      rem /= size;
      const auto& c = lists[f].coords[pick];
      off -= static_cast<int>(c.size());
      for (std::size_t i = 0; i < c.size(); ++i) p[off + static_cast<int>(i)] = c[i];
      img += lists[f].next[pick] * stride;
      stride *= size;
    }
    points[idx] = p;
    image[idx] = img;
  });

  std::vector<std::size_t> order(total);
  for (std::size_t i = 0; i < total; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return points[a] < points[b]; });
  std::vector<std::size_t> rank(total);
  for (std::size_t i = 0; i < total; ++i) rank[order[i]] = i;
  out.points.resize(total);
  out.image.resize(total);
  for (std::size_t i = 0; i < total; ++i) {
    out.points[i] = points[order[i]];
    out.image[i] = rank[image[order[i]]];
  }

  // rounding in the reduced iteration grows like the expansion rate, which #Fix tracks
  const double tol = 1e-9 + 1e-14 * predicted;
  parallel_for(out.points.size(), [&](std::size_t i) {
    const Point& p = out.points[i];
    if (torus_distance(model.apply(p), out.points[out.image[i]]) >= 1e-9 ||
        torus_distance(iterate(model, p, n), p) >= tol)
      throw Error(ErrorKind::ContinuationFailure, "point " + p.str() + " fails the periodicity check");
  });
  return out;
}

}  // namespace hypendo
