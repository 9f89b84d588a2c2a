#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "hypendo/error.hpp"
#include "hypendo/int_matrix.hpp"
#include "hypendo/point.hpp"

namespace hypendo {

/// Largest perturbation amplitude accepted for perturbed toral factors.
inline constexpr double kMaxPerturbation = 0.05;

/// z -> z^2 + c near its real attracting fixed point p_c (one interval coordinate).
struct AttractorFactor {
  double c = 0.1;

  double fixed_point() const { return 0.5 * (1.0 - std::sqrt(1.0 - 4.0 * c)); }
};

/// theta -> k * theta mod 1 on the circle.
struct CircleFactor {
  int k = 2;
};

/// w -> A w + eps * p(w) mod 1 on T^2, with the trigonometric perturbation
///   p1 = sin(2 pi (w1 + 5 w2)),  p2 = cos(2 pi w2) + sin^2(pi (w1 - 2 w2)).
struct ToralFactor {
  IntMat2 a;
  double eps = 0.0;
  EigenPair2 eig;

  Vec lift(double w1, double w2) const {
    Vec out(2);
    out[0] = static_cast<double>(a.a11) * w1 + static_cast<double>(a.a12) * w2;
    out[1] = static_cast<double>(a.a21) * w1 + static_cast<double>(a.a22) * w2;
    if (eps != 0.0) {
      double s = std::sin(std::numbers::pi * (w1 - 2.0 * w2));
      out[0] += eps * std::sin(kTwoPi * (w1 + 5.0 * w2));
      out[1] += eps * std::cos(kTwoPi * w2) + eps * s * s;
    }
    return out;
  }

  Eigen::Matrix2d jacobian(double w1, double w2) const {
    Eigen::Matrix2d j;
    j << static_cast<double>(a.a11), static_cast<double>(a.a12), static_cast<double>(a.a21),
        static_cast<double>(a.a22);
    if (eps != 0.0) {
      const double pi = std::numbers::pi;
      double c1 = std::cos(kTwoPi * (w1 + 5.0 * w2));
      double s2u = std::sin(kTwoPi * (w1 - 2.0 * w2));
      j(0, 0) += 2.0 * pi * eps * c1;
      j(0, 1) += 10.0 * pi * eps * c1;
      j(1, 0) += pi * eps * s2u;
      j(1, 1) += -2.0 * pi * eps * std::sin(kTwoPi * w2) - 2.0 * pi * eps * s2u;
    }
    return j;
  }
};

using Factor = std::variant<AttractorFactor, CircleFactor, ToralFactor>;

inline int factor_dim(const Factor& f) {
  return std::holds_alternative<ToralFactor>(f) ? 2 : 1;
}

enum class ModelKind { ProductAttractorCircle, ToralLinear, ToralPerturbed, ProductPowerToral, CirclePower };

inline std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::ProductAttractorCircle: return "product_attractor_circle";
    case ModelKind::ToralLinear: return "toral_linear";
    case ModelKind::ToralPerturbed: return "toral_perturbed";
    case ModelKind::ProductPowerToral: return "product_power_toral";
    case ModelKind::CirclePower: return "circle_power";
  }
  return "unknown";
}

/// An endomorphism of a product of circles, tori and an attracting interval,
/// restricted to a neighbourhood of its basic set. Immutable after construction.
class EndomorphismModel {
public:
  static EndomorphismModel toral_linear(const IntMat2& a) {
    return EndomorphismModel(ModelKind::ToralLinear, {make_toral(a, 0.0)});
  }

  static EndomorphismModel toral_perturbed(const IntMat2& a, double eps) {
    return EndomorphismModel(ModelKind::ToralPerturbed, {make_toral(a, eps)});
  }

  static EndomorphismModel product_power_toral(int k, const IntMat2& a, double eps) {
    if (k < 2) throw Error(ErrorKind::InvalidModel, "circle power k must be >= 2");
    return EndomorphismModel(ModelKind::ProductPowerToral, {CircleFactor{k}, make_toral(a, eps)});
  }

  static EndomorphismModel product_attractor_circle(double c) {
    if (!(c > 0.0 && c < 0.2))
      throw Error(ErrorKind::InvalidModel, "attractor parameter c must lie in (0, 0.2)");
    return EndomorphismModel(ModelKind::ProductAttractorCircle, {AttractorFactor{c}, CircleFactor{2}});
  }

  static EndomorphismModel circle_power(int k) {
    if (k < 2) throw Error(ErrorKind::InvalidModel, "circle power k must be >= 2");
    return EndomorphismModel(ModelKind::CirclePower, {CircleFactor{k}});
  }

  ModelKind kind() const { return kind_; }
  const std::vector<Factor>& factors() const { return factors_; }
  int phase_dim() const { return dim_; }

  /// Number of preimages inside the basic set (product of factor degrees).
  int degree() const { return degree_; }

  /// Dimension of the stable bundle E^s.
  int stable_dim() const { return stable_dim_; }

  /// True when every factor is linear, so stable data is available in closed form.
  bool is_linear() const { return linear_; }

  /// Image of x, periodic coordinates reduced mod 1.
  Point apply(const Point& x) const {
    Vec y = apply_lift(x.vec());
    Point out(dim_);
    int off = 0;
    for (const auto& f : factors_) {
      int fd = factor_dim(f);
      bool periodic = !std::holds_alternative<AttractorFactor>(f);
      for (int i = 0; i < fd; ++i) out[off + i] = periodic ? wrap_unit(y[off + i]) : y[off + i];
      off += fd;
    }
    return out;
  }

  /// The map on the universal cover (no reduction).
  Vec apply_lift(const Vec& x) const {
    Vec y(dim_);
    int off = 0;
    for (const auto& f : factors_) {
      std::visit(
          [&](const auto& fac) {
            using T = std::decay_t<decltype(fac)>;
            if constexpr (std::is_same_v<T, AttractorFactor>) {
              y[off] = x[off] * x[off] + fac.c;
            } else if constexpr (std::is_same_v<T, CircleFactor>) {
              y[off] = fac.k * x[off];
            } else {
              Vec w = fac.lift(x[off], x[off + 1]);
              y[off] = w[0];
              y[off + 1] = w[1];
            }
          },
          f);
      off += factor_dim(f);
    }
    return y;
  }

  /// Jacobian of the lifted map at x (block diagonal over factors).
  Mat differential(const Point& x) const { return differential(x.vec()); }

  Mat differential(const Vec& x) const {
    Mat d = Mat::Zero(dim_, dim_);
    int off = 0;
    for (const auto& f : factors_) {
      std::visit(
          [&](const auto& fac) {
            using T = std::decay_t<decltype(fac)>;
            if constexpr (std::is_same_v<T, AttractorFactor>) {
              d(off, off) = 2.0 * x[off];
            } else if constexpr (std::is_same_v<T, CircleFactor>) {
              d(off, off) = fac.k;
            } else {
              d.block(off, off, 2, 2) = fac.jacobian(x[off], x[off + 1]);
            }
          },
          f);
      off += factor_dim(f);
    }
    return d;
  }

  /// All preimages of x inside the basic set's neighbourhood; exactly degree() points.
  std::vector<Point> preimages(const Point& x) const {
    std::vector<std::vector<double>> partial{{}};
    int off = 0;
    for (const auto& f : factors_) {
      std::vector<std::vector<double>> factor_pre = factor_preimages(f, x, off);
      std::vector<std::vector<double>> next;
      next.reserve(partial.size() * factor_pre.size());
      for (const auto& head : partial)
        for (const auto& tail : factor_pre) {
          auto v = head;
          v.insert(v.end(), tail.begin(), tail.end());
          next.push_back(std::move(v));
        }
      partial = std::move(next);
      off += factor_dim(f);
    }
    std::vector<Point> out;
    out.reserve(partial.size());
    for (const auto& v : partial) {
      Point p(dim_);
      for (int i = 0; i < dim_; ++i) p[i] = v[i];
      out.push_back(p);
    }
    return out;
  }

  /// Uniform sample from the basic set (attractor coordinates pinned to p_c).
  template <class Rng>
  Point sample_basic_set(Rng& rng) const {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Point p(dim_);
    int off = 0;
    for (const auto& f : factors_) {
      if (const auto* att = std::get_if<AttractorFactor>(&f)) {
        p[off] = att->fixed_point();
      } else {
        for (int i = 0; i < factor_dim(f); ++i) p[off + i] = u(rng);
      }
      off += factor_dim(f);
    }
    return p;
  }

  std::string describe() const {
    std::string s = to_string(kind_);
    for (const auto& f : factors_) {
      std::visit(
          [&](const auto& fac) {
            using T = std::decay_t<decltype(fac)>;
            if constexpr (std::is_same_v<T, AttractorFactor>) {
              s += " c=" + std::to_string(fac.c);
            } else if constexpr (std::is_same_v<T, CircleFactor>) {
              s += " k=" + std::to_string(fac.k);
            } else {
              s += " A=" + fac.a.str() + " eps=" + std::to_string(fac.eps);
            }
          },
          f);
    }
    return s;
  }

private:
  EndomorphismModel(ModelKind kind, std::vector<Factor> factors) : kind_(kind), factors_(std::move(factors)) {
    dim_ = 0;
    degree_ = 1;
    stable_dim_ = 0;
    linear_ = true;
    for (const auto& f : factors_) {
      dim_ += factor_dim(f);
      if (const auto* c = std::get_if<CircleFactor>(&f)) degree_ *= c->k;
      if (std::holds_alternative<AttractorFactor>(f)) {
        ++stable_dim_;
        linear_ = false;
      }
      if (const auto* t = std::get_if<ToralFactor>(&f)) {
        degree_ *= static_cast<int>(std::llabs(t->a.det()));
        ++stable_dim_;
        if (t->eps != 0.0) linear_ = false;
      }
    }
  }

  static ToralFactor make_toral(const IntMat2& a, double eps) {
    if (std::llabs(a.det()) < 2)
      throw Error(ErrorKind::InvalidModel, "toral matrix " + a.str() + " must have |det| >= 2");
    ToralFactor t{a, eps, hyperbolic_eigenvalues(a)};
    if (!(std::abs(eps) <= kMaxPerturbation))
      throw Error(ErrorKind::InvalidModel,
                  "perturbation eps=" + std::to_string(eps) + " outside the admissible range [0, 0.05]");
    if (eps != 0.0) check_cones(t);
    return t;
  }

  /// Sampled cone-field check: det Df keeps the sign of det A (no folds), and in A's
  /// eigen-coordinates the cones |s| <= |u| and |u| <= |s| are mapped strictly inside
  /// themselves, with expansion, by Df and Df^{-1} respectively.
  static void check_cones(const ToralFactor& t) {
    Eigen::Matrix2d basis;
    auto eigvec = [&](double lambda) {
      Eigen::Vector2d v;
      if (t.a.a12 != 0)
        v << static_cast<double>(t.a.a12), lambda - static_cast<double>(t.a.a11);
      else
        v << lambda - static_cast<double>(t.a.a22), static_cast<double>(t.a.a21);
      return v.normalized();
    };
    basis.col(0) = eigvec(t.eig.unstable);
    basis.col(1) = eigvec(t.eig.stable);
    Eigen::Matrix2d basis_inv = basis.inverse();
    constexpr int grid = 128;
    for (int i = 0; i < grid; ++i)
      for (int j = 0; j < grid; ++j) {
        Eigen::Matrix2d jac = t.jacobian((i + 0.5) / grid, (j + 0.5) / grid);
        if (!(jac.determinant() * static_cast<double>(t.a.det()) > 0.0))
          throw Error(ErrorKind::InvalidModel,
                      "Df is singular somewhere for eps=" + std::to_string(t.eps) + " with A=" + t.a.str());
        Eigen::Matrix2d m = basis_inv * jac * basis;
        Eigen::Matrix2d minv = m.inverse();
        auto maps_into = [](const Eigen::Matrix2d& op, int lead) {
          int other = 1 - lead;
          double sign = 0.0;
          for (double s : {1.0, -1.0}) {
            Eigen::Vector2d r;
            r[lead] = 1.0;
            r[other] = s;
            Eigen::Vector2d img = op * r;
            if (!(std::abs(img[other]) < std::abs(img[lead]) && std::abs(img[lead]) > 1.0)) return false;
            double sg = img[lead] > 0 ? 1.0 : -1.0;
            if (sign != 0.0 && sg != sign) return false;
            sign = sg;
          }
          return true;
        };
        if (!maps_into(m, 0) || !maps_into(minv, 1))
          throw Error(ErrorKind::InvalidModel,
                      "cone condition fails for eps=" + std::to_string(t.eps) + " with A=" + t.a.str());
      }
  }

  std::vector<std::vector<double>> factor_preimages(const Factor& f, const Point& x, int off) const {
    std::vector<std::vector<double>> out;
    std::visit(
        [&](const auto& fac) {
          using T = std::decay_t<decltype(fac)>;
          if constexpr (std::is_same_v<T, AttractorFactor>) {
            double z = x[off];
            if (z < fac.c)
              throw Error(ErrorKind::DomainError,
                          "z=" + std::to_string(z) + " has no real preimage near the attracting point");
            out.push_back({std::sqrt(z - fac.c)});
          } else if constexpr (std::is_same_v<T, CircleFactor>) {
            for (int j = 0; j < fac.k; ++j) out.push_back({wrap_unit((x[off] + j) / fac.k)});
          } else {
            toral_preimages(fac, x[off], x[off + 1], out);
          }
        },
        f);
    return out;
  }

  static void toral_preimages(const ToralFactor& t, double x1, double x2, std::vector<std::vector<double>>& out) {
    const IntMat2& a = t.a;
    double d = static_cast<double>(a.det());
    double m = std::abs(d);
    IntMat2 adj = a.adjugate();
    double base1 = (static_cast<double>(adj.a11) * x1 + static_cast<double>(adj.a12) * x2) / d;
    double base2 = (static_cast<double>(adj.a21) * x1 + static_cast<double>(adj.a22) * x2) / d;
    for (const auto& k : coset_representatives(a)) {
      auto num = inverse_image_numerators(a, k);
      Vec y(2);
      y[0] = base1 + static_cast<double>(num[0]) / m;
      y[1] = base2 + static_cast<double>(num[1]) / m;
      if (t.eps != 0.0) {
        // target in the lift: the linear image of the seed is x plus an integer vector
        Vec lin(2);
        lin[0] = static_cast<double>(a.a11) * y[0] + static_cast<double>(a.a12) * y[1];
        lin[1] = static_cast<double>(a.a21) * y[0] + static_cast<double>(a.a22) * y[1];
        Vec target(2);
        target[0] = x1 + std::round(lin[0] - x1);
        target[1] = x2 + std::round(lin[1] - x2);
        bool converged = false;
        for (int it = 0; it < 100; ++it) {
          Vec r = t.lift(y[0], y[1]) - target;
          if (r.lpNorm<Eigen::Infinity>() < 1e-14) {
            converged = true;
            break;
          }
          Eigen::Vector2d step = t.jacobian(y[0], y[1]).partialPivLu().solve(Eigen::Vector2d(r[0], r[1]));
          y[0] -= step[0];
          y[1] -= step[1];
          if (!std::isfinite(y[0]) || !std::isfinite(y[1])) break;
        }
        if (!converged) {
          Vec r = t.lift(y[0], y[1]) - target;
          if (!(r.lpNorm<Eigen::Infinity>() < 1e-12))
            throw Error(ErrorKind::NewtonDivergence,
                        "preimage refinement did not converge (eps=" + std::to_string(t.eps) + ")");
        }
      }
      out.push_back({wrap_unit(y[0]), wrap_unit(y[1])});
    }
  }

  ModelKind kind_;
  std::vector<Factor> factors_;
  int dim_ = 0;
  int degree_ = 1;
  int stable_dim_ = 0;
  bool linear_ = true;
};

}  // namespace hypendo
