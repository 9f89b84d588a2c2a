#pragma once

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numbers>
#include <string>

#include <Eigen/Dense>

namespace hypendo {

inline constexpr int kMaxDim = 3;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Small fixed-capacity Eigen types; phase spaces never exceed three dimensions.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

/// Reduce a real number to [0,1).
inline double wrap_unit(double v) {
  double r = v - std::floor(v);
  // floor can leave r == 1.0 for tiny negative inputs
  return r >= 1.0 ? 0.0 : r;
}

/// Signed minimal-image difference on the circle, in [-0.5, 0.5).
inline double wrap_delta(double d) {
  return d - std::floor(d + 0.5);
}

/// A point of a product of circles/intervals, each coordinate in [0,1).
class Point {
public:
  Point() = default;
  Point(std::initializer_list<double> values) : dim_(static_cast<int>(values.size())) {
    assert(dim_ <= kMaxDim);
    std::copy(values.begin(), values.end(), c_.begin());
  }
  explicit Point(int dim) : dim_(dim) { assert(dim_ <= kMaxDim); }

  static Point from_vec(const Vec& v) {
    Point p(static_cast<int>(v.size()));
    for (int i = 0; i < p.dim_; ++i) p.c_[i] = v[i];
    return p;
  }

  int dim() const { return dim_; }
  double operator[](int i) const { return c_[i]; }
  double& operator[](int i) { return c_[i]; }

  Vec vec() const {
    Vec v(dim_);
    for (int i = 0; i < dim_; ++i) v[i] = c_[i];
    return v;
  }

  bool operator==(const Point& o) const {
    if (dim_ != o.dim_) return false;
    for (int i = 0; i < dim_; ++i)
      if (c_[i] != o.c_[i]) return false;
    return true;
  }

  /// Lexicographic order on coordinates, used for deterministic sorting.
  bool operator<(const Point& o) const {
    for (int i = 0; i < std::min(dim_, o.dim_); ++i) {
      if (c_[i] < o.c_[i]) return true;
      if (c_[i] > o.c_[i]) return false;
    }
    return dim_ < o.dim_;
  }

  std::string str() const {
    std::string s = "(";
    for (int i = 0; i < dim_; ++i) {
      if (i) s += ", ";
      s += std::to_string(c_[i]);
    }
    return s + ")";
  }

private:
  std::array<double, kMaxDim> c_{};
  int dim_ = 0;
};

/// Minimal-image displacement b - a, per coordinate in [-0.5, 0.5).
inline Vec torus_delta(const Point& a, const Point& b) {
  Vec d(a.dim());
  for (int i = 0; i < a.dim(); ++i) d[i] = wrap_delta(b[i] - a[i]);
  return d;
}

/// Flat-torus metric: per-coordinate min(|a-b|, 1-|a-b|), combined Euclidean-style.
inline double torus_distance(const Point& a, const Point& b) {
  assert(a.dim() == b.dim());
  double s = 0.0;
  for (int i = 0; i < a.dim(); ++i) {
    double d = std::abs(b[i] - a[i]);
    d = std::min(d, 1.0 - d);
    s += d * d;
  }
  return std::sqrt(s);
}

/// Angle in [0, pi/2] between two lines spanned by u and v.
inline double line_angle(const Vec& u, const Vec& v) {
  double c = std::abs(u.dot(v)) / (u.norm() * v.norm());
  return std::acos(std::min(1.0, c));
}

}  // namespace hypendo
