#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "hypendo/error.hpp"

namespace hypendo {

/// 2x2 integer matrix [[a11, a12], [a21, a22]].
struct IntMat2 {
  std::int64_t a11 = 0, a12 = 0, a21 = 0, a22 = 0;

  std::int64_t det() const { return a11 * a22 - a12 * a21; }
  std::int64_t trace() const { return a11 + a22; }
  IntMat2 adjugate() const { return {a22, -a12, -a21, a11}; }
  IntMat2 minus_identity() const { return {a11 - 1, a12, a21, a22 - 1}; }

  IntMat2 operator*(const IntMat2& o) const {
    auto mul = [](std::int64_t x, std::int64_t y, std::int64_t u, std::int64_t v) {
      __int128 r = static_cast<__int128>(x) * y + static_cast<__int128>(u) * v;
      if (r > std::numeric_limits<std::int64_t>::max() / 4 ||
          r < std::numeric_limits<std::int64_t>::min() / 4)
        throw Error(ErrorKind::BudgetExceeded, "integer matrix power overflows 64 bits");
      return static_cast<std::int64_t>(r);
    };
    return {mul(a11, o.a11, a12, o.a21), mul(a11, o.a12, a12, o.a22),
            mul(a21, o.a11, a22, o.a21), mul(a21, o.a12, a22, o.a22)};
  }

  IntMat2 pow(int n) const {
    IntMat2 r{1, 0, 0, 1};
    for (int i = 0; i < n; ++i) r = r * *this;
    return r;
  }

  bool operator==(const IntMat2&) const = default;

  std::string str() const {
    return "[[" + std::to_string(a11) + "," + std::to_string(a12) + "],[" + std::to_string(a21) +
           "," + std::to_string(a22) + "]]";
  }
};

struct EigenPair2 {
  double stable = 0.0;    ///< eigenvalue with |lambda| < 1
  double unstable = 0.0;  ///< eigenvalue with |lambda| > 1
};

/// Real eigenvalues of a 2x2 integer matrix, split into contracting and expanding.
/// Throws InvalidModel unless the matrix is hyperbolic with real spectrum.
inline EigenPair2 hyperbolic_eigenvalues(const IntMat2& a) {
  double tr = static_cast<double>(a.trace());
  double det = static_cast<double>(a.det());
  double disc = tr * tr - 4.0 * det;
  if (disc <= 0.0)
    throw Error(ErrorKind::InvalidModel, "matrix " + a.str() + " has no real eigenvalue split");
  double root = std::sqrt(disc);
  // stable form of the quadratic roots
  double big = 0.5 * (tr + (tr >= 0 ? root : -root));
  double small = det / big;
  if (std::abs(small) > std::abs(big)) std::swap(small, big);
  if (!(std::abs(small) < 1.0 && std::abs(big) > 1.0))
    throw Error(ErrorKind::InvalidModel, "matrix " + a.str() + " is not hyperbolic");
  return {small, big};
}

inline std::int64_t floor_mod(std::int64_t a, std::int64_t m) {
  std::int64_t r = a % m;
  return r < 0 ? r + m : r;
}

inline std::int64_t floor_div(std::int64_t a, std::int64_t m) {
  return (a - floor_mod(a, m)) / m;
}

/// Extended Euclid: returns g = gcd(a, b) >= 0 and s, t with s*a + t*b = g.
inline std::array<std::int64_t, 3> ext_gcd(std::int64_t a, std::int64_t b) {
  std::int64_t old_r = a, r = b, old_s = 1, s = 0, old_t = 0, t = 1;
  while (r != 0) {
    std::int64_t q = old_r / r;
    std::int64_t tmp = old_r - q * r;
    old_r = r;
    r = tmp;
    tmp = old_s - q * s;
    old_s = s;
    s = tmp;
    tmp = old_t - q * t;
    old_t = t;
    t = tmp;
  }
  if (old_r < 0) return {-old_r, -old_s, -old_t};
  return {old_r, old_s, old_t};
}

/// Lower-triangular Hermite basis [[h11, 0], [h21, h22]] of the column lattice B Z^2.
struct HermiteBasis {
  std::int64_t h11 = 0, h21 = 0, h22 = 0;
};

inline HermiteBasis hermite_basis(const IntMat2& b) {
  if (b.det() == 0) throw Error(ErrorKind::InvalidModel, "singular lattice matrix " + b.str());
  // column operations: bring the first row to (g, 0)
  auto [g, s, t] = ext_gcd(b.a11, b.a12);
  std::int64_t c1_top = g, c1_bot = s * b.a21 + t * b.a22;
  std::int64_t c2_bot = (-b.a12 / g) * b.a21 + (b.a11 / g) * b.a22;
  HermiteBasis h;
  h.h11 = c1_top;
  h.h22 = std::llabs(c2_bot);
  h.h21 = floor_mod(c1_bot, h.h22);
  return h;
}

/// Coset representatives of Z^2 / B Z^2; exactly |det B| vectors.
inline std::vector<std::array<std::int64_t, 2>> coset_representatives(const IntMat2& b) {
  HermiteBasis h = hermite_basis(b);
  std::vector<std::array<std::int64_t, 2>> reps;
  reps.reserve(static_cast<std::size_t>(h.h11 * h.h22));
  for (std::int64_t i = 0; i < h.h11; ++i)
    for (std::int64_t j = 0; j < h.h22; ++j) reps.push_back({i, j});
  return reps;
}

/// Position of the coset w + B Z^2 in the order of coset_representatives(B).
inline std::size_t coset_index(const HermiteBasis& h, const std::array<std::int64_t, 2>& w) {
  std::int64_t q = floor_div(w[0], h.h11);
  std::int64_t i = w[0] - q * h.h11;
  std::int64_t j = floor_mod(w[1] - q * h.h21, h.h22);
  return static_cast<std::size_t>(i * h.h22 + j);
}

/// Exact numerators of B^{-1} v mod 1, as integers in [0, |det B|).
inline std::array<std::int64_t, 2> inverse_image_numerators(const IntMat2& b,
                                                             const std::array<std::int64_t, 2>& v) {
  std::int64_t d = b.det();
  std::int64_t sign = d < 0 ? -1 : 1;
  std::int64_t m = std::llabs(d);
  IntMat2 adj = b.adjugate();
  __int128 x = static_cast<__int128>(adj.a11) * v[0] + static_cast<__int128>(adj.a12) * v[1];
  __int128 y = static_cast<__int128>(adj.a21) * v[0] + static_cast<__int128>(adj.a22) * v[1];
  auto md = [m](__int128 z) {
    __int128 r = z % m;
    return static_cast<std::int64_t>(r < 0 ? r + m : r);
  };
  return {md(sign * x), md(sign * y)};
}

}  // namespace hypendo
