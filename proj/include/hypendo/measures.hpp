#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "hypendo/error.hpp"
#include "hypendo/models.hpp"
#include "hypendo/orbits.hpp"
#include "hypendo/parallel.hpp"
#include "hypendo/point.hpp"
#include "hypendo/potential.hpp"
#include "hypendo/stable_structure.hpp"
#include "hypendo/thermo.hpp"

namespace hypendo {

/// Weighted periodic points: weight exp(S_n phi(x)) / P(f, phi, n) on each x in Fix(f^n).
struct AtomicMeasure {
  std::vector<Point> atoms;
  std::vector<double> weights;
  std::vector<std::size_t> image;  ///< index of f(atom), a permutation of the atoms
  int n = 0;
  std::string potential_tag;
};

inline AtomicMeasure equilibrium_atoms(PeriodicCache& cache, const Potential& phi, int n) {
  std::vector<double> sums = cache.birkhoff_sums(phi, n);
  const PeriodicOrbitSet& orbits = cache.get(n, false).orbits;
  double log_z = log_sum_exp(sums);
  AtomicMeasure mu;
  mu.atoms = orbits.points;
  mu.image = orbits.image;
  mu.n = n;
  mu.potential_tag = phi.tag();
  mu.weights.resize(sums.size());
  for (std::size_t i = 0; i < sums.size(); ++i) mu.weights[i] = std::exp(sums[i] - log_z);
  return mu;
}

inline AtomicMeasure equilibrium_atoms(const EndomorphismModel& model, const Potential& phi, int n) {
  PeriodicCache cache(model, phi.horizon);
  return equilibrium_atoms(cache, phi, n);
}

/// mu(B(center, rho)) for the closed ball in the torus metric.
inline double ball_mass(const AtomicMeasure& mu, const Point& center, double rho) {
  if (!(rho > 0.0)) throw Error(ErrorKind::DomainError, "ball radius must be positive");
  double m = 0.0;
  for (std::size_t i = 0; i < mu.atoms.size(); ++i)
    if (torus_distance(mu.atoms[i], center) <= rho) m += mu.weights[i];
  return m;
}

// ---------------------------------------------------------------------------
// Bowen balls

namespace detail {

inline std::vector<Point> forward_orbit(const EndomorphismModel& model, const Point& z, int n) {
  std::vector<Point> orbit{z};
  for (int i = 0; i < n; ++i) orbit.push_back(model.apply(orbit.back()));
  return orbit;
}

/// Atom a lies in B_n(orbit[0], eps) = {d(f^i a, f^i z) < eps, i = 0..n}.
inline bool in_bowen_ball(const AtomicMeasure& mu, std::size_t a, const std::vector<Point>& orbit, int n,
                          double eps) {
  for (int i = 0; i <= n; ++i) {
    if (torus_distance(mu.atoms[a], orbit[i]) >= eps) return false;
    a = mu.image[a];
  }
  return true;
}

/// Whether y lies in f^n(B_n(z, eps)), where orbit = (z, f z, ..., f^n z): tracks y back
/// along the orbit, taking at each step the preimage nearest to the orbit point. The
/// eps-ball around an orbit point holds at most one preimage when eps is below half the
/// preimage separation, so the tracked branch is the only candidate.
inline bool in_forward_image(const EndomorphismModel& model, Point y, const std::vector<Point>& orbit, int n,
                             double eps) {
  if (torus_distance(y, orbit[n]) >= eps) return false;
  for (int j = n - 1; j >= 0; --j) {
    auto pre = model.preimages(y);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : pre) {
      double d = torus_distance(p, orbit[j]);
      if (d < best) {
        best = d;
        y = p;
      }
    }
    if (best >= eps) return false;
  }
  return true;
}

}  // namespace detail

struct BowenBallSample {
  Point z;
  double bowen_mass = 0.0;      ///< mu(B_{n+k}(z, eps))
  double bowen_predicted = 0.0; ///< |Df_s^{n+k}(z)|^delta / d^{n+k}
  double cylinder_mass = 0.0;   ///< mu(f^n(B_n(z, eps)) cap B_k(f^n z, eps))
  double cylinder_predicted = 0.0;
  double bowen_ratio() const { return bowen_mass / bowen_predicted; }
  double cylinder_ratio() const { return cylinder_mass / cylinder_predicted; }
};

struct BowenBallReport {
  int n = 0, k = 0;
  double eps = 0.0;
  double delta = 0.0;
  int atom_order = 0;
  std::vector<BowenBallSample> samples;
  int skipped = 0;  ///< samples whose ball held no atom
  double min_ratio = 0.0, max_ratio = 0.0;  ///< over both ball types
};

/// Compares atom masses of Bowen balls B_{n+k}(z, eps) and of the cross sections
/// f^n(B_n(z, eps)) cap B_k(f^n z, eps) with the predictions |Df_s^{n+k}(z)|^delta / d^{n+k}
/// and d^n |Df_s^{n+k}(z)|^delta / d^{n+k}. Centers z are drawn uniformly from the basic set.
template <class Rng>
BowenBallReport bowen_ball_check(const AtomicMeasure& mu, const EndomorphismModel& model, int n, int k, double eps,
                                 int sample_size, double delta, Rng& rng) {
  if (n < 0 || k < 0 || n + k < 1) throw Error(ErrorKind::DomainError, "Bowen ball order n + k must be >= 1");
  if (mu.n < n + k + 4)
    throw Error(ErrorKind::DomainError, "atoms of order " + std::to_string(mu.n) + " are too coarse for order " +
                                            std::to_string(n + k) + " balls (need >= n+k+4)");
  if (!(eps > 0.0 && eps < 0.5)) throw Error(ErrorKind::DomainError, "eps must lie in (0, 0.5)");
  const int m = n + k;
  const double d = model.degree();
  BowenBallReport rep;
  rep.n = n;
  rep.k = k;
  rep.eps = eps;
  rep.delta = delta;
  rep.atom_order = mu.n;
  std::vector<Point> centers;
  for (int s = 0; s < sample_size; ++s) centers.push_back(model.sample_basic_set(rng));

  std::vector<BowenBallSample> out(centers.size());
  parallel_for(centers.size(), [&](std::size_t s) {
    BowenBallSample b;
    b.z = centers[s];
    auto orbit = detail::forward_orbit(model, b.z, m);
    std::vector<Point> tail(orbit.begin() + n, orbit.end());
    double stable = std::exp(delta * stable_birkhoff_sum(model, b.z, m));
    b.bowen_predicted = stable / std::pow(d, m);
    b.cylinder_predicted = std::pow(d, n) * b.bowen_predicted;
    for (std::size_t a = 0; a < mu.atoms.size(); ++a) {
      if (torus_distance(mu.atoms[a], orbit[0]) < eps && detail::in_bowen_ball(mu, a, orbit, m, eps))
        b.bowen_mass += mu.weights[a];
      if (torus_distance(mu.atoms[a], orbit[n]) < eps && detail::in_bowen_ball(mu, a, tail, k, eps) &&
          detail::in_forward_image(model, mu.atoms[a], orbit, n, eps))
        b.cylinder_mass += mu.weights[a];
    }
    out[s] = b;
  }, 1);
  rep.min_ratio = std::numeric_limits<double>::infinity();
  rep.max_ratio = 0.0;
  for (const auto& b : out) {
    if (b.bowen_mass == 0.0 || b.cylinder_mass == 0.0) {
      ++rep.skipped;
      continue;
    }
    for (double r : {b.bowen_ratio(), b.cylinder_ratio()}) {
      rep.min_ratio = std::min(rep.min_ratio, r);
      rep.max_ratio = std::max(rep.max_ratio, r);
    }
    rep.samples.push_back(b);
  }
  if (rep.samples.empty()) throw Error(ErrorKind::EmptyBall, "every sampled Bowen ball is empty at this atom order");
  return rep;
}

// ---------------------------------------------------------------------------
// Stable slices

/// Atoms near a local stable segment through `center`, projected to arc length.
struct SliceMeasure {
  Point center;
  StableDirection direction;
  double r = 0.0;
  double w = 0.0;
  std::vector<double> positions;  ///< sorted arc positions in [-r, r]
  std::vector<double> weights;    ///< renormalized, aligned with positions
  std::vector<double> cumulative; ///< cumulative[i] = sum of weights[0..i)

  std::size_t size() const { return positions.size(); }

  /// Mass of the arc interval [y - rho, y + rho].
  double mass(double y, double rho) const {
    auto lo = std::lower_bound(positions.begin(), positions.end(), y - rho);
    auto hi = std::upper_bound(positions.begin(), positions.end(), y + rho);
    return cumulative[hi - positions.begin()] - cumulative[lo - positions.begin()];
  }
};

namespace detail {

/// Polyline through the origin (in displacement coordinates around the center) following
/// the stable field, vertices spaced `step` apart, from arc -r to r.
inline std::vector<Vec> stable_polyline(const EndomorphismModel& model, const Point& center, double r, double step,
                                        int horizon) {
  const int half = static_cast<int>(std::ceil(r / step - 1e-9));
  std::vector<Vec> forward{Vec::Zero(model.phase_dim())};
  std::vector<Vec> backward{Vec::Zero(model.phase_dim())};
  Vec v0 = stable_direction(model, center, horizon).vector;
  for (double sign : {1.0, -1.0}) {
    auto& path = sign > 0 ? forward : backward;
    Vec prev_dir = sign * v0;
    for (int i = 0; i < half; ++i) {
      Vec pos = path.back();
      // the stable field is periodic in the torus coordinates, so the point needs no wrapping
      Point at = Point::from_vec(center.vec() + pos);
      Vec dir = stable_direction(model, at, horizon).vector;
      if (dir.dot(prev_dir) < 0.0) dir = -dir;
      path.push_back(pos + step * dir);
      prev_dir = dir;
    }
  }
  std::vector<Vec> line(backward.rbegin(), backward.rend());
  line.insert(line.end(), forward.begin() + 1, forward.end());
  return line;
}

}  // namespace detail

/// Conditional measure on the local stable segment of half-length r through `center`,
/// realized as the atoms within distance w of the segment. Linear models use the straight
/// eigenline; otherwise the segment is Euler-integrated along the stable field.
inline SliceMeasure slice_conditional(const AtomicMeasure& mu, const EndomorphismModel& model, const Point& center,
                                      double r, double w, int horizon = kDefaultHorizon) {
  if (!(r > 0.0 && r < 0.5)) throw Error(ErrorKind::DomainError, "slice half-length must lie in (0, 0.5)");
  if (!(w > 0.0 && w < r)) throw Error(ErrorKind::DomainError, "tube width must lie in (0, r)");
  SliceMeasure sl;
  sl.center = center;
  sl.direction = stable_direction(model, center, horizon);
  sl.r = r;
  sl.w = w;
  std::vector<std::pair<double, double>> hits;

  if (model.is_linear()) {
    const Vec& v = sl.direction.vector;
    const double reach = std::hypot(r, w);
    for (std::size_t i = 0; i < mu.atoms.size(); ++i) {
      if (torus_distance(center, mu.atoms[i]) > reach) continue;
      Vec d = torus_delta(center, mu.atoms[i]);
      double s = d.dot(v);
      if (std::abs(s) > r) continue;
      if ((d - s * v).norm() < w) hits.emplace_back(s, mu.weights[i]);
    }
  } else {
    const double step = r / 200.0;
    std::vector<Vec> line = detail::stable_polyline(model, center, r, step, horizon);
    const int mid = static_cast<int>(line.size() / 2);
    const Vec& v0 = sl.direction.vector;
    for (std::size_t i = 0; i < mu.atoms.size(); ++i) {
      if (torus_distance(center, mu.atoms[i]) > r + w) continue;
      Vec d = torus_delta(center, mu.atoms[i]);
      // the polyline bends slowly, so the nearest segment sits near the straight-line guess
      int guess = mid + static_cast<int>(std::floor(d.dot(v0) / step));
      double best = std::numeric_limits<double>::infinity(), arc = 0.0;
      for (int j = std::max(0, guess - 10); j <= std::min<int>(static_cast<int>(line.size()) - 2, guess + 10); ++j) {
        Vec seg = line[j + 1] - line[j];
        double len2 = seg.squaredNorm();
        double t = std::clamp((d - line[j]).dot(seg) / len2, 0.0, 1.0);
        double dist = (d - line[j] - t * seg).norm();
        if (dist < best) {
          best = dist;
          arc = (j - mid + t) * step;
        }
      }
      if (best < w && std::abs(arc) <= r) hits.emplace_back(arc, mu.weights[i]);
    }
  }
  if (hits.empty()) throw Error(ErrorKind::EmptySlice, "no atom within " + std::to_string(w) + " of the slice at " + center.str());
  std::sort(hits.begin(), hits.end());
  double total = 0.0;
  for (const auto& h : hits) total += h.second;
  sl.positions.reserve(hits.size());
  sl.weights.reserve(hits.size());
  sl.cumulative.assign(1, 0.0);
  for (const auto& h : hits) {
    sl.positions.push_back(h.first);
    sl.weights.push_back(h.second / total);
    sl.cumulative.push_back(sl.cumulative.back() + h.second / total);
  }
  return sl;
}

/// Kolmogorov-Smirnov distance between the slice measure and uniform measure on [-r, r].
inline double ks_uniform(const SliceMeasure& sl) {
  double worst = 0.0;
  for (std::size_t i = 0; i < sl.size(); ++i) {
    double u = (sl.positions[i] + sl.r) / (2.0 * sl.r);
    worst = std::max({worst, std::abs(sl.cumulative[i + 1] - u), std::abs(sl.cumulative[i] - u)});
  }
  return worst;
}

/// Kolmogorov-Smirnov distance between two slice measures.
inline double ks_distance(const SliceMeasure& a, const SliceMeasure& b) {
  std::vector<double> grid = a.positions;
  grid.insert(grid.end(), b.positions.begin(), b.positions.end());
  auto cdf = [](const SliceMeasure& s, double x) {
    return s.cumulative[std::upper_bound(s.positions.begin(), s.positions.end(), x) - s.positions.begin()];
  };
  double worst = 0.0;
  for (double x : grid) worst = std::max(worst, std::abs(cdf(a, x) - cdf(b, x)));
  return worst;
}

// ---------------------------------------------------------------------------
// Pointwise dimension

struct DimensionFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::vector<double> rho_grid;  ///< strictly decreasing
  std::vector<double> masses;
  double r2 = 0.0;
  double spread_constant = 1.0;  ///< max / min of mass / rho^slope
};

/// r/4 * 2^{-j}, j = 0..levels-1.
inline std::vector<double> dyadic_grid(double r, int levels = 7) {
  std::vector<double> g;
  for (int j = 0; j < levels; ++j) g.push_back(r / 4.0 * std::ldexp(1.0, -j));
  return g;
}

/// Least-squares slope of log(mass) against log(rho). Zero masses are dropped.
inline DimensionFit fit_dimension(const std::vector<double>& rho_grid, const std::vector<double>& masses) {
  if (rho_grid.size() != masses.size()) throw Error(ErrorKind::DomainError, "grid and mass lengths differ");
  for (std::size_t i = 1; i < rho_grid.size(); ++i)
    if (!(rho_grid[i] < rho_grid[i - 1])) throw Error(ErrorKind::DomainError, "rho grid must be strictly decreasing");
  DimensionFit fit;
  fit.rho_grid = rho_grid;
  fit.masses = masses;
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < masses.size(); ++i)
    if (masses[i] > 0.0) {
      xs.push_back(std::log(rho_grid[i]));
      ys.push_back(std::log(masses[i]));
    }
  if (xs.size() < 2) throw Error(ErrorKind::InsufficientAtoms, "fewer than two radii carry mass");
  const double k = static_cast<double>(xs.size());
  double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / k;
  double my = std::accumulate(ys.begin(), ys.end(), 0.0) / k;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double e = ys[i] - fit.intercept - fit.slope * xs[i];
    sse += e * e;
  }
  fit.r2 = syy > 0.0 ? std::clamp(1.0 - sse / syy, 0.0, 1.0) : 1.0;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double c = std::exp(ys[i] - fit.slope * xs[i]);
    lo = std::min(lo, c);
    hi = std::max(hi, c);
  }
  fit.spread_constant = hi / lo;
  return fit;
}

inline constexpr std::size_t kMinSliceAtoms = 50;

inline DimensionFit pointwise_dimension_fit(const SliceMeasure& sl, double y, const std::vector<double>& rho_grid) {
  if (sl.size() < kMinSliceAtoms)
    throw Error(ErrorKind::InsufficientAtoms,
                "slice holds " + std::to_string(sl.size()) + " atoms (< " + std::to_string(kMinSliceAtoms) + ")");
  std::vector<double> masses;
  for (double rho : rho_grid) masses.push_back(sl.mass(y, rho));
  return fit_dimension(rho_grid, masses);
}

// ---------------------------------------------------------------------------
// Geometric probabilities

struct SliceOptions {
  int slices = 20;
  int points = 10;
  double r = 0.2;
  double w = 0.01;                ///< default r / 20
  std::vector<double> rho_grid = dyadic_grid(0.2);
  int horizon = kDefaultHorizon;
};

/// Mass tables over sampled slices and y-points; shared by the geometric, absolute-continuity
/// and maximal-dimension checks.
struct SliceSurvey {
  std::vector<Point> centers;
  std::vector<std::size_t> slice_sizes;
  std::vector<double> y_points;                  ///< per (slice, point), row-major
  std::vector<std::vector<double>> masses;       ///< per (slice, point), over rho_grid
  std::vector<double> slopes;                    ///< per (slice, point)
  std::vector<double> rho_grid;
  int skipped_slices = 0;

  double median_slope() const {
    if (slopes.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::vector<double> s = slopes;
    std::nth_element(s.begin(), s.begin() + s.size() / 2, s.end());
    double hi = s[s.size() / 2];
    if (s.size() % 2 == 1) return hi;
    double lo = *std::max_element(s.begin(), s.begin() + s.size() / 2);
    return 0.5 * (lo + hi);
  }
};

template <class Rng>
SliceSurvey slice_survey(const AtomicMeasure& mu, const EndomorphismModel& model, const SliceOptions& opt, Rng& rng) {
  if (opt.rho_grid.empty()) throw Error(ErrorKind::DomainError, "empty rho grid");
  const double rho_max = *std::max_element(opt.rho_grid.begin(), opt.rho_grid.end());
  if (!(rho_max < opt.r)) throw Error(ErrorKind::DomainError, "largest radius must be below the slice half-length");
  SliceSurvey sv;
  sv.rho_grid = opt.rho_grid;
  for (int s = 0; s < opt.slices; ++s) sv.centers.push_back(model.sample_basic_set(rng));
  std::vector<std::uint64_t> seeds;
  for (int s = 0; s < opt.slices; ++s) seeds.push_back(rng());

  std::vector<SliceMeasure> slices(sv.centers.size());
  std::vector<char> ok(sv.centers.size(), 0);
  parallel_for(sv.centers.size(), [&](std::size_t s) {
    try {
      slices[s] = slice_conditional(mu, model, sv.centers[s], opt.r, opt.w, opt.horizon);
      ok[s] = slices[s].size() >= kMinSliceAtoms;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::EmptySlice) throw;
    }
  }, 1);

  for (std::size_t s = 0; s < slices.size(); ++s) {
    sv.slice_sizes.push_back(slices[s].size());
    if (!ok[s]) {
      ++sv.skipped_slices;
      continue;
    }
    const SliceMeasure& sl = slices[s];
    // y drawn from the slice measure, away from the ends so every ball stays inside
    std::vector<double> eligible(sl.size(), 0.0);
    for (std::size_t i = 0; i < sl.size(); ++i)
      if (std::abs(sl.positions[i]) <= sl.r - rho_max) eligible[i] = sl.weights[i];
    if (std::accumulate(eligible.begin(), eligible.end(), 0.0) <= 0.0) {
      ++sv.skipped_slices;
      continue;
    }
    std::mt19937_64 local(seeds[s]);
    std::discrete_distribution<std::size_t> pick(eligible.begin(), eligible.end());
    for (int p = 0; p < opt.points; ++p) {
      double y = sl.positions[pick(local)];
      DimensionFit fit = pointwise_dimension_fit(sl, y, opt.rho_grid);
      sv.y_points.push_back(y);
      sv.masses.push_back(fit.masses);
      sv.slopes.push_back(fit.slope);
    }
  }
  if (sv.slopes.empty()) throw Error(ErrorKind::InsufficientAtoms, "no slice holds enough atoms for a dimension fit");
  return sv;
}

struct GeometricVerdict {
  double exponent = 0.0;
  double C_hat = 1.0;
  double threshold = 10.0;
  bool pass = false;
  double median_slope = 0.0;
  SliceSurvey survey;
};

/// C_hat = max / min of mass(B(y, rho)) / rho^delta over every slice, point and radius.
inline GeometricVerdict geometric_verdict(SliceSurvey survey, double delta, double threshold) {
  GeometricVerdict v;
  v.exponent = delta;
  v.threshold = threshold;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& row : survey.masses)
    for (std::size_t j = 0; j < row.size(); ++j) {
      double c = row[j] / std::pow(survey.rho_grid[j], delta);
      lo = std::min(lo, c);
      hi = std::max(hi, c);
    }
  v.C_hat = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  v.pass = v.C_hat < threshold;
  v.median_slope = survey.median_slope();
  v.survey = std::move(survey);
  return v;
}

template <class Rng>
GeometricVerdict geometric_probability_check(const AtomicMeasure& mu, const EndomorphismModel& model, double delta,
                                             const SliceOptions& opt, double threshold, Rng& rng) {
  return geometric_verdict(slice_survey(mu, model, opt, rng), delta, threshold);
}

// ---------------------------------------------------------------------------
// Component comparison

struct ComponentComparison {
  int k = 0, m = 0;
  double eps = 0.0;
  Point a, y1, y2;
  double mass_1 = 0.0;           ///< mu(A_1), A_1 = f^{-k} A cap B_k(y1, eps)
  double mass_2 = 0.0;           ///< mu(A_2), A_2 = f^{-m} A cap B_m(y2, eps)
  double empirical = 0.0;        ///< mass_1 / mass_2
  double predicted = 0.0;        ///< e^{S_k phi(y1) - S_m phi(y2)} e^{(m-k) P(phi)}
  double quotient = 0.0;         ///< empirical / predicted
  double degree_quotient = 0.0;  ///< empirical / d^{m-k}
};

/// Picks a point a and two backward branches ending in y1 (k steps back) and y2 (m steps
/// back) that leave a through different preimages; the Bowen balls B_k(y1, eps) and
/// B_m(y2, eps) are then disjoint (checked) and
///   A = f^k(B_k(y1, eps)) cap f^m(B_m(y2, eps))
/// contains a. Atom masses of A_1 and A_2 are compared with the predicted factor.
template <class Rng>
ComponentComparison component_comparison_check(const AtomicMeasure& mu, const EndomorphismModel& model,
                                               const Potential& phi, double pressure_value, int k, int m, double eps,
                                               Rng& rng, int max_tries = 200) {
  if (k < 1 || m < 1) throw Error(ErrorKind::DomainError, "component orders must be >= 1");
  if (mu.n < std::max(k, m) + 4)
    throw Error(ErrorKind::DomainError, "atom order " + std::to_string(mu.n) + " too coarse (need >= max(k,m)+4)");
  if (model.degree() < 2) throw Error(ErrorKind::DomainError, "component comparison needs d >= 2");
  const int d = model.degree();
  for (int attempt = 0; attempt < max_tries; ++attempt) {
    ComponentComparison cc;
    cc.k = k;
    cc.m = m;
    cc.eps = eps;
    cc.a = model.sample_basic_set(rng);
    std::uniform_int_distribution<int> branch(0, d - 1);
    auto walk_back = [&](int steps, int first) {
      Point y = cc.a;
      for (int j = 0; j < steps; ++j) y = model.preimages(y)[j == 0 ? first : branch(rng)];
      return y;
    };
    int b1 = branch(rng);
    int b2 = (b1 + 1 + std::uniform_int_distribution<int>(0, d - 2)(rng)) % d;
    cc.y1 = walk_back(k, b1);
    cc.y2 = walk_back(m, b2);
    auto orbit1 = detail::forward_orbit(model, cc.y1, k);
    auto orbit2 = detail::forward_orbit(model, cc.y2, m);
    bool disjoint = false;
    for (int i = 0; i <= std::min(k, m); ++i) disjoint = disjoint || torus_distance(orbit1[i], orbit2[i]) >= 2.0 * eps;
    if (!disjoint) continue;

    auto side_mass = [&](const std::vector<Point>& own, int own_n, const std::vector<Point>& other, int other_n) {
      double mass = 0.0;
      for (std::size_t a = 0; a < mu.atoms.size(); ++a) {
        if (torus_distance(mu.atoms[a], own[0]) >= eps || !detail::in_bowen_ball(mu, a, own, own_n, eps)) continue;
        std::size_t img = a;
        for (int i = 0; i < own_n; ++i) img = mu.image[img];
        if (detail::in_forward_image(model, mu.atoms[img], other, other_n, eps)) mass += mu.weights[a];
      }
      return mass;
    };
    cc.mass_1 = side_mass(orbit1, k, orbit2, m);
    cc.mass_2 = side_mass(orbit2, m, orbit1, k);
    if (cc.mass_1 == 0.0 || cc.mass_2 == 0.0) continue;
    cc.empirical = cc.mass_1 / cc.mass_2;
    double log_pred = phi.birkhoff(model, cc.y1, k) - phi.birkhoff(model, cc.y2, m) + (m - k) * pressure_value;
    cc.predicted = std::exp(log_pred);
    cc.quotient = cc.empirical / cc.predicted;
    cc.degree_quotient = cc.empirical / std::pow(static_cast<double>(d), m - k);
    return cc;
  }
  throw Error(ErrorKind::EmptyComponent, "no sampled configuration gave a target set with atom mass on both sides");
}

// ---------------------------------------------------------------------------
// Preimage counts, absolute continuity, maximal stable dimension

struct ConstantToOneReport {
  int samples = 0;
  int degree = 0;          ///< common preimage count (0 if counts differ)
  int min_count = 0, max_count = 0;
  bool pass = false;
  bool has_additive_claim = false;   ///< the model is a circle-power x torus product
  int additive_claim = 0;            ///< k + |det A| for those products
  bool additive_claim_consistent = true;
};

template <class Rng>
ConstantToOneReport constant_to_one_check(const EndomorphismModel& model, int samples, Rng& rng) {
  ConstantToOneReport rep;
  rep.samples = samples;
  rep.min_count = std::numeric_limits<int>::max();
  for (int s = 0; s < samples; ++s) {
    Point x = model.sample_basic_set(rng);
    auto pre = model.preimages(x);
    int c = 0;
    for (const auto& y : pre)
      if (torus_distance(model.apply(y), x) < 1e-10) ++c;
    rep.min_count = std::min(rep.min_count, c);
    rep.max_count = std::max(rep.max_count, c);
  }
  rep.pass = samples > 0 && rep.min_count == rep.max_count;
  rep.degree = rep.pass ? rep.min_count : 0;
  if (model.kind() == ModelKind::ProductPowerToral) {
    int k = std::get<CircleFactor>(model.factors()[0]).k;
    int det = static_cast<int>(std::llabs(std::get<ToralFactor>(model.factors()[1]).a.det()));
    rep.has_additive_claim = true;
    rep.additive_claim = k + det;
    rep.additive_claim_consistent = rep.additive_claim == rep.degree;
  }
  return rep;
}

struct ACDiagnostic {
  double delta_s = 0.0;
  int stable_dim_E = 0;
  bool is_repellor_verdict = false;
  bool slice_ac_verdict = false;
  double median_slope = 0.0;
};

inline ACDiagnostic ac_diagnostic(double delta, int stable_dim, double median_slope) {
  ACDiagnostic ac;
  ac.delta_s = delta;
  ac.stable_dim_E = stable_dim;
  ac.median_slope = median_slope;
  ac.is_repellor_verdict = std::abs(delta - stable_dim) < 0.05;
  ac.slice_ac_verdict = std::abs(median_slope - stable_dim) < 0.1;
  return ac;
}

struct AbsoluteContinuityOptions {
  int n = 8;
  int n_max = 8;
  SliceOptions slices;
};

/// delta^s from Bowen's equation, then slice fits of mu_s = mu_{delta^s Phi^s}.
template <class Rng>
ACDiagnostic absolute_continuity_diagnostic(PeriodicCache& cache, const AbsoluteContinuityOptions& opt, Rng& rng) {
  const EndomorphismModel& model = cache.model();
  BowenRoot root = bowen_root(cache, opt.n_max, model.degree());
  AtomicMeasure mu = equilibrium_atoms(cache, Potential::stable(root.t_star), opt.n);
  SliceSurvey sv = slice_survey(mu, model, opt.slices, rng);
  return ac_diagnostic(root.t_star, model.stable_dim(), sv.median_slope());
}

struct MaxStableDimReport {
  double delta_s = 0.0;
  double slope_mu_s = 0.0;  ///< median slice slope of mu_s
  struct Alternative {
    std::string potential;
    double slope = 0.0;
    bool within_bound = false;  ///< slope <= delta^s + 0.05
  };
  std::vector<Alternative> alternatives;
  bool mu_s_attains = false;  ///< |slope_mu_s - delta^s| < 0.1
  bool pass = false;
};

inline MaxStableDimReport max_stable_dim_check(PeriodicCache& cache, int n, int n_max, const std::vector<Potential>& alternatives,
                                        const SliceOptions& opt, std::uint64_t seed) {
  const EndomorphismModel& model = cache.model();
  MaxStableDimReport rep;
  rep.delta_s = bowen_root(cache, n_max, model.degree()).t_star;
  // the same slice centers and y-sampling stream for every measure
  auto survey = [&](const Potential& phi) {
    std::mt19937_64 rng(seed);
    return slice_survey(equilibrium_atoms(cache, phi, n), model, opt, rng).median_slope();
  };
  rep.slope_mu_s = survey(Potential::stable(rep.delta_s));
  rep.mu_s_attains = std::abs(rep.slope_mu_s - rep.delta_s) < 0.1;
  rep.pass = rep.mu_s_attains;
  for (const auto& phi : alternatives) {
    MaxStableDimReport::Alternative alt;
    alt.potential = phi.tag();
    alt.slope = survey(phi);
    alt.within_bound = alt.slope <= rep.delta_s + 0.05;
    rep.pass = rep.pass && alt.within_bound;
    rep.alternatives.push_back(alt);
  }
  return rep;
}

}  // namespace hypendo
