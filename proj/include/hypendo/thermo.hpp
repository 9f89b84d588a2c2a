#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "hypendo/error.hpp"
#include "hypendo/models.hpp"
#include "hypendo/orbits.hpp"
#include "hypendo/parallel.hpp"
#include "hypendo/potential.hpp"

namespace hypendo {

/// log(sum_i exp(v_i)) without overflow; -inf for an empty range.
template <class Range>
double log_sum_exp(const Range& values) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double v : values) hi = std::max(hi, v);
  if (!std::isfinite(hi)) return hi;
  double s = 0.0;
  for (double v : values) s += std::exp(v - hi);
  return hi + std::log(s);
}

/// Fix(f^n) together with S_n Phi^s at each point, computed once per n.
struct PeriodicData {
  PeriodicOrbitSet orbits;
  std::vector<double> stable_sums;
};

class PeriodicCache {
public:
  explicit PeriodicCache(const EndomorphismModel& model, int horizon = kDefaultHorizon)
      : model_(&model), horizon_(horizon) {}

  const EndomorphismModel& model() const { return *model_; }
  int horizon() const { return horizon_; }

  const PeriodicData& get(int n, bool with_stable) {
    auto it = data_.find(n);
    if (it == data_.end()) it = data_.emplace(n, PeriodicData{fixed_points(*model_, n), {}}).first;
    PeriodicData& pd = it->second;
    if (with_stable && pd.stable_sums.size() != pd.orbits.points.size()) {
      // S_n Phi^s is constant along each periodic orbit
      pd.stable_sums.resize(pd.orbits.points.size());
      auto cycles = permutation_cycles(pd.orbits.image);
      parallel_for(cycles.size(), [&](std::size_t c) {
        double v = stable_birkhoff_sum(*model_, pd.orbits.points[cycles[c][0]], n, horizon_);
        for (std::size_t i : cycles[c]) pd.stable_sums[i] = v;
      }, 16);
    }
    return pd;
  }

  /// S_n phi at every point of Fix(f^n).
  std::vector<double> birkhoff_sums(const Potential& phi, int n) {
    const PeriodicData& pd = get(n, phi.uses_stable());
    std::vector<double> out(pd.orbits.points.size(), n * phi.constant);
    if (phi.uses_stable())
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += phi.stable_coeff * pd.stable_sums[i];
    return out;
  }

private:
  const EndomorphismModel* model_;
  int horizon_;
  std::map<int, PeriodicData> data_;
};

/// P(f, phi, n) = sum over Fix(f^n) of exp(S_n phi).
struct PartitionSum {
  int n = 0;
  double value = 0.0;
  double log_value = 0.0;
  std::size_t count = 0;
};

inline PartitionSum partition_sum(PeriodicCache& cache, const Potential& phi, int n) {
  std::vector<double> sums = cache.birkhoff_sums(phi, n);
  PartitionSum ps;
  ps.n = n;
  ps.count = sums.size();
  ps.log_value = log_sum_exp(sums);
  ps.value = std::exp(ps.log_value);
  return ps;
}

inline PartitionSum partition_sum(const EndomorphismModel& model, const Potential& phi, int n) {
  PeriodicCache cache(model, phi.horizon);
  return partition_sum(cache, phi, n);
}

struct PressureEstimate {
  double value = 0.0;
  std::vector<std::pair<int, double>> per_n;  ///< (n, log P(f, phi, n) / n)
  std::vector<double> log_values;             ///< log P(f, phi, n) for n = 1..n_max
  std::string method = "slope_extrapolation";
  double uncertainty = 0.0;
};

/// Successive log-differences of the partition sums: log P(n_max) - log P(n_max - 1).
/// The two-sided bound exp(nP)/c <= P(f, phi, n) <= c exp(nP) makes the difference
/// free of the O(1/n) bias that log P(n)/n carries.
inline PressureEstimate pressure(PeriodicCache& cache, const Potential& phi, int n_max) {
  if (n_max < 3) throw Error(ErrorKind::DomainError, "pressure needs n_max >= 3");
  PressureEstimate est;
  for (int n = 1; n <= n_max; ++n) {
    double lv = partition_sum(cache, phi, n).log_value;
    est.log_values.push_back(lv);
    est.per_n.emplace_back(n, lv / n);
  }
  const auto& L = est.log_values;
  double last = L[n_max - 1] - L[n_max - 2];
  double prev = L[n_max - 2] - L[n_max - 3];
  est.value = last;
  est.uncertainty = std::abs(last - prev);
  return est;
}

inline PressureEstimate pressure(const EndomorphismModel& model, const Potential& phi, int n_max) {
  PeriodicCache cache(model, phi.horizon);
  return pressure(cache, phi, n_max);
}

struct BowenRootOptions {
  double t_lo = 0.0;
  double t_hi = 4.0;
  double t_tolerance = 1e-3;
  double residual_tolerance = 0.02;
  double max_uncertainty = 0.02;
};

/// Root t* of g(t) = P(t Phi^s) - log d.
struct BowenRoot {
  double t_star = 0.0;
  double t_lo = 0.0;
  double t_hi = 0.0;
  double residual = 0.0;   ///< |g(t_star)|
  double noise_band = 0.0; ///< 2 x estimator uncertainty at t_star
  int degree = 0;
  int n_max = 0;
  std::vector<std::pair<int, double>> per_n;
  struct Evaluation {
    double t, g, uncertainty;
  };
  std::vector<Evaluation> evaluations;  ///< in evaluation order
};

/// Bisection for the zero of t -> P(t Phi^s - log d). g is strictly decreasing since
/// Phi^s < 0 on the basic set. An endpoint sign only counts as wrong when it is wrong
/// by more than twice the estimator uncertainty; a root pinned inside the noise band
/// at an endpoint is reported at that endpoint.
inline BowenRoot bowen_root(PeriodicCache& cache, int n_max, int d, const BowenRootOptions& opt = {}) {
  if (n_max < 3) throw Error(ErrorKind::DomainError, "bowen_root needs n_max >= 3");
  if (d < 1) throw Error(ErrorKind::DomainError, "degree must be positive");
  const double log_d = std::log(static_cast<double>(d));

  std::vector<std::vector<double>> sums(3);
  for (int j = 0; j < 3; ++j) sums[j] = cache.get(n_max - 2 + j, true).stable_sums;

  BowenRoot root;
  root.degree = d;
  root.n_max = n_max;
  std::vector<double> scratch;
  auto g = [&](double t) {
    double L[3];
    for (int j = 0; j < 3; ++j) {
      scratch.resize(sums[j].size());
      for (std::size_t i = 0; i < sums[j].size(); ++i) scratch[i] = t * sums[j][i];
      L[j] = log_sum_exp(scratch);
    }
    double p = L[2] - L[1];
    double u = std::abs(p - (L[1] - L[0]));
    root.evaluations.push_back({t, p - log_d, u});
    return root.evaluations.back();
  };

  auto at_lo = g(opt.t_lo);
  auto at_hi = g(opt.t_hi);
  if (at_lo.g < -2.0 * at_lo.uncertainty || at_hi.g > 2.0 * at_hi.uncertainty)
    throw Error(ErrorKind::NoSignChange, "g(t) = P(t Phi^s) - log d has no sign change on [" +
                                             std::to_string(opt.t_lo) + ", " + std::to_string(opt.t_hi) +
                                             "]: g(lo)=" + std::to_string(at_lo.g) +
                                             " g(hi)=" + std::to_string(at_hi.g));
  double lo = opt.t_lo, hi = opt.t_hi;
  if (at_lo.g <= 0.0) {
    hi = lo;
  } else if (at_hi.g >= 0.0) {
    lo = hi;
  } else {
    while (hi - lo > opt.t_tolerance) {
      double mid = 0.5 * (lo + hi);
      if (g(mid).g > 0.0)
        lo = mid;
      else
        hi = mid;
    }
  }
  root.t_lo = lo;
  root.t_hi = hi;
  root.t_star = 0.5 * (lo + hi);
  auto final_eval = g(root.t_star);
  root.residual = std::abs(final_eval.g);
  root.noise_band = 2.0 * final_eval.uncertainty;
  if (final_eval.uncertainty >= opt.max_uncertainty)
    throw Error(ErrorKind::NotConverged, "pressure estimator uncertainty " + std::to_string(final_eval.uncertainty) +
                                             " too large at n_max=" + std::to_string(n_max));
  if (root.residual >= opt.residual_tolerance)
    throw Error(ErrorKind::NotConverged, "residual " + std::to_string(root.residual) + " above tolerance");
  root.per_n = pressure(cache, Potential::stable(root.t_star), n_max).per_n;
  return root;
}

inline BowenRoot bowen_root(const EndomorphismModel& model, int n_max, int d, const BowenRootOptions& opt = {}) {
  PeriodicCache cache(model);
  return bowen_root(cache, n_max, d, opt);
}

}  // namespace hypendo
