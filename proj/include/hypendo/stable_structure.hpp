#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "hypendo/error.hpp"
#include "hypendo/models.hpp"
#include "hypendo/parallel.hpp"
#include "hypendo/point.hpp"

namespace hypendo {

inline constexpr int kDefaultHorizon = 25;

struct StableDirection {
  Point at;
  Vec vector;   ///< unit vector spanning E^s_x
  int horizon = 0;
};

namespace detail {

inline void orient(Vec& v) {
  for (int i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > 1e-8) {
      if (v[i] < 0) v = -v;
      return;
    }
  }
}

inline Eigen::Vector2d toral_stable_eigenvector(const ToralFactor& t) {
  Eigen::Vector2d v;
  double ls = t.eig.stable;
  if (t.a.a12 != 0)
    v << static_cast<double>(t.a.a12), ls - static_cast<double>(t.a.a11);
  else
    v << ls - static_cast<double>(t.a.a22), static_cast<double>(t.a.a21);
  return v.normalized();
}

/// E^s of a perturbed toral factor: dominant left singular vector of the normalized
/// product Df(w)^{-1} ... Df(f^{h-1} w)^{-1}, i.e. the most-contracted right singular
/// vector of Df^h(w).
inline Eigen::Vector2d toral_stable_svd(const ToralFactor& t, double w1, double w2, int horizon) {
  Eigen::Matrix2d q = Eigen::Matrix2d::Identity();
  for (int j = 0; j < horizon; ++j) {
    q = q * t.jacobian(w1, w2).inverse();
    q /= q.cwiseAbs().maxCoeff();
    Vec next = t.lift(w1, w2);
    w1 = wrap_unit(next[0]);
    w2 = wrap_unit(next[1]);
  }
  Eigen::JacobiSVD<Eigen::Matrix2d> svd(q, Eigen::ComputeFullU);
  const auto& s = svd.singularValues();
  if (s[0] - s[1] < 1e-8 * s[0])
    throw Error(ErrorKind::DegenerateSingularValues,
                "singular values of Df^" + std::to_string(horizon) + " do not separate");
  return svd.matrixU().col(0);
}

}  // namespace detail

/// E^s_x. The models are products and only one factor contracts, so E^s lies in that
/// factor: the interval coordinate for the attractor, the contracting eigenvector for a
/// linear torus, and the most-contracted singular direction of Df^horizon otherwise.
inline StableDirection stable_direction(const EndomorphismModel& model, const Point& x,
                                        int horizon = kDefaultHorizon) {
  if (horizon < 1) throw Error(ErrorKind::DomainError, "horizon must be >= 1");
  if (model.stable_dim() != 1)
    throw Error(ErrorKind::NoStableDirection, "model " + model.describe() + " has no one-dimensional stable bundle");
  Vec v = Vec::Zero(model.phase_dim());
  int off = 0;
  for (const auto& f : model.factors()) {
    if (std::holds_alternative<AttractorFactor>(f)) {
      v[off] = 1.0;
    } else if (const auto* t = std::get_if<ToralFactor>(&f)) {
      Eigen::Vector2d w = t->eps == 0.0 ? detail::toral_stable_eigenvector(*t)
                                        : detail::toral_stable_svd(*t, x[off], x[off + 1], horizon);
      v[off] = w[0];
      v[off + 1] = w[1];
    }
    off += factor_dim(f);
  }
  v.normalize();
  detail::orient(v);
  return {x, v, horizon};
}

/// Phi^s(x) = log |Df_s(x)|.
inline double stable_log_derivative(const EndomorphismModel& model, const Point& x, int horizon = kDefaultHorizon) {
  StableDirection e = stable_direction(model, x, horizon);
  return std::log((model.differential(x) * e.vector).norm());
}

/// S_n Phi^s(x) = log |Df^n_s(x)| via the chain rule on the invariant line: the
/// stable direction at f^n x is pulled back step by step, which keeps the vector
/// on E^s (errors contract backward).
inline double stable_birkhoff_sum(const EndomorphismModel& model, const Point& x, int n,
                                  int horizon = kDefaultHorizon) {
  if (n <= 0) return 0.0;
  std::vector<Point> orbit(static_cast<std::size_t>(n) + 1);
  orbit[0] = x;
  for (int i = 0; i < n; ++i) orbit[i + 1] = model.apply(orbit[i]);
  Vec u = stable_direction(model, orbit[n], horizon).vector;
  double sum = 0.0;
  for (int i = n - 1; i >= 0; --i) {
    Vec w = model.differential(orbit[i]).partialPivLu().solve(u);
    double len = w.norm();
    sum -= std::log(len);
    u = w / len;
  }
  return sum;
}

/// Backward branches (x, x_{-1}, ..., x_{-depth}) of a point, level by level.
struct PrehistoryTree {
  struct Node {
    Point point;
    std::size_t parent = 0;  ///< index in the previous level
  };
  Point root;
  int depth = 0;
  std::vector<std::vector<Node>> levels;  ///< levels[j] holds the j-th preimages

  const std::vector<Node>& leaves() const { return levels.back(); }

  /// The branch ending at node `index` of level `level`, ordered (x, x_{-1}, ..., x_{-level}).
  std::vector<Point> branch(int level, std::size_t index) const {
    std::vector<Point> out(static_cast<std::size_t>(level) + 1);
    for (int j = level; j >= 0; --j) {
      out[j] = levels[j][index].point;
      index = levels[j][index].parent;
    }
    return out;
  }
};

inline constexpr double kTreeBudget = 1e6;

inline PrehistoryTree prehistory_tree(const EndomorphismModel& model, const Point& x, int depth) {
  if (depth < 0) throw Error(ErrorKind::DomainError, "depth must be >= 0");
  if (std::pow(static_cast<double>(model.degree()), depth) > kTreeBudget)
    throw Error(ErrorKind::BudgetExceeded, "prehistory tree with d^depth > 1e6 leaves");
  PrehistoryTree tree;
  tree.root = x;
  tree.depth = depth;
  tree.levels.push_back({{x, 0}});
  const std::size_t d = static_cast<std::size_t>(model.degree());
  for (int j = 1; j <= depth; ++j) {
    const auto& prev = tree.levels.back();
    std::vector<PrehistoryTree::Node> next(prev.size() * d);
    parallel_for(prev.size(), [&](std::size_t i) {
      auto pre = model.preimages(prev[i].point);
      if (pre.size() != d)
        throw Error(ErrorKind::DomainError, "preimage count differs from the model degree");
      for (std::size_t b = 0; b < d; ++b) next[i * d + b] = {pre[b], i};
    });
    tree.levels.push_back(std::move(next));
  }
  return tree;
}

/// Cutoff data of the rho-maximal prehistories of a point.
struct RhoMaximalSet {
  struct Entry {
    int p = 0;                 ///< cutoff n(x^, rho)
    std::size_t node = 0;      ///< index of x_{-p} in tree level p
    double contraction = 0.0;  ///< |Df_s^p(x_{-p})|
    double previous = 0.0;     ///< |Df_s^{p-1}(x_{-p+1})|
  };
  Point x;
  double rho = 0.0;
  double eps = 0.0;
  std::vector<Entry> entries;
  std::vector<int> cutoffs;  ///< distinct cutoffs, n_1 > n_2 > ... > n_T
  double min_stable_factor = 0.0;
  double max_stable_factor = 0.0;
};

/// For every prehistory, the least p with |Df_s^p(x_{-p})| eps < rho. Branches that share
/// their first p preimages share one entry. A tie rho == |Df_s^p| eps moves the cutoff
/// to the next level.
inline RhoMaximalSet rho_maximal(const EndomorphismModel& model, const PrehistoryTree& tree, double rho,
                                 double eps, int horizon = kDefaultHorizon) {
  if (!(rho > 0.0 && rho < eps)) throw Error(ErrorKind::DomainError, "rho_maximal requires 0 < rho < eps");
  RhoMaximalSet out;
  out.x = tree.root;
  out.rho = rho;
  out.eps = eps;

  // |Df_s| at every non-root node
  std::vector<std::vector<double>> factor(tree.levels.size());
  double lo = 1e300, hi = 0.0;
  for (std::size_t j = 1; j < tree.levels.size(); ++j) {
    const auto& level = tree.levels[j];
    factor[j].resize(level.size());
    parallel_for(level.size(), [&](std::size_t i) {
      factor[j][i] = std::exp(stable_log_derivative(model, level[i].point, horizon));
    });
    for (double v : factor[j]) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  out.min_stable_factor = lo;
  out.max_stable_factor = hi;

  // depth-first walk with cumulative contraction
  struct Frame {
    int level;
    std::size_t node;
    double contraction;
  };
  std::vector<Frame> stack{{0, 0, 1.0}};
  const std::size_t d = static_cast<std::size_t>(model.degree());
  while (!stack.empty()) {
    Frame fr = stack.back();
    stack.pop_back();
    if (fr.level == tree.depth) {
      int need = hi > 0.0 && hi < 1.0 ? static_cast<int>(std::ceil(std::log(rho / eps) / std::log(hi))) : -1;
      throw Error(ErrorKind::DepthInsufficient,
                  "prehistory tree of depth " + std::to_string(tree.depth) + " too shallow; need depth >= " +
                      std::to_string(need));
    }
    for (std::size_t b = d; b-- > 0;) {
      std::size_t child = fr.node * d + b;
      double c = fr.contraction * factor[fr.level + 1][child];
      if (c * eps < rho) {
        out.entries.push_back({fr.level + 1, child, c, fr.contraction});
      } else {
        stack.push_back({fr.level + 1, child, c});
      }
    }
  }
  for (const auto& e : out.entries) out.cutoffs.push_back(e.p);
  std::sort(out.cutoffs.begin(), out.cutoffs.end(), std::greater<>());
  out.cutoffs.erase(std::unique(out.cutoffs.begin(), out.cutoffs.end()), out.cutoffs.end());
  return out;
}

}  // namespace hypendo
