#pragma once

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hypendo/config.hpp"
#include "hypendo/measures.hpp"
#include "hypendo/orbits.hpp"
#include "hypendo/stable_structure.hpp"
#include "hypendo/thermo.hpp"

namespace hypendo::cli {

inline constexpr const char* kVersion = "0.1.0";

namespace detail {

inline json point_json(const Point& p) {
  json a = json::array();
  for (int i = 0; i < p.dim(); ++i) a.push_back(p[i]);
  return a;
}

inline Point parse_point(const std::string& s, int dim) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorKind::ConfigInvalid, "--point: cannot parse '" + item + "'");
    }
  }
  if (static_cast<int>(v.size()) != dim)
    throw Error(ErrorKind::ConfigInvalid, "--point needs " + std::to_string(dim) + " comma-separated coordinates");
  Point p(dim);
  for (int i = 0; i < dim; ++i) p[i] = v[i];
  return p;
}

inline std::ofstream open_csv(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorKind::ConfigInvalid, "cannot write '" + path + "'");
  f << std::setprecision(17);
  return f;
}

/// Options shared by every subcommand plus the per-command knobs, all echoed in the report.
struct Options {
  std::string model_path;
  std::string output;
  std::string csv;
  std::string potential = "zero";
  std::uint64_t seed = 1;
  int n = 8;
  int n_max = 8;
  int degree = 0;
  int samples = 200;
  int slices = 20;
  int points = 10;
  int depth = 6;
  int k_max = 4;
  int m_max = 5;
  double r = 0.2;
  double w = 0.0;
  double eps = 0.2;
  double rho = 0.01;
  double threshold = 10.0;
  std::string point;
  std::vector<std::string> alternatives;
};

struct Context {
  const Options& opt;
  json model_json;
  EndomorphismModel model;
  PeriodicCache cache;

  Context(const Options& o, json mj, EndomorphismModel m)
      : opt(o), model_json(std::move(mj)), model(std::move(m)), cache(model) {}

  /// "delta-stable" resolves to delta^s Phi^s with delta^s from Bowen's equation.
  Potential potential(const std::string& spec, json& report) {
    if (spec == "delta-stable") {
      double t = bowen_root(cache, opt.n_max, model.degree()).t_star;
      report["results"]["delta_s"] = t;
      return Potential::stable(t);
    }
    return Potential::parse(spec);
  }

  SliceOptions slice_options() const {
    SliceOptions s;
    s.slices = opt.slices;
    s.points = opt.points;
    s.r = opt.r;
    s.w = opt.w > 0.0 ? opt.w : opt.r / 20.0;
    s.rho_grid = dyadic_grid(opt.r);
    return s;
  }
};

inline json survey_json(const SliceSurvey& sv) {
  json j;
  j["median_slope"] = sv.median_slope();
  j["slopes"] = sv.slopes;
  j["slice_sizes"] = sv.slice_sizes;
  j["skipped_slices"] = sv.skipped_slices;
  j["rho_grid"] = sv.rho_grid;
  return j;
}

inline void write_survey_csv(const std::string& path, const SliceSurvey& sv) {
  auto f = open_csv(path);
  f << "row,y,rho,mass\n";
  for (std::size_t i = 0; i < sv.masses.size(); ++i)
    for (std::size_t j = 0; j < sv.rho_grid.size(); ++j)
      f << i << ',' << sv.y_points[i] << ',' << sv.rho_grid[j] << ',' << sv.masses[i][j] << '\n';
}

inline json bowen_json(const BowenRoot& b) {
  json j;
  j["t_star"] = b.t_star;
  j["bracket"] = {b.t_lo, b.t_hi};
  j["residual"] = b.residual;
  j["noise_band"] = b.noise_band;
  j["degree"] = b.degree;
  j["n_max"] = b.n_max;
  json ev = json::array();
  for (const auto& e : b.evaluations) ev.push_back({{"t", e.t}, {"g", e.g}, {"uncertainty", e.uncertainty}});
  j["evaluations"] = ev;
  return j;
}

// Each command fills report["results"] and returns whether its verification passed.

inline bool cmd_pressure(Context& c, json& rep) {
  Potential phi = c.potential(c.opt.potential, rep);
  auto p = pressure(c.cache, phi, c.opt.n_max);
  auto& r = rep["results"];
  r["potential"] = phi.tag();
  r["pressure"] = p.value;
  r["uncertainty"] = p.uncertainty;
  r["method"] = p.method;
  r["log_partition"] = p.log_values;
  json per = json::array();
  for (auto [n, v] : p.per_n) per.push_back({{"n", n}, {"log_P_over_n", v}});
  r["per_n"] = per;
  return true;
}

inline bool cmd_stable_dim(Context& c, json& rep) {
  int d = c.opt.degree > 0 ? c.opt.degree : c.model.degree();
  rep["results"] = bowen_json(bowen_root(c.cache, c.opt.n_max, d));
  return true;
}

inline bool cmd_orbits(Context& c, json& rep) {
  const auto& set = c.cache.get(c.opt.n, false).orbits;
  auto& r = rep["results"];
  r["count"] = set.points.size();
  r["method"] = to_string(set.method);
  r["cycles"] = permutation_cycles(set.image).size();
  if (!c.opt.csv.empty()) {
    auto f = open_csv(c.opt.csv);
    f << "index,image";
    for (int i = 0; i < c.model.phase_dim(); ++i) f << ",x" << i;
    f << '\n';
    for (std::size_t i = 0; i < set.points.size(); ++i) {
      f << i << ',' << set.image[i];
      for (int k = 0; k < c.model.phase_dim(); ++k) f << ',' << set.points[i][k];
      f << '\n';
    }
  }
  return true;
}

inline bool cmd_atoms(Context& c, json& rep) {
  Potential phi = c.potential(c.opt.potential, rep);
  auto mu = equilibrium_atoms(c.cache, phi, c.opt.n);
  auto& r = rep["results"];
  r["potential"] = mu.potential_tag;
  r["count"] = mu.atoms.size();
  r["weight_min"] = *std::min_element(mu.weights.begin(), mu.weights.end());
  r["weight_max"] = *std::max_element(mu.weights.begin(), mu.weights.end());
  r["weight_total"] = std::accumulate(mu.weights.begin(), mu.weights.end(), 0.0);
  if (!c.opt.csv.empty()) {
    auto f = open_csv(c.opt.csv);
    f << "index,image,weight";
    for (int i = 0; i < c.model.phase_dim(); ++i) f << ",x" << i;
    f << '\n';
    for (std::size_t i = 0; i < mu.atoms.size(); ++i) {
      f << i << ',' << mu.image[i] << ',' << mu.weights[i];
      for (int k = 0; k < c.model.phase_dim(); ++k) f << ',' << mu.atoms[i][k];
      f << '\n';
    }
  }
  return true;
}

inline bool cmd_slice_dim(Context& c, json& rep) {
  Potential phi = c.potential(c.opt.potential, rep);
  auto mu = equilibrium_atoms(c.cache, phi, c.opt.n);
  std::mt19937_64 rng(c.opt.seed);
  auto sv = slice_survey(mu, c.model, c.slice_options(), rng);
  rep["results"].update(survey_json(sv));
  if (!c.opt.csv.empty()) write_survey_csv(c.opt.csv, sv);
  return true;
}

inline bool cmd_verify_geometric(Context& c, json& rep) {
  double delta = bowen_root(c.cache, c.opt.n_max, c.model.degree()).t_star;
  auto mu = equilibrium_atoms(c.cache, Potential::stable(delta), c.opt.n);
  std::mt19937_64 rng(c.opt.seed);
  auto v = geometric_probability_check(mu, c.model, delta, c.slice_options(), c.opt.threshold, rng);
  auto& r = rep["results"];
  r["exponent"] = v.exponent;
  r["C_hat"] = v.C_hat;
  r["threshold"] = v.threshold;
  r["median_slope"] = v.median_slope;
  r["survey"] = survey_json(v.survey);
  if (!c.opt.csv.empty()) write_survey_csv(c.opt.csv, v.survey);
  return v.pass;
}

inline bool cmd_compare_components(Context& c, json& rep) {
  auto root = bowen_root(c.cache, c.opt.n_max, c.model.degree());
  Potential phi = Potential::stable(root.t_star);
  double p = pressure(c.cache, phi, c.opt.n_max).value;
  auto mu = equilibrium_atoms(c.cache, phi, c.opt.n);
  std::mt19937_64 rng(c.opt.seed);
  json pairs = json::array();
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  bool in_band = true;
  for (int k = 1; k <= c.opt.k_max; ++k)
    for (int m = 1; m <= c.opt.k_max; ++m) {
      auto cc = component_comparison_check(mu, c.model, phi, p, k, m, c.opt.eps, rng);
      pairs.push_back({{"k", k}, {"m", m}, {"mass_1", cc.mass_1}, {"mass_2", cc.mass_2},
                       {"empirical", cc.empirical}, {"predicted", cc.predicted}, {"quotient", cc.quotient},
                       {"degree_quotient", cc.degree_quotient}, {"a", point_json(cc.a)}});
      lo = std::min(lo, cc.quotient);
      hi = std::max(hi, cc.quotient);
      in_band = in_band && cc.quotient >= 0.1 && cc.quotient <= 10.0;
    }
  auto& r = rep["results"];
  r["delta_s"] = root.t_star;
  r["pressure"] = p;
  r["pairs"] = pairs;
  r["quotient_min"] = lo;
  r["quotient_max"] = hi;
  r["quotient_spread"] = hi / lo;
  r["quotients_in_band"] = in_band;
  return in_band && hi / lo < 10.0;
}

inline bool cmd_preimage_count(Context& c, json& rep) {
  std::mt19937_64 rng(c.opt.seed);
  auto ct = constant_to_one_check(c.model, c.opt.samples, rng);
  auto& r = rep["results"];
  r["samples"] = ct.samples;
  r["d"] = ct.degree;
  r["min_count"] = ct.min_count;
  r["max_count"] = ct.max_count;
  r["constant"] = ct.pass;
  if (ct.has_additive_claim) {
    r["additive_claim"] = ct.additive_claim;
    r["additive_claim_consistent"] = ct.additive_claim_consistent;
    if (!ct.additive_claim_consistent)
      r["note"] = "enumerated degree " + std::to_string(ct.degree) + " = k*|det A| differs from the stated (k+|det(A)|)-to-1 count " +
                  std::to_string(ct.additive_claim);
  }
  return ct.pass;
}

inline bool cmd_prehist(Context& c, json& rep) {
  Point x;
  if (c.opt.point.empty()) {
    std::mt19937_64 rng(c.opt.seed);
    x = c.model.sample_basic_set(rng);
  } else {
    x = parse_point(c.opt.point, c.model.phase_dim());
  }
  auto tree = prehistory_tree(c.model, x, c.opt.depth);
  auto set = rho_maximal(c.model, tree, c.opt.rho, c.opt.eps);
  auto& r = rep["results"];
  r["x"] = point_json(x);
  r["leaves"] = tree.leaves().size();
  r["cutoffs"] = set.cutoffs;
  r["min_stable_factor"] = set.min_stable_factor;
  r["max_stable_factor"] = set.max_stable_factor;
  json entries = json::array();
  for (const auto& e : set.entries)
    entries.push_back({{"p", e.p}, {"point", point_json(tree.levels[e.p][e.node].point)},
                       {"contraction", e.contraction}, {"previous", e.previous}});
  r["entries"] = entries;
  return true;
}

inline bool cmd_verify_tub(Context& c, json& rep) {
  double delta = bowen_root(c.cache, c.opt.n_max, c.model.degree()).t_star;
  auto mu = equilibrium_atoms(c.cache, Potential::stable(delta), c.opt.n);
  std::mt19937_64 rng(c.opt.seed);
  json orders = json::array();
  bool ok = true;
  for (int m = 1; m <= c.opt.m_max; ++m) {
    const int n = m / 2;
    auto b = bowen_ball_check(mu, c.model, n, m - n, c.opt.eps, c.opt.samples, delta, rng);
    ok = ok && b.min_ratio >= 0.1 && b.max_ratio <= 10.0;
    orders.push_back({{"m", m}, {"n", n}, {"k", m - n}, {"min_ratio", b.min_ratio}, {"max_ratio", b.max_ratio},
                      {"used", b.samples.size()}, {"skipped", b.skipped}});
  }
  auto& r = rep["results"];
  r["delta_s"] = delta;
  r["orders"] = orders;
  return ok;
}

inline bool cmd_ac_diagnostic(Context& c, json& rep) {
  std::mt19937_64 rng(c.opt.seed);
  AbsoluteContinuityOptions ac_opt;
  ac_opt.n = c.opt.n;
  ac_opt.n_max = c.opt.n_max;
  ac_opt.slices = c.slice_options();
  auto ac = absolute_continuity_diagnostic(c.cache, ac_opt, rng);
  auto& r = rep["results"];
  r["delta_s"] = ac.delta_s;
  r["stable_dim_E"] = ac.stable_dim_E;
  r["median_slope"] = ac.median_slope;
  r["is_repellor_verdict"] = ac.is_repellor_verdict;
  r["slice_ac_verdict"] = ac.slice_ac_verdict;
  return true;
}

inline bool cmd_max_dim(Context& c, json& rep) {
  std::vector<Potential> alts;
  for (const auto& a : c.opt.alternatives) alts.push_back(Potential::parse(a));
  if (alts.empty()) alts.push_back(Potential::zero());
  auto m = max_stable_dim_check(c.cache, c.opt.n, c.opt.n_max, alts, c.slice_options(), c.opt.seed);
  auto& r = rep["results"];
  r["delta_s"] = m.delta_s;
  r["slope_mu_s"] = m.slope_mu_s;
  r["mu_s_attains"] = m.mu_s_attains;
  json a = json::array();
  for (const auto& alt : m.alternatives)
    a.push_back({{"potential", alt.potential}, {"slope", alt.slope}, {"within_bound", alt.within_bound}});
  r["alternatives"] = a;
  return m.pass;
}

}  // namespace detail

/// Parses the command line, runs one subcommand and prints its JSON report.
/// Returns 0 on success, 2 for configuration errors, 3 for budget, 4 for convergence
/// and 5 when a verification fails.
inline int run(std::vector<std::string> args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  using namespace detail;
  CLI::App app{"Thermodynamic formalism for hyperbolic endomorphisms"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  Options opt;

  struct Command {
    const char* name;
    const char* help;
    bool (*fn)(Context&, json&);
    CLI::App* app = nullptr;
  };
  std::vector<Command> commands{
      {"pressure", "pressure estimate from periodic-point sums", cmd_pressure},
      {"stable-dim", "root of Bowen's equation P(t Phi^s) = log d", cmd_stable_dim},
      {"atoms", "equilibrium atoms on Fix(f^n)", cmd_atoms},
      {"slice-dim", "pointwise dimension fits on stable slices", cmd_slice_dim},
      {"verify-geometric", "geometric-probability check of stable conditionals", cmd_verify_geometric},
      {"compare-components", "mass comparison of preimage components", cmd_compare_components},
      {"preimage-count", "constant-to-one check by preimage enumeration", cmd_preimage_count},
      {"prehist", "prehistory tree and rho-maximal cutoffs", cmd_prehist},
      {"verify-tub", "Bowen-ball and cylinder mass estimates", cmd_verify_tub},
      {"ac-diagnostic", "absolute-continuity diagnostic", cmd_ac_diagnostic},
      {"max-dim", "stable dimension of alternative equilibrium measures", cmd_max_dim},
      {"orbits", "dump Fix(f^n)", cmd_orbits},
  };
  for (auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    c.app = sub;
    sub->add_option("--model", opt.model_path, "model JSON file")->required()->check(CLI::ExistingFile);
    sub->add_option("--output,-o", opt.output, "also write the JSON report here");
    sub->add_option("--seed", opt.seed, "RNG seed")->capture_default_str();
    sub->add_option("--nmax", opt.n_max, "largest period in pressure estimates")->capture_default_str();
    const std::string name = c.name;
    if (name == "pressure" || name == "atoms" || name == "slice-dim")
      sub->add_option("--potential", opt.potential, "stable | zero | const:<c> | delta-stable")->capture_default_str();
    if (name == "stable-dim") sub->add_option("--degree", opt.degree, "d in Bowen's equation (default: model degree)");
    if (name != "pressure" && name != "stable-dim" && name != "preimage-count" && name != "prehist")
      sub->add_option("--n", opt.n, "period of the atoms")->capture_default_str();
    if (name == "atoms" || name == "slice-dim" || name == "verify-geometric" || name == "orbits")
      sub->add_option("--csv", opt.csv, "per-atom or per-radius table");
    if (name == "slice-dim" || name == "verify-geometric" || name == "ac-diagnostic" || name == "max-dim") {
      sub->add_option("--slices", opt.slices)->capture_default_str();
      sub->add_option("--points", opt.points, "y-points per slice")->capture_default_str();
      sub->add_option("--r", opt.r, "slice half-length")->capture_default_str();
      sub->add_option("--w", opt.w, "tube width (default r/20)");
    }
    if (name == "verify-geometric") sub->add_option("--threshold", opt.threshold)->capture_default_str();
    if (name == "compare-components") {
      sub->add_option("--kmax", opt.k_max, "k, m range over 1..kmax")->capture_default_str();
      sub->add_option("--eps", opt.eps)->capture_default_str();
    }
    if (name == "preimage-count" || name == "verify-tub") sub->add_option("--samples", opt.samples)->capture_default_str();
    if (name == "verify-tub") {
      sub->add_option("--mmax", opt.m_max, "largest Bowen-ball order")->capture_default_str();
      sub->add_option("--eps", opt.eps)->capture_default_str();
    }
    if (name == "prehist") {
      sub->add_option("--point", opt.point, "comma-separated coordinates (default: sampled)");
      sub->add_option("--depth", opt.depth)->capture_default_str();
      sub->add_option("--rho", opt.rho)->capture_default_str();
      sub->add_option("--eps", opt.eps)->capture_default_str();
    }
    if (name == "max-dim") sub->add_option("--alt", opt.alternatives, "alternative potentials (default: zero)");
  }

  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return exit_code(ErrorKind::ConfigInvalid);
  }

  const Command* chosen = nullptr;
  for (const auto& c : commands)
    if (c.app->parsed()) chosen = &c;

  json rep;
  rep["tool"] = "hypendo";
  rep["version"] = kVersion;
  rep["command"] = chosen->name;
  rep["seed"] = opt.seed;
  rep["inputs"] = {{"model", opt.model_path}, {"potential", opt.potential}, {"n", opt.n},
                   {"nmax", opt.n_max},        {"degree", opt.degree},       {"samples", opt.samples},
                   {"slices", opt.slices},     {"points", opt.points},       {"depth", opt.depth},
                   {"kmax", opt.k_max},        {"mmax", opt.m_max},          {"r", opt.r},
                   {"w", opt.w > 0.0 ? opt.w : opt.r / 20.0},                {"eps", opt.eps},
                   {"rho", opt.rho},           {"threshold", opt.threshold}, {"point", opt.point},
                   {"alt", opt.alternatives},  {"threads", thread_count()}};
  rep["results"] = json::object();
  try {
    json mj = load_json_file(opt.model_path);
    Context ctx(opt, mj, model_from_json(mj));
    rep["model"] = {{"config", mj}, {"describe", ctx.model.describe()}, {"degree", ctx.model.degree()}};
    bool pass = chosen->fn(ctx, rep);
    rep["pass"] = pass;
    rep["exit_code"] = pass ? 0 : 5;
  } catch (const Error& e) {
    rep["error"] = {{"kind", std::string(to_string(e.kind()))}, {"message", e.what()}};
    rep["exit_code"] = exit_code(e.kind());
    err << "error: " << e.what() << '\n';
  }
  std::string text = rep.dump(2);
  out << text << '\n';
  if (!opt.output.empty()) {
    std::ofstream f(opt.output);
    if (!f) {
      err << "error: cannot write '" << opt.output << "'\n";
      return exit_code(ErrorKind::ConfigInvalid);
    }
    f << text << '\n';
  }
  return rep["exit_code"].get<int>();
}

inline int run(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  return run(std::vector<std::string>(argv + 1, argv + argc), out, err);
}

}  // namespace hypendo::cli
