#pragma once

#include <cstdio>
#include <string>

#include "hypendo/error.hpp"
#include "hypendo/models.hpp"
#include "hypendo/stable_structure.hpp"

namespace hypendo {

/// phi = stable_coeff * Phi^s + constant.
struct Potential {
  double stable_coeff = 0.0;
  double constant = 0.0;
  int horizon = kDefaultHorizon;

  static Potential zero() { return {}; }
  static Potential constant_value(double c) { return {0.0, c}; }
  static Potential stable(double t = 1.0, double shift = 0.0) { return {t, shift}; }

  /// Parses "zero", "stable" or "const:<c>".
  static Potential parse(const std::string& spec) {
    if (spec == "zero") return zero();
    if (spec == "stable") return stable();
    if (spec.rfind("const:", 0) == 0) {
      try {
        std::size_t used = 0;
        std::string num = spec.substr(6);
        double c = std::stod(num, &used);
        if (used == num.size()) return constant_value(c);
      } catch (const std::exception&) {
      }
    }
    throw Error(ErrorKind::ConfigInvalid, "unknown potential '" + spec + "' (expected stable|zero|const:c)");
  }

  bool uses_stable() const { return stable_coeff != 0.0; }

  std::string tag() const {
    char buf[96];
    if (!uses_stable()) {
      if (constant == 0.0) return "zero";
      std::snprintf(buf, sizeof buf, "const:%.17g", constant);
      return buf;
    }
    if (stable_coeff == 1.0 && constant == 0.0) return "stable";
    std::snprintf(buf, sizeof buf, "%.17g*stable%+.17g", stable_coeff, constant);
    return buf;
  }

  double operator()(const EndomorphismModel& model, const Point& x) const {
    return uses_stable() ? stable_coeff * stable_log_derivative(model, x, horizon) + constant : constant;
  }

  /// S_n phi(x), using the chain-rule form for the stable part.
  double birkhoff(const EndomorphismModel& model, const Point& x, int n) const {
    double s = n * constant;
    if (uses_stable()) s += stable_coeff * stable_birkhoff_sum(model, x, n, horizon);
    return s;
  }
};

}  // namespace hypendo
