#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "hypendo/error.hpp"
#include "hypendo/models.hpp"

namespace hypendo {

using json = nlohmann::json;

namespace detail {

[[noreturn]] inline void config_error(const std::string& path, const std::string& msg) {
  throw Error(ErrorKind::ConfigInvalid, (path.empty() ? std::string("/") : path) + ": " + msg);
}

inline const json& require(const json& obj, const std::string& key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) config_error(path + "/" + key, "missing required field");
  return *it;
}

inline double require_number(const json& obj, const std::string& key, const std::string& path) {
  const json& v = require(obj, key, path);
  if (!v.is_number()) config_error(path + "/" + key, "expected a number");
  return v.get<double>();
}

inline int require_int(const json& obj, const std::string& key, const std::string& path) {
  const json& v = require(obj, key, path);
  if (!v.is_number_integer()) config_error(path + "/" + key, "expected an integer");
  return v.get<int>();
}

inline IntMat2 require_matrix(const json& obj, const std::string& key, const std::string& path) {
  const json& v = require(obj, key, path);
  const std::string p = path + "/" + key;
  if (!v.is_array() || v.size() != 2) config_error(p, "expected a 2x2 integer matrix");
  std::int64_t e[4];
  for (int i = 0; i < 2; ++i) {
    if (!v[i].is_array() || v[i].size() != 2) config_error(p + "/" + std::to_string(i), "expected a row of 2 integers");
    for (int j = 0; j < 2; ++j) {
      if (!v[i][j].is_number_integer())
        config_error(p + "/" + std::to_string(i) + "/" + std::to_string(j), "expected an integer");
      e[2 * i + j] = v[i][j].get<std::int64_t>();
    }
  }
  return IntMat2{e[0], e[1], e[2], e[3]};
}

inline void reject_unknown(const json& obj, std::initializer_list<const char*> allowed, const std::string& path) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) config_error(path + "/" + it.key(), "unknown field");
  }
}

}  // namespace detail

/// Builds a model from its JSON description:
///   {"kind": "toral_linear", "matrix": [[3,2],[2,2]]}
///   {"kind": "toral_perturbed", "matrix": ..., "eps": 0.01}
///   {"kind": "product_power_toral", "k": 3, "matrix": ..., "eps": 0.01}
///   {"kind": "product_attractor_circle", "c": 0.1}
///   {"kind": "circle_power", "k": 2}
/// A "name" string is accepted and ignored. Model validation errors keep their own kind.
inline EndomorphismModel model_from_json(const json& j, const std::string& path = "") {
  using namespace detail;
  if (!j.is_object()) config_error(path, "model must be a JSON object");
  const json& kind_v = require(j, "kind", path);
  if (!kind_v.is_string()) config_error(path + "/kind", "expected a string");
  const std::string kind = kind_v.get<std::string>();
  if (kind == "toral_linear") {
    reject_unknown(j, {"kind", "name", "matrix"}, path);
    return EndomorphismModel::toral_linear(require_matrix(j, "matrix", path));
  }
  if (kind == "toral_perturbed") {
    reject_unknown(j, {"kind", "name", "matrix", "eps"}, path);
    return EndomorphismModel::toral_perturbed(require_matrix(j, "matrix", path), require_number(j, "eps", path));
  }
  if (kind == "product_power_toral") {
    reject_unknown(j, {"kind", "name", "k", "matrix", "eps"}, path);
    return EndomorphismModel::product_power_toral(require_int(j, "k", path), require_matrix(j, "matrix", path),
                                                  require_number(j, "eps", path));
  }
  if (kind == "product_attractor_circle") {
    reject_unknown(j, {"kind", "name", "c"}, path);
    return EndomorphismModel::product_attractor_circle(require_number(j, "c", path));
  }
  if (kind == "circle_power") {
    reject_unknown(j, {"kind", "name", "k"}, path);
    return EndomorphismModel::circle_power(require_int(j, "k", path));
  }
  config_error(path + "/kind", "unknown model kind '" + kind +
                                   "' (expected toral_linear|toral_perturbed|product_power_toral|"
                                   "product_attractor_circle|circle_power)");
}

inline json load_json_file(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorKind::ConfigInvalid, "cannot open '" + file + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::ConfigInvalid, file + ": " + e.what());
  }
}

inline EndomorphismModel load_model(const std::string& file) { return model_from_json(load_json_file(file)); }

}  // namespace hypendo
