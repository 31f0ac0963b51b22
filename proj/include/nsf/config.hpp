#pragma once

#include <filesystem>
#include <set>
#include <string>

#include "json.hpp"

#include "nsf/checkpoint.hpp"
#include "nsf/experiments.hpp"

namespace nsf {

using json = nlohmann::json;

// Scenario files are JSON objects. Required keys: kind, dim, n, L, mu, lambda,
// t_end, sample_dt. Everything else is optional; any key not listed below is
// rejected so that a misspelt knob cannot silently fall back to its default.
//
//   components: [{field, amplitude, center, width} | {field, amplitude, mode, phase}]

namespace detail {

inline const std::set<std::string>& scenario_keys() {
  static const std::set<std::string> k = {
      "kind",         "dim",          "n",           "L",           "mu",           "lambda",
      "t_end",        "sample_dt",    "cfl_safety",  "rho_floor",   "components",   "seed",
      "random_bumps", "random_amplitude", "random_width", "fixed_dt", "floor",      "alpha",
      "s",            "epsilon",      "delta_max",   "ball_constant", "split_constant", "A4"};
  return k;
}

inline const std::set<std::string>& required_keys() {
  static const std::set<std::string> k = {"kind", "dim", "n", "L", "mu", "lambda", "t_end", "sample_dt"};
  return k;
}

inline void check_keys(const json& j, const std::set<std::string>& allowed, const std::set<std::string>& required,
                       const std::string& where) {
  if (!j.is_object()) throw Error(ErrorKind::config, where + ": expected a JSON object");
  std::string unknown, missing;
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) unknown += (unknown.empty() ? "" : ", ") + k;
  for (const auto& k : required)
    if (!j.contains(k)) missing += (missing.empty() ? "" : ", ") + k;
  if (!unknown.empty()) throw Error(ErrorKind::config, where + ": unknown keys: " + unknown);
  if (!missing.empty()) throw Error(ErrorKind::config, where + ": missing required keys: " + missing);
}

template <class T>
T get_as(const json& j, const std::string& key, const std::string& where) {
  const json& v = j.at(key);
  if constexpr (std::is_same_v<T, double>) {
    if (!v.is_number()) throw Error(ErrorKind::config, where + "." + key + ": expected a number");
  } else if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer()) throw Error(ErrorKind::config, where + "." + key + ": expected an integer");
    if constexpr (std::is_unsigned_v<T>)
      if (v.is_number_integer() && !v.is_number_unsigned())
        throw Error(ErrorKind::config, where + "." + key + ": expected a non-negative integer");
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!v.is_string()) throw Error(ErrorKind::config, where + "." + key + ": expected a string");
  }
  return v.get<T>();
}

template <class T>
void read_opt(const json& j, const std::string& key, T& out, const std::string& where) {
  if (j.contains(key)) out = get_as<T>(j, key, where);
}

template <class T>
std::vector<T> get_array(const json& j, const std::string& key, const std::string& where) {
  const json& v = j.at(key);
  if (!v.is_array()) throw Error(ErrorKind::config, where + "." + key + ": expected an array");
  std::vector<T> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const json& e = v[i];
    if constexpr (std::is_integral_v<T>) {
      if (!e.is_number_integer()) throw Error(ErrorKind::config, where + "." + key + ": expected integers");
    } else {
      if (!e.is_number()) throw Error(ErrorKind::config, where + "." + key + ": expected numbers");
    }
    out.push_back(e.get<T>());
  }
  return out;
}

inline InitialComponent component_from_json(const json& j, const std::string& where) {
  InitialComponent c;
  const bool is_mode = j.is_object() && j.contains("mode");
  if (is_mode)
    check_keys(j, {"field", "amplitude", "mode", "phase"}, {"field", "amplitude", "mode"}, where);
  else
    check_keys(j, {"field", "amplitude", "center", "width"}, {"field", "amplitude", "center", "width"}, where);
  c.field = get_as<std::string>(j, "field", where);
  c.amplitude = get_as<double>(j, "amplitude", where);
  if (is_mode) {
    c.mode = get_array<int>(j, "mode", where);
    read_opt(j, "phase", c.phase, where);
  } else {
    c.center = get_array<double>(j, "center", where);
    c.width = get_as<double>(j, "width", where);
  }
  return c;
}

}  // namespace detail

/// Strict parse of a scenario object; validates the result.
inline Scenario scenario_from_json(const json& j) {
  const std::string w = "scenario";
  detail::check_keys(j, detail::scenario_keys(), detail::required_keys(), w);
  Scenario s;
  s.kind = scenario_kind_from_string(detail::get_as<std::string>(j, "kind", w));
  s.dim = detail::get_as<int>(j, "dim", w);
  s.n = detail::get_as<int>(j, "n", w);
  s.L = detail::get_as<double>(j, "L", w);
  s.params.mu = detail::get_as<double>(j, "mu", w);
  s.params.lambda = detail::get_as<double>(j, "lambda", w);
  s.t_end = detail::get_as<double>(j, "t_end", w);
  s.sample_dt = detail::get_as<double>(j, "sample_dt", w);
  detail::read_opt(j, "cfl_safety", s.params.cfl_safety, w);
  detail::read_opt(j, "rho_floor", s.params.rho_floor, w);
  detail::read_opt(j, "seed", s.seed, w);
  detail::read_opt(j, "random_bumps", s.random_bumps, w);
  detail::read_opt(j, "random_amplitude", s.random_amplitude, w);
  detail::read_opt(j, "random_width", s.random_width, w);
  detail::read_opt(j, "floor", s.floor, w);
  detail::read_opt(j, "alpha", s.alpha, w);
  detail::read_opt(j, "s", s.s_index, w);
  detail::read_opt(j, "epsilon", s.epsilon, w);
  detail::read_opt(j, "delta_max", s.delta_max, w);
  detail::read_opt(j, "split_constant", s.split_constant, w);
  if (j.contains("fixed_dt")) s.fixed_dt = detail::get_as<double>(j, "fixed_dt", w);
  if (j.contains("ball_constant")) s.ball_constant = detail::get_as<double>(j, "ball_constant", w);
  if (j.contains("A4")) s.A4 = detail::get_as<double>(j, "A4", w);
  if (j.contains("components")) {
    const json& arr = j.at("components");
    if (!arr.is_array()) throw Error(ErrorKind::config, "scenario.components: expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i)
      s.components.push_back(detail::component_from_json(arr[i], "scenario.components[" + std::to_string(i) + "]"));
  }
  if (s.dim < 1 || s.dim > 3) throw Error(ErrorKind::config, "scenario.dim must be 1, 2 or 3");
  if (s.n < 8 || (s.n & (s.n - 1)) != 0) throw Error(ErrorKind::config, "scenario.n must be a power of two >= 8");
  if (!(s.L > 0.0)) throw Error(ErrorKind::config, "scenario.L must be positive");
  s.validate();
  return s;
}

/// Inverse of scenario_from_json (every field written, optional ones only when set).
inline json scenario_to_json(const Scenario& s) {
  json j;
  j["kind"] = to_string(s.kind);
  j["dim"] = s.dim;
  j["n"] = s.n;
  j["L"] = s.L;
  j["mu"] = s.params.mu;
  j["lambda"] = s.params.lambda;
  j["t_end"] = s.t_end;
  j["sample_dt"] = s.sample_dt;
  j["cfl_safety"] = s.params.cfl_safety;
  j["rho_floor"] = s.params.rho_floor;
  j["seed"] = s.seed;
  j["random_bumps"] = s.random_bumps;
  j["random_amplitude"] = s.random_amplitude;
  j["random_width"] = s.random_width;
  j["floor"] = s.floor;
  j["alpha"] = s.alpha;
  j["s"] = s.s_index;
  j["epsilon"] = s.epsilon;
  j["delta_max"] = s.delta_max;
  j["split_constant"] = s.split_constant;
  if (s.fixed_dt) j["fixed_dt"] = *s.fixed_dt;
  if (s.ball_constant) j["ball_constant"] = *s.ball_constant;
  if (s.A4) j["A4"] = *s.A4;
  json comps = json::array();
  for (const auto& c : s.components) {
    json e{{"field", c.field}, {"amplitude", c.amplitude}};
    if (c.mode.empty()) {
      e["center"] = c.center;
      e["width"] = c.width;
    } else {
      e["mode"] = c.mode;
      e["phase"] = c.phase;
    }
    comps.push_back(e);
  }
  j["components"] = comps;
  return j;
}

inline json parse_json_text(const std::string& text, const std::string& where) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::config, where + ": invalid JSON: " + e.what());
  }
}

/// Load a scenario file. A run manifest is accepted too; its scenario echo is used.
inline Scenario load_scenario(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    throw Error(ErrorKind::config, std::string("config: ") + e.what());
  }
  json j = parse_json_text(text, path.string());
  if (j.is_object() && j.contains("schema") && j["schema"] == "nsf-manifest/1") {
    if (!j.contains("scenario")) throw Error(ErrorKind::config, path.string() + ": manifest lacks a scenario");
    j = j["scenario"];
  }
  return scenario_from_json(j);
}

}  // namespace nsf
