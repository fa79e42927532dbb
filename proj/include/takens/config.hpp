#pragma once

#include <charconv>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "takens/dynamics.hpp"
#include "takens/errors.hpp"
#include "takens/numformat.hpp"
#include "takens/observables.hpp"
#include "takens/sampling.hpp"

namespace takens {

/// One experiment: the subcommand plus every knob it may read. The whole
/// struct serializes to a flat key=value file with a single [op] section and
/// round-trips byte-exactly.
struct ExperimentConfig {
  std::string op = "embed";
  std::string system = "cat";        // "cat" | "rotation:<omega>"
  int k = 3;                         // delay length / projection rank
  std::string base = "cos1";         // "cos1" | "zero"
  double radius = 1.0;               // perturbation ball radius
  std::uint64_t seed = 0;
  std::string measure = "lebesgue";  // "lebesgue" | "orbit:<burn>" | "cantor:<level>"
  long long points = 1000;
  long long pairs = 10000;
  int probes = 64;
  double eps_min = 0.0031622776601683794;  // 10^-2.5
  double eps_max = 0.1;
  int cells = 8;
  double eps = 0.05;        // lyapunov tolerance
  double eps_sep = 0.2;     // intersection separation on M
  double delta_emb = 1e-3;  // intersection tolerance in R^k
  long long n_steps = 1000; // lyapunov horizon
  std::string m_grid = "2,4,8,16,32,64,128";
  long long draws = 10000;  // Monte Carlo draws
  int trials = 20;          // surjectivity targets
  std::string profile = "quick";
  std::string out;          // output root; empty defers to TAKENS_OUT or ./out
};

namespace detail {

inline const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "system", "k",       "base",      "radius",  "seed",   "measure", "points",
      "pairs",  "probes",  "eps_min",   "eps_max", "cells",  "eps",     "eps_sep",
      "delta_emb", "n_steps", "m_grid", "draws",   "trials", "profile", "out"};
  return keys;
}

inline std::string config_get(const ExperimentConfig& c, const std::string& key) {
  if (key == "system") return c.system;
  if (key == "k") return format_int(c.k);
  if (key == "base") return c.base;
  if (key == "radius") return format_double(c.radius);
  if (key == "seed") return std::to_string(c.seed);
  if (key == "measure") return c.measure;
  if (key == "points") return format_int(c.points);
  if (key == "pairs") return format_int(c.pairs);
  if (key == "probes") return format_int(c.probes);
  if (key == "eps_min") return format_double(c.eps_min);
  if (key == "eps_max") return format_double(c.eps_max);
  if (key == "cells") return format_int(c.cells);
  if (key == "eps") return format_double(c.eps);
  if (key == "eps_sep") return format_double(c.eps_sep);
  if (key == "delta_emb") return format_double(c.delta_emb);
  if (key == "n_steps") return format_int(c.n_steps);
  if (key == "m_grid") return c.m_grid;
  if (key == "draws") return format_int(c.draws);
  if (key == "trials") return format_int(c.trials);
  if (key == "profile") return c.profile;
  if (key == "out") return c.out;
  throw ConfigError(key, "unknown key");
}

inline void config_set(ExperimentConfig& c, const std::string& key, const std::string& value) {
  auto as_int = [&](long long lo, long long hi) {
    long long v = 0;
    auto res = std::from_chars(value.data(), value.data() + value.size(), v);
    if (res.ec != std::errc() || res.ptr != value.data() + value.size() || v < lo || v > hi)
      throw ConfigError(key, "expected an integer in [" + format_int(lo) + ", " + format_int(hi) + "]");
    return v;
  };
  auto as_double = [&]() {
    try {
      size_t pos = 0;
      double v = std::stod(value, &pos);
      if (pos != value.size()) throw std::invalid_argument(value);
      return v;
    } catch (const std::exception&) {
      throw ConfigError(key, "expected a real number, got '" + value + "'");
    }
  };
  if (key == "system") c.system = value;
  else if (key == "k") c.k = static_cast<int>(as_int(1, 64));
  else if (key == "base") c.base = value;
  else if (key == "radius") c.radius = as_double();
  else if (key == "seed") c.seed = static_cast<std::uint64_t>(as_int(0, INT64_MAX));
  else if (key == "measure") c.measure = value;
  else if (key == "points") c.points = as_int(1, 100000000);
  else if (key == "pairs") c.pairs = as_int(1, 100000000);
  else if (key == "probes") c.probes = static_cast<int>(as_int(1, 1000000));
  else if (key == "eps_min") c.eps_min = as_double();
  else if (key == "eps_max") c.eps_max = as_double();
  else if (key == "cells") c.cells = static_cast<int>(as_int(1, 1000));
  else if (key == "eps") c.eps = as_double();
  else if (key == "eps_sep") c.eps_sep = as_double();
  else if (key == "delta_emb") c.delta_emb = as_double();
  else if (key == "n_steps") c.n_steps = as_int(1, 100000000);
  else if (key == "m_grid") c.m_grid = value;
  else if (key == "draws") c.draws = as_int(1, 1000000000);
  else if (key == "trials") c.trials = static_cast<int>(as_int(1, 1000000));
  else if (key == "profile") c.profile = value;
  else if (key == "out") c.out = value;
  else throw ConfigError(key, "unknown key");
}

}  // namespace detail

inline std::string config_to_ini(const ExperimentConfig& c) {
  std::string s = "[" + c.op + "]\n";
  for (const auto& key : detail::config_keys()) s += key + "=" + detail::config_get(c, key) + "\n";
  return s;
}

inline ExperimentConfig config_from_ini(const std::string& text) {
  ExperimentConfig c;
  std::istringstream in(text);
  std::string line;
  bool have_section = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      auto close = line.find(']');
      if (close == std::string::npos) throw ConfigError("section", "unterminated [op] header");
      c.op = line.substr(1, close - 1);
      have_section = true;
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(line, "expected key=value");
    detail::config_set(c, line.substr(0, eq), line.substr(eq + 1));
  }
  if (!have_section) throw ConfigError("section", "missing [op] header");
  return c;
}

inline nlohmann::ordered_json config_to_json(const ExperimentConfig& c) {
  nlohmann::ordered_json j;
  j["op"] = c.op;
  j["system"] = c.system;
  j["k"] = c.k;
  j["base"] = c.base;
  j["radius"] = c.radius;
  j["seed"] = c.seed;
  j["measure"] = c.measure;
  j["points"] = c.points;
  j["pairs"] = c.pairs;
  j["probes"] = c.probes;
  j["eps_min"] = c.eps_min;
  j["eps_max"] = c.eps_max;
  j["cells"] = c.cells;
  j["eps"] = c.eps;
  j["eps_sep"] = c.eps_sep;
  j["delta_emb"] = c.delta_emb;
  j["n_steps"] = c.n_steps;
  j["m_grid"] = c.m_grid;
  j["draws"] = c.draws;
  j["trials"] = c.trials;
  j["profile"] = c.profile;
  j["out"] = c.out;
  return j;
}

/// Dynamics named by config id. Throws ConfigError naming "system".
inline Diffeo dynamics_from_id(const std::string& id) {
  if (id == "cat") return make_cat_map();
  if (id.rfind("rotation:", 0) == 0) {
    std::string arg = id.substr(9);
    try {
      size_t pos = 0;
      double omega = std::stod(arg, &pos);
      if (pos != arg.size()) throw std::invalid_argument(arg);
      return make_rotation(omega);
    } catch (const std::exception&) {
      throw ConfigError("system", "bad rotation angle '" + arg + "'");
    }
  }
  throw ConfigError("system", "unknown dynamics '" + id + "' (want cat | rotation:<omega>)");
}

inline Manifold manifold_from_id(const std::string& id) {
  if (id == "torus2") return make_flat_torus();
  if (id == "circle") return make_circle();
  throw ConfigError("manifold", "unknown manifold '" + id + "' (want torus2 | circle)");
}

struct MeasureSpec {
  MeasureKind kind = MeasureKind::lebesgue;
  int param = 0;  // orbit burn-in or cantor level
};

inline MeasureSpec measure_from_id(const std::string& id) {
  MeasureSpec spec;
  if (id == "lebesgue") {
    spec.kind = MeasureKind::lebesgue;
    return spec;
  }
  auto parse_param = [&](size_t prefix_len, int lo, int hi) {
    std::string arg = id.substr(prefix_len);
    long long v = 0;
    auto res = std::from_chars(arg.data(), arg.data() + arg.size(), v);
    if (res.ec != std::errc() || res.ptr != arg.data() + arg.size() || v < lo || v > hi)
      throw ConfigError("measure", "bad parameter '" + arg + "'");
    return static_cast<int>(v);
  };
  if (id.rfind("orbit:", 0) == 0) {
    spec.kind = MeasureKind::orbit_empirical;
    spec.param = parse_param(6, 0, 1000000);
    return spec;
  }
  if (id == "orbit") {
    spec.kind = MeasureKind::orbit_empirical;
    return spec;
  }
  if (id.rfind("cantor:", 0) == 0) {
    spec.kind = MeasureKind::cantor_product;
    spec.param = parse_param(7, 1, 40);
    return spec;
  }
  throw ConfigError("measure", "unknown measure '" + id + "' (want lebesgue | orbit:<burn> | cantor:<level>)");
}

/// Validates the cross-field contracts shared by all subcommands.
inline void validate(const ExperimentConfig& c) {
  if (c.k < 1) throw ConfigError("k", "delay length must be >= 1");
  if (2 * c.k - 1 > 12) throw ConfigError("k", "k > 6 exceeds the monomial degree limit (2k-1 <= 12)");
  dynamics_from_id(c.system);
  base_kind_from_id(c.base);
  measure_from_id(c.measure);
  if (c.radius <= 0) throw ConfigError("radius", "perturbation radius must be positive");
  if (c.points < 1) throw ConfigError("points", "need at least one point");
  if (c.eps_min <= 0 || c.eps_max <= c.eps_min)
    throw ConfigError("eps_min", "need 0 < eps_min < eps_max");
}

}  // namespace takens
