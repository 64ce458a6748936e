#pragma once

// JSON run configuration. Every field error is reported with its JSON path;
// syntax errors keep nlohmann's line/column message.

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qplyap/background.hpp"
#include "qplyap/errors.hpp"
#include "qplyap/lyapunov.hpp"
#include "qplyap/potential.hpp"

namespace qplyap {

using json = nlohmann::json;

struct RunConfig {
  FourierPotential potential = FourierPotential::cosine(0.5);
  BackgroundSpec background{};
  double lambda = 1.0;
  double omega = golden_mean;
  std::vector<double> energies;
  std::size_t N = 20000;
  std::size_t grid_m = 512;
  double delta = 0.005;
  std::optional<std::size_t> q;
  std::vector<double> tuple;
  std::vector<std::size_t> n_schedule;
  std::uint64_t seed = 0;
  std::optional<std::string> out;

  OperatorParams op() const {
    OperatorParams p;
    p.lambda = lambda;
    p.omega = omega;
    p.potential = potential;
    p.background = background;
    return p;
  }
};

namespace detail {

[[noreturn]] inline void field_error(const std::string& path, const std::string& what) {
  throw ConfigError("config: field '" + path + "': " + what);
}

inline const json& require(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) field_error(path + key, "missing");
  return j.at(key);
}

inline double number(const json& j, const std::string& path) {
  if (!j.is_number()) field_error(path, "expected a number");
  return j.get<double>();
}

inline std::uint64_t unsigned_int(const json& j, const std::string& path) {
  if (!j.is_number_integer() || (j.is_number_integer() && !j.is_number_unsigned() && j.get<std::int64_t>() < 0))
    field_error(path, "expected a non-negative integer");
  return j.get<std::uint64_t>();
}

inline std::vector<double> numbers(const json& j, const std::string& path) {
  if (!j.is_array()) field_error(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

inline std::vector<std::size_t> indices(const json& j, const std::string& path) {
  if (!j.is_array()) field_error(path, "expected an array of integers");
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(static_cast<std::size_t>(unsigned_int(j[i], path + "[" + std::to_string(i) + "]")));
  return out;
}

inline FourierPotential parse_potential(const json& j) {
  const std::string path = "potential.";
  const double rho = number(require(j, "rho", path), path + "rho");
  const auto& hs = require(j, "harmonics", path);
  if (!hs.is_array()) field_error(path + "harmonics", "expected an array of [k, re, im] triples");
  std::vector<Harmonic> harmonics;
  for (std::size_t i = 0; i < hs.size(); ++i) {
    const std::string hp = path + "harmonics[" + std::to_string(i) + "]";
    if (!hs[i].is_array() || hs[i].size() != 3) field_error(hp, "expected [k, re, im]");
    if (!hs[i][0].is_number_integer()) field_error(hp + "[0]", "harmonic index must be an integer");
    harmonics.push_back({hs[i][0].get<int>(), number(hs[i][1], hp + "[1]"), number(hs[i][2], hp + "[2]")});
  }
  try {
    return FourierPotential(harmonics, rho);
  } catch (const ConfigError& e) {
    field_error("potential", e.what());
  }
}

inline BackgroundSpec parse_background(const json& j, std::uint64_t default_seed) {
  const std::string path = "background.";
  if (!j.is_object()) field_error("background", "expected an object");
  const auto& kind_j = require(j, "kind", path);
  if (!kind_j.is_string()) field_error(path + "kind", "expected a string");
  const std::string kind = kind_j.get<std::string>();
  BackgroundSpec s;
  if (kind == "constant") {
    s.kind = BackgroundKind::constant;
    s.alphabet = j.contains("value") ? std::vector<double>{number(j.at("value"), path + "value")}
                                     : numbers(require(j, "alphabet", path), path + "alphabet");
  } else {
    s.alphabet = numbers(require(j, "alphabet", path), path + "alphabet");
    if (kind == "periodic") {
      s.kind = BackgroundKind::periodic;
      s.pattern = indices(require(j, "pattern", path), path + "pattern");
    } else if (kind == "sturmian") {
      s.kind = BackgroundKind::sturmian;
      s.alpha = number(require(j, "alpha", path), path + "alpha");
      s.beta = j.contains("beta") ? number(j.at("beta"), path + "beta") : 0.0;
    } else if (kind == "bernoulli") {
      s.kind = BackgroundKind::bernoulli;
      s.seed = j.contains("seed") ? unsigned_int(j.at("seed"), path + "seed") : default_seed;
      if (j.contains("probs")) {
        s.probs = numbers(j.at("probs"), path + "probs");
      } else {
        s.probs.assign(s.alphabet.size(), 1.0 / static_cast<double>(s.alphabet.size()));
      }
    } else if (kind == "explicit") {
      s.kind = BackgroundKind::explicit_list;
      const char* key = j.contains("indices") ? "indices" : "pattern";
      s.pattern = indices(require(j, key, path), path + key);
      if (j.contains("extension")) {
        const auto& ext = j.at("extension");
        if (ext == "zero") {
          s.zero_extension = true;
        } else if (ext != "periodic") {
          field_error(path + "extension", "expected \"periodic\" or \"zero\"");
        }
      }
    } else {
      field_error(path + "kind", "unknown kind '" + kind + "'");
    }
  }
  try {
    s.validate();
  } catch (const ConfigError& e) {
    field_error("background", e.what());
  }
  return s;
}

inline std::vector<double> parse_energies(const json& j) {
  if (j.is_number()) return {j.get<double>()};
  if (j.is_array()) {
    auto es = numbers(j, "energies");
    if (es.empty()) field_error("energies", "empty list");
    return es;
  }
  if (!j.is_object()) field_error("energies", "expected a number, a list, or {min, max, count}");
  const double lo = number(require(j, "min", "energies."), "energies.min");
  const double hi = number(require(j, "max", "energies."), "energies.max");
  const auto count = unsigned_int(require(j, "count", "energies."), "energies.count");
  if (count == 0) field_error("energies.count", "must be >= 1");
  if (hi < lo) field_error("energies.max", "must be >= min");
  std::vector<double> es(count);
  for (std::uint64_t i = 0; i < count; ++i)
    es[i] = count == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  return es;
}

}  // namespace detail

inline RunConfig parse_config(const json& j) {
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  RunConfig c;
  if (j.contains("seed")) c.seed = detail::unsigned_int(j.at("seed"), "seed");
  c.potential = detail::parse_potential(detail::require(j, "potential", ""));
  if (j.contains("background")) c.background = detail::parse_background(j.at("background"), c.seed);
  c.lambda = detail::number(detail::require(j, "lambda", ""), "lambda");
  if (!(c.lambda >= 0.0)) detail::field_error("lambda", "must be >= 0");
  if (j.contains("omega")) c.omega = detail::number(j.at("omega"), "omega");
  if (!(c.omega > 0.0 && c.omega < 1.0)) detail::field_error("omega", "must lie in (0,1)");
  if (j.contains("energies")) c.energies = detail::parse_energies(j.at("energies"));
  if (j.contains("N")) c.N = detail::unsigned_int(j.at("N"), "N");
  if (c.N < 1) detail::field_error("N", "must be >= 1");
  if (j.contains("grid_m")) c.grid_m = detail::unsigned_int(j.at("grid_m"), "grid_m");
  if (c.grid_m < 16) detail::field_error("grid_m", "must be >= 16");
  c.delta = j.contains("delta") ? detail::number(j.at("delta"), "delta") : c.potential.rho() / 100.0;
  if (!(c.delta > 0.0 && c.delta < c.potential.rho())) detail::field_error("delta", "must satisfy 0 < delta < rho");
  if (j.contains("q")) {
    c.q = detail::unsigned_int(j.at("q"), "q");
    if (*c.q < c.background.alphabet.size()) detail::field_error("q", "must be >= the background alphabet size");
  }
  if (j.contains("tuple")) c.tuple = detail::numbers(j.at("tuple"), "tuple");
  if (j.contains("N_schedule")) {
    c.n_schedule = detail::indices(j.at("N_schedule"), "N_schedule");
    for (std::size_t i = 0; i < c.n_schedule.size(); ++i) {
      if (c.n_schedule[i] < 1) detail::field_error("N_schedule", "entries must be >= 1");
      if (i > 0 && c.n_schedule[i] <= c.n_schedule[i - 1]) detail::field_error("N_schedule", "must increase");
    }
  }
  if (j.contains("out")) {
    if (!j.at("out").is_string()) detail::field_error("out", "expected a path string");
    c.out = j.at("out").get<std::string>();
  }
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config: " + path + ": " + e.what());
  }
  return parse_config(j);
}

/// The config with every default filled in.
inline json resolved_json(const RunConfig& c) {
  json pot;
  pot["rho"] = c.potential.rho();
  pot["harmonics"] = json::array();
  for (const auto& h : c.potential.harmonics()) pot["harmonics"].push_back({h.k, h.re, h.im});

  const auto& b = c.background;
  json bg;
  bg["kind"] = to_string(b.kind);
  bg["alphabet"] = b.alphabet;
  switch (b.kind) {
    case BackgroundKind::periodic: bg["pattern"] = b.pattern; break;
    case BackgroundKind::explicit_list:
      bg["indices"] = b.pattern;
      bg["extension"] = b.zero_extension ? "zero" : "periodic";
      break;
    case BackgroundKind::sturmian:
      bg["alpha"] = b.alpha;
      bg["beta"] = b.beta;
      break;
    case BackgroundKind::bernoulli:
      bg["seed"] = b.seed;
      bg["probs"] = b.probs;
      break;
    case BackgroundKind::constant: break;
  }

  json j;
  j["potential"] = pot;
  j["background"] = bg;
  j["lambda"] = c.lambda;
  j["omega"] = c.omega;
  j["energies"] = c.energies;
  j["N"] = c.N;
  j["grid_m"] = c.grid_m;
  j["delta"] = c.delta;
  if (c.q) j["q"] = *c.q;
  if (!c.tuple.empty()) j["tuple"] = c.tuple;
  if (!c.n_schedule.empty()) j["N_schedule"] = c.n_schedule;
  j["seed"] = c.seed;
  return j;
}

}  // namespace qplyap
