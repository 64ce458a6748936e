#pragma once

// Command layer: each command turns a RunConfig into the bytes of one output
// file. CSV outputs carry the resolved config and a digest of the data rows in
// leading '#' lines; JSON outputs carry them as "config" and "digest" fields.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qplyap/config.hpp"
#include "qplyap/digest.hpp"
#include "qplyap/errors.hpp"
#include "qplyap/lyapunov.hpp"
#include "qplyap/theory.hpp"

namespace qplyap::cli {

enum ExitCode : int {
  exit_ok = 0,
  exit_config = 1,
  exit_out_of_regime = 2,
  exit_degenerate = 3,
  exit_not_certified = 4,
};

struct CommandOutput {
  std::string bytes;
  int code = exit_ok;
};

namespace detail {

inline std::string csv_document(const std::string& command, const RunConfig& c, const std::string& data) {
  std::string doc = "# qplyap " + command + "\n";
  doc += "# config: " + resolved_json(c).dump() + "\n";
  doc += "# digest: " + fnv1a_hex(data) + "\n";
  return doc + data;
}

inline std::string json_document(const std::string& command, const RunConfig& c, const json& result) {
  json doc;
  doc["command"] = command;
  doc["config"] = resolved_json(c);
  doc["result"] = result;
  doc["digest"] = fnv1a_hex(result.dump());
  return doc.dump(2) + "\n";
}

inline void require_energies(const RunConfig& c) {
  if (c.energies.empty()) throw ConfigError("config: field 'energies': missing");
}

}  // namespace detail

inline std::vector<std::string> config_warnings(const RunConfig& c) {
  std::vector<std::string> out;
  if (auto w = frequency_warning(c.omega)) out.push_back(*w);
  for (auto& w : c.background.warnings()) out.push_back(w);
  return out;
}

inline CommandOutput compute(const RunConfig& c) {
  detail::require_energies(c);
  const auto rows = scan(c.op(), c.energies, c.N, c.grid_m);
  std::string data = "E,N,grid,L_N,half_N_diag,refined_diag\n";
  for (const auto& r : rows) {
    const auto& e = r.estimate;
    data += format_double(r.energy) + "," + std::to_string(e.N) + "," + std::to_string(e.grid_m) + "," +
            format_double(e.value) + "," + format_double(e.half_n_value) + "," + format_double(e.quad_refined) +
            "\n";
  }
  return {detail::csv_document("compute", c, data), exit_ok};
}

inline json certificate_json(const TheoremCertificate& cert) {
  json r;
  r["lambda"] = cert.lambda;
  r["lambda0"] = cert.lambda0;
  r["epsilon"] = cert.epsilon;
  r["y0"] = cert.y0;
  r["delta"] = cert.delta;
  r["q"] = cert.q;
  r["derived_constant"] = cert.derived_constant;
  r["gap_floor"] = cert.gap_floor;
  r["explicit_constant"] = cert.explicit_constant;
  r["energies"] = cert.energies;
  r["l_n"] = cert.l_n;
  r["margins"] = cert.margins;
  r["z_counts"] = cert.z_counts;
  r["key_inequality"] = cert.key_inequality;
  r["min_margin"] = cert.min_margin;
  r["passes"] = cert.passes;
  r["N"] = cert.N;
  r["grid_m"] = cert.grid_m;
  r["potential_digest"] = cert.potential_digest;
  r["background_digest"] = cert.background_digest;
  return r;
}

/// Throws OutOfRegime before anything is written when lambda <= lambda0.
inline CommandOutput verify(const RunConfig& c) {
  detail::require_energies(c);
  const auto cert =
      verify_theorem(c.potential, c.background, c.lambda, c.omega, c.energies, c.N, c.grid_m, c.delta, c.q);
  return {detail::json_document("verify", c, certificate_json(cert)), cert.passes ? exit_ok : exit_not_certified};
}

inline CommandOutput linebound(const RunConfig& c) {
  if (c.tuple.empty()) throw ConfigError("config: field 'tuple': missing or empty");
  const auto lb = linebound_epsilon(c.potential, c.delta, c.tuple);
  json r;
  r["delta"] = lb.delta;
  r["epsilon"] = lb.epsilon;
  r["y0"] = lb.y0;
  r["tuple"] = lb.tuple;
  r["grid_resolution"] = lb.grid_resolution;
  r["certified"] = lb.certified;
  return {detail::json_document("linebound", c, r), exit_ok};
}

/// Default schedule N/8, N/4, N/2, N (duplicates and zeros dropped).
inline std::vector<std::size_t> default_schedule(std::size_t n) {
  std::vector<std::size_t> s;
  for (std::size_t d : {8, 4, 2, 1})
    if (n / d >= 1 && (s.empty() || n / d > s.back())) s.push_back(n / d);
  return s;
}

inline CommandOutput converge(const RunConfig& c) {
  detail::require_energies(c);
  const auto schedule = c.n_schedule.empty() ? default_schedule(c.N) : c.n_schedule;
  std::string data = "E,N,grid,L_N\n";
  for (double e : c.energies) {
    for (const auto& pt : convergence(at_energy(c.op(), e), schedule, c.grid_m))
      data += format_double(e) + "," + std::to_string(pt.N) + "," + std::to_string(c.grid_m) + "," +
              format_double(pt.value) + "\n";
  }
  return {detail::csv_document("converge", c, data), exit_ok};
}

inline CommandOutput dispatch(const std::string& command, const RunConfig& c) {
  if (command == "compute") return compute(c);
  if (command == "verify") return verify(c);
  if (command == "linebound") return linebound(c);
  if (command == "converge") return converge(c);
  throw ConfigError("unknown command '" + command + "'");
}

/// Loads the config, runs the command and writes the output (to out_path, else
/// the config's "out", else stdout). Maps failures to exit codes.
inline int run(const std::string& command, const std::string& config_path,
               const std::optional<std::string>& out_path, std::ostream& out, std::ostream& err) {
  try {
    const RunConfig c = load_config(config_path);
    for (const auto& w : config_warnings(c)) err << "warning: " << w << "\n";
    const CommandOutput result = dispatch(command, c);
    const auto target = out_path ? out_path : c.out;
    if (target) {
      std::ofstream f(*target, std::ios::binary);
      if (!f) throw std::ios_base::failure("cannot open output '" + *target + "'");
      f << result.bytes;
      f.close();
      if (!f) throw std::ios_base::failure("failed writing '" + *target + "'");
    } else {
      out << result.bytes;
    }
    if (result.code == exit_not_certified) err << "certificate failed: min_margin < 0\n";
    return result.code;
  } catch (const OutOfRegime& e) {
    err << "out of regime: " << e.what() << "\nlambda0 = " << format_double(e.lambda0) << "\n";
    return exit_out_of_regime;
  } catch (const DegenerateInput& e) {
    err << e.what() << "\n";
    return exit_degenerate;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return exit_config;
  } catch (const std::ios_base::failure& e) {
    err << "error: " << e.what() << "\n";
    return exit_config;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_config;
  }
}

}  // namespace qplyap::cli
