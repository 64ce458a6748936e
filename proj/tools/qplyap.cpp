#include <iostream>
#include <optional>
#include <string>
#include <utility>

#include <CLI11.hpp>

#include "qplyap/cli.hpp"
#include "qplyap/parallel.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Lyapunov exponents of quasiperiodic Schrodinger cocycles with finite-valued backgrounds"};
  app.require_subcommand(1);

  std::string config;
  std::string out;
  unsigned threads = 0;
  app.add_option("--threads", threads, "worker threads (0 = machine parallelism; QPLYAP_THREADS overrides)");

  const std::pair<const char*, const char*> commands[] = {
      {"compute", "L_N(E) over the configured energies (CSV)"},
      {"verify", "lower-bound certificate ln(lambda) - C for every energy (JSON)"},
      {"linebound", "certified epsilon and height y0 for one energy tuple (JSON)"},
      {"converge", "L_N along an N schedule for each energy (CSV)"}};
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config, "JSON run config")->required();
    sub->add_option("--out", out, "output path (default: config 'out', else stdout)");
    sub->add_option("--threads", threads, "worker threads");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : qplyap::cli::exit_config;
  }

  qplyap::set_thread_count(threads);
  const std::string command = app.get_subcommands().front()->get_name();
  return qplyap::cli::run(command, config, out.empty() ? std::nullopt : std::optional<std::string>(out), std::cout,
                          std::cerr);
}
