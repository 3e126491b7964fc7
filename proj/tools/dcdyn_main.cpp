// Command-line front end: run, validate and list scenarios.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>

#include "dcdyn/dcdyn.hpp"

namespace {

enum ExitCode { kOk = 0, kScenarioError = 1, kIoError = 2 };

struct RunOptions {
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::optional<double> dt;
  std::optional<double> duration;
  std::string out = ".";
};

int cmd_run(const RunOptions& o) {
  dcdyn::Scenario sc = dcdyn::load_scenario(o.scenario);
  if (o.seed) sc.seed = *o.seed;
  if (o.dt) sc.dt_s = *o.dt;
  if (o.duration) sc.duration_s = *o.duration;
  const dcdyn::SimLog log = dcdyn::run(sc);
  dcdyn::emit_csv(log, o.out);
  std::cout << sc.name << ": " << log.rows() << " rows, " << log.events.size() << " events -> "
            << o.out << "\n";
  return kOk;
}

int cmd_validate(const std::string& path) {
  const dcdyn::Scenario sc = dcdyn::load_scenario(path);
  std::size_t segments = 0;
  for (const auto& dc : sc.dcs) segments += dc.effective_segments().size();
  std::cout << "ok: " << sc.name << " (" << sc.grid.network.bus_count() << " buses, "
            << sc.dcs.size() << " data centers, " << segments << " UPS segments, "
            << sc.events.size() << " events)\n";
  for (const auto& dc : sc.dcs) {
    const auto& r = dc.ups.reconnection;
    std::cout << "  " << dc.id << ": pattern=" << dcdyn::to_string(dc.params.pattern)
              << " scheme=" << dcdyn::to_string(r.scheme);
    if (r.scheme == dcdyn::ReconnectScheme::Delayed ||
        r.scheme == dcdyn::ReconnectScheme::DisturbanceCounting)
      std::cout << "(" << r.t_delay_s << ")";
    std::cout << "\n";
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Data-center dynamic load simulator"};
  app.require_subcommand(1);

  RunOptions run_opts;
  CLI::App* run = app.add_subcommand("run", "Run a scenario and write CSV logs");
  run->add_option("--scenario", run_opts.scenario, "Builtin name or scenario file")->required();
  run->add_option("--seed", run_opts.seed, "Override the random seed");
  run->add_option("--dt", run_opts.dt, "Override the step size, s");
  run->add_option("--duration", run_opts.duration, "Override the duration, s");
  run->add_option("--out", run_opts.out, "Output directory");

  std::string validate_path;
  CLI::App* validate = app.add_subcommand("validate", "Parse and check a scenario");
  validate->add_option("--scenario", validate_path, "Builtin name or scenario file")->required();

  CLI::App* list = app.add_subcommand("list-builtin", "List bundled scenarios");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kScenarioError;
  }

  try {
    if (*run) return cmd_run(run_opts);
    if (*validate) return cmd_validate(validate_path);
    if (*list) {
      for (const std::string& name : dcdyn::builtin_names()) std::cout << name << "\n";
      return kOk;
    }
  } catch (const dcdyn::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIoError;
  } catch (const dcdyn::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kScenarioError;
  }
  return kOk;
}
