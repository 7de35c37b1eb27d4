#include <fstream>
#include <iostream>
#include <optional>
#include <utility>

#include <CLI11.hpp>

#include "stochinv/stochinv.hpp"

namespace {

struct Flags {
  std::string config;
  std::string out;
  std::optional<std::size_t> points;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<double> tol_drift, tol_kernel, tol_support;
  std::optional<double> dt;
  std::optional<std::size_t> paths;
};

void add_flags(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "JSON config file")->required();
  sub->add_option("--out", f.out, "report output file (stdout when omitted)");
  sub->add_option("--points", f.points, "boundary sample size");
  sub->add_option("--seed", f.seed, "root seed");
  sub->add_option("--threads", f.threads, "worker threads");
  sub->add_option("--tol-drift", f.tol_drift, "relative drift tolerance");
  sub->add_option("--tol-kernel", f.tol_kernel, "relative kernel tolerance");
  sub->add_option("--tol-support", f.tol_support, "relative support tolerance");
  sub->add_option("--dt", f.dt, "simulation step");
  sub->add_option("--paths", f.paths, "simulated paths per start");
}

void apply(const Flags& f, stochinv::RunConfig& rc) {
  if (!f.out.empty()) rc.out = f.out;
  if (f.points) rc.points = *f.points;
  if (f.seed) rc.seed = *f.seed;
  if (f.threads) rc.threads = *f.threads;
  if (f.tol_drift) rc.checker.tol_drift = *f.tol_drift;
  if (f.tol_kernel) rc.checker.tol_kernel = *f.tol_kernel;
  if (f.tol_support) rc.checker.tol_support = *f.tol_support;
  if (f.dt) rc.sim.dt = *f.dt;
  if (f.paths) rc.sim.n_paths = *f.paths;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical stochastic-invariance checks for jump-diffusions"};
  app.require_subcommand(1);
  Flags flags;
  const std::pair<const char*, const char*> commands[] = {
      {"check", "check invariance conditions on sampled boundary points"},
      {"simulate", "simulate paths and report domain-violation statistics"},
      {"convert", "convert between polynomial model and triplet form"},
      {"crosscheck", "compare checker, maximum-principle probe and simulation"}};
  for (const auto& [name, help] : commands) add_flags(app.add_subcommand(name, help), flags);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : stochinv::kExitError;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  try {
    stochinv::RunConfig rc = stochinv::load_config(flags.config);
    if (!rc.command.empty() && rc.command != command)
      std::cerr << "note: config command '" << rc.command << "' overridden by '" << command << "'\n";
    apply(flags, rc);
    const stochinv::CommandResult res = stochinv::run_command(command, rc);
    if (rc.out.empty()) {
      std::cout << res.report;
    } else {
      std::ofstream os(rc.out, std::ios::binary);
      if (!os) throw stochinv::Error(stochinv::ErrorCode::InvalidArgument, "cannot open output '" + rc.out + "'");
      os << res.report;
    }
    return res.exit;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return stochinv::kExitError;
  }
}
