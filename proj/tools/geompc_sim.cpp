/// @file
///
/// Closed-loop simulator for the hemisphere minimum-time problem.
///
///   geompc_sim [simulate] [--config FILE] [--out DIR] [--no-precond] [--max-samples K]
///   geompc_sim compare-precond [...]   (or --compare-precond)
///   geompc_sim init-only [...]
///
/// Exit codes: 0 success, 2 solver failure, 3 configuration error.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "geompc/simulation.hpp"

namespace {

constexpr int kExitSolverFailure = 2;
constexpr int kExitConfigError = 3;

struct Options {
  std::string config_path;
  std::string output_dir;
  bool no_precond = false;
  bool compare_flag = false;
  std::optional<std::size_t> max_samples;
};

geompc::SimConfig build_config(const Options& opts) {
  geompc::SimConfig cfg;
  if (!opts.config_path.empty()) cfg = geompc::load_config(opts.config_path);
  if (!opts.output_dir.empty()) cfg.output_dir = opts.output_dir;
  if (opts.no_precond) cfg.solver.precond_enabled = false;
  if (opts.max_samples) cfg.max_samples = *opts.max_samples;
  cfg.validate();
  return cfg;
}

void print_summary(const geompc::SimulationResult& r) {
  fmt::print("initial p (time to destination): {:.6f}\n", r.initial_p());
  fmt::print("samples: {}  stop: {}\n", r.records.size(), r.stop_reason);
  if (!r.records.empty()) {
    const auto& last = r.records.back();
    fmt::print("final plant state: ({:.6f}, {:.6f}, {:.6f})  p = {:.6f}\n", r.final_state[0],
               r.final_state[1], r.final_state[2], last.p);
    fmt::print("mean GMRES iterations: {:.3f}\n", geompc::mean_gmres_iters(r.records));
  }
}

int run_simulate(const geompc::SimConfig& cfg) {
  const auto result = geompc::run_simulation(cfg);
  geompc::emit_plot_data(result.records, cfg.output_dir);
  print_summary(result);
  if (result.failed) {
    fmt::print(stderr, "error: {}\n", result.error);
    return kExitSolverFailure;
  }
  fmt::print("wrote CSV files to {}\n", cfg.output_dir.string());
  return 0;
}

int run_compare(const geompc::SimConfig& cfg) {
  const auto cmp = geompc::compare_preconditioning(cfg);
  geompc::emit_plot_data(cmp.with_precond.records, cfg.output_dir / "precond");
  geompc::emit_plot_data(cmp.without_precond.records, cfg.output_dir / "no_precond");

  fmt::print("{:<16}{:>10}{:>12}{:>10}\n", "run", "samples", "mean iters", "max iters");
  fmt::print("{:<16}{:>10}{:>12.3f}{:>10}\n", "preconditioned", cmp.with_precond.records.size(),
             cmp.mean_iters_with, cmp.max_iters_with);
  fmt::print("{:<16}{:>10}{:>12.3f}{:>10}\n", "plain", cmp.without_precond.records.size(),
             cmp.mean_iters_without, cmp.max_iters_without);
  fmt::print("max chart-state gap between runs: {:.3e}\n", cmp.max_state_gap);

  if (cmp.with_precond.failed || cmp.without_precond.failed) {
    fmt::print(stderr, "error: {}{}\n", cmp.with_precond.error, cmp.without_precond.error);
    return kExitSolverFailure;
  }
  if (!(cmp.mean_iters_with < cmp.mean_iters_without)) {
    fmt::print(stderr, "error: preconditioning did not reduce the mean iteration count\n");
    return kExitSolverFailure;
  }
  return 0;
}

int run_init_only(const geompc::SimConfig& cfg) {
  const auto problem = geompc::hemisphere::make_control_problem(cfg.params, cfg.horizon_steps);
  const geompc::Vector x0 = geompc::hemisphere::lift(cfg.params.start());
  try {
    const auto init = geompc::initialize(problem, x0, 0.0, cfg.solver);
    const auto& u = init.solution;
    const auto f = problem.residual(problem.state_from_measurement(x0), u);
    fmt::print("newton iterations: {}\n", init.damping_history.size());
    fmt::print("|F|_2 = {:.6e}\n", geompc::residual_norm(f));
    fmt::print("p = {:.17g}\n", u.parameters()[0]);
    fmt::print("U =");
    for (double v : u.values()) fmt::print(" {:.17g}", v);
    fmt::print("\n");
    return 0;
  } catch (const geompc::InitializationFailure& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitSolverFailure;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continuation NMPC on the unit hemisphere"};
  Options opts;
  auto add_common = [&opts](CLI::App* cmd) {
    cmd->add_option("--config", opts.config_path, "key = value configuration file");
    cmd->add_option("--out", opts.output_dir, "directory for CSV output");
    cmd->add_flag("--no-precond", opts.no_precond, "disable the periodic LU preconditioner");
    cmd->add_option("--max-samples", opts.max_samples, "cap on controller samples");
  };
  add_common(&app);
  app.add_flag("--compare-precond", opts.compare_flag, "same as the compare-precond command");

  auto* simulate = app.add_subcommand("simulate", "run the closed loop and write CSV files");
  auto* compare = app.add_subcommand("compare-precond", "run with and without preconditioning");
  auto* init_only = app.add_subcommand("init-only", "solve for U at t0 and print it");
  for (auto* cmd : {simulate, compare, init_only}) add_common(cmd);
  app.require_subcommand(0, 1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfigError;
  }

  geompc::SimConfig cfg;
  try {
    cfg = build_config(opts);
  } catch (const geompc::Error& e) {
    fmt::print(stderr, "config error: {}\n", e.what());
    return kExitConfigError;
  }

  try {
    if (*init_only) return run_init_only(cfg);
    if (*compare || opts.compare_flag) return run_compare(cfg);
    return run_simulate(cfg);
  } catch (const geompc::Error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitSolverFailure;
  }
}
