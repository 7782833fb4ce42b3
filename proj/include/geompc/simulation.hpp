#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "geompc/hemisphere_problem.hpp"
#include "geompc/nmpc_solver.hpp"

namespace geompc {

/// Closed-loop run settings. Defaults reproduce the reference hemisphere
/// experiment (with the feasible start, see HemisphereParams).
struct SimConfig {
  std::size_t horizon_steps = 20;
  double dt = 0.00625;
  std::optional<double> t_max;
  std::size_t max_samples = 2000;
  /// The run ends once the predicted time to destination drops to p_stop.
  double p_stop = 0.05;
  hemisphere::HemisphereParams params;
  SolverConfig solver;
  std::filesystem::path output_dir = "geompc_out";
  /// Reserved for measurement noise; runs are deterministic.
  std::uint64_t seed = 0;

  void validate() const;
};

/// Parses `key = value` lines (`#` starts a comment) on top of `base`.
/// Unknown keys and malformed values throw ConfigError.
SimConfig parse_config(const std::string& text, SimConfig base = {});
SimConfig load_config(const std::filesystem::path& path, SimConfig base = {});

struct SampleRecord {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double u = 0.0;
  double u_s0 = 0.0;
  double p = 0.0;
  double residual_norm = 0.0;
  std::size_t gmres_iters = 0;
  bool gmres_converged = false;
  double precond_age = -1.0;
  bool precond_refreshed = false;
  bool precond_fallback = false;
  double sphere_defect = 0.0;
};

struct SimulationResult {
  std::vector<SampleRecord> records;
  std::optional<Initialization> init;
  bool failed = false;
  std::string error;
  std::string stop_reason;
  /// Plant state after the last applied control.
  Vector final_state;

  double initial_p() const;
};

/// Initializes the controller at the start state, then alternates controller
/// updates and plant steps (local-coordinates Euler on the physical
/// dynamics) until p <= p_stop, t_max or max_samples. Controller and plant
/// errors end the run with failed = true; records hold every good sample.
SimulationResult run_simulation(const SimConfig& cfg);

struct PrecondComparison {
  SimulationResult with_precond;
  SimulationResult without_precond;
  double mean_iters_with = 0.0;
  double mean_iters_without = 0.0;
  std::size_t max_iters_with = 0;
  std::size_t max_iters_without = 0;
  /// Largest chart-state difference over the samples both runs share.
  double max_state_gap = 0.0;
};

PrecondComparison compare_preconditioning(const SimConfig& cfg);

double mean_gmres_iters(const std::vector<SampleRecord>& records);

/// Writes trajectory.csv (t,x,y,z,p), control.csv (t,u,u_s0),
/// gmres.csv (t,iters,precond_age), residual.csv (t,normF) and
/// trajectory3d.csv (t,x,y,z). Floats use 17 significant digits.
void emit_plot_data(const std::vector<SampleRecord>& records,
                    const std::filesystem::path& output_dir);

}  // namespace geompc
