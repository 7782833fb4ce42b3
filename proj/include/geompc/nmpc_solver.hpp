#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "geompc/dense_linalg.hpp"
#include "geompc/gmres.hpp"
#include "geompc/horizon_problem.hpp"

namespace geompc {

/// What the controller needs from a problem: the residual F[U, x0] and a few
/// problem-specific hooks.
struct ControlProblem {
  using ResidualFn = std::function<Vector(const Vector& x0, const DecisionVector& u)>;

  DecisionLayout layout;
  ResidualFn residual;
  /// Maps a measured state to the initial state of the horizon (for example
  /// re-projection onto the manifold). Identity when empty.
  std::function<Vector(const Vector&)> measurement_to_state;
  /// Structured starting point for `initialize`.
  std::function<DecisionVector(const Vector& x0)> initial_guess;
  /// Index into p of a parameter that must stay >= SolverConfig::p_min.
  std::optional<std::size_t> positive_parameter;

  static ControlProblem from_ocp(OcpDefinition ocp, HorizonGrid grid);

  Vector state_from_measurement(const Vector& measured) const;
};

struct SolverConfig {
  double fd_step = 1e-8;
  GmresConfig gmres;
  double precond_period = 0.2;
  bool precond_enabled = true;
  std::size_t newton_iters_per_sample = 1;
  double init_tol = 1e-8;
  std::size_t init_max_iters = 100;
  double p_min = 1e-3;

  /// Throws ConfigError on non-positive steps or periods.
  void validate() const;
};

struct PreconditionerState {
  std::optional<LuFactors> factors;
  double built_at = 0.0;
  bool valid = false;
  std::size_t builds = 0;
  /// Set when the last rebuild hit a singular Jacobian.
  bool last_build_singular = false;
};

struct ControllerState {
  DecisionVector u;
  PreconditionerState precond;
  double last_residual_norm = 0.0;
  std::size_t last_gmres_iters = 0;
  bool initialized = false;

  static ControllerState warm_started(DecisionVector u) {
    ControllerState s;
    s.u = std::move(u);
    s.initialized = true;
    return s;
  }
};

/// Per-sample record for plots and diagnostics.
struct SampleTelemetry {
  double t = 0.0;
  std::size_t gmres_iters = 0;
  bool gmres_converged = false;
  /// ||F||_2 at the measured state before and after the Newton update.
  double residual_norm_before = 0.0;
  double residual_norm = 0.0;
  Vector u_applied;
  /// t - built_at of the preconditioner used, or -1 without one.
  double precond_age = -1.0;
  bool precond_refreshed = false;
  bool precond_fallback = false;
  std::size_t step_halvings = 0;
};

struct SampleResult {
  Vector u_apply;
  SampleTelemetry telemetry;
};

class InitializationFailure : public Error {
 public:
  InitializationFailure(const std::string& what, double final_residual,
                        std::vector<double> residual_history, std::vector<double> damping_history)
      : Error(what),
        final_residual(final_residual),
        residual_history(std::move(residual_history)),
        damping_history(std::move(damping_history)) {}

  double final_residual;
  std::vector<double> residual_history;
  std::vector<double> damping_history;
};

struct Initialization {
  DecisionVector solution;
  std::vector<double> residual_history;
  std::vector<double> damping_history;
};

/// Forward-difference approximation of F_U v along v/|v| with step
/// h * max(1, |U|_2). F0 must equal F[U, x0]. Requires |v| > 0.
Vector jacobian_vector_product(const ControlProblem& problem, const Vector& x0,
                               const DecisionVector& u, const Vector& f0, const Vector& v,
                               double h);

/// Fully materialized forward-difference Jacobian, column j = (F(U + h e_j) - F(U)) / h.
Matrix exact_jacobian(const ControlProblem& problem, const Vector& x0, const DecisionVector& u,
                      double h);

/// Rebuilds and factors the Jacobian when the preconditioner is invalid or at
/// least precond_period old. A singular snapshot leaves it invalid. Returns
/// true when a rebuild was attempted.
bool refresh_preconditioner(ControllerState& state, const ControlProblem& problem,
                            const Vector& x0, double t_now, const SolverConfig& cfg);

/// Damped Newton on F[U, x0] = 0 with the full finite-difference Jacobian,
/// from problem.initial_guess. Throws InitializationFailure.
Initialization initialize(const ControlProblem& problem, const Vector& x_measured, double t0,
                          const SolverConfig& cfg);

/// One real-time update: newton_iters_per_sample Newton-Krylov steps from the
/// warm-started U, then returns u_0. GMRES hitting max_iters is not an error.
SampleResult sample_update(ControllerState& state, const ControlProblem& problem,
                           const Vector& x_measured, double t_now, const SolverConfig& cfg);

}  // namespace geompc
