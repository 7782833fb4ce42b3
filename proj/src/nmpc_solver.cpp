#include "geompc/nmpc_solver.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace geompc {

namespace {

// Timestamps are multiples of the plant step; this absorbs their rounding
// when compared against the refresh period.
constexpr double kClockSlack = 1e-9;
constexpr std::size_t kMaxStepHalvings = 10;
constexpr double kMinDamping = 1.0 / 1048576.0;

void clamp_parameter(const ControlProblem& problem, const SolverConfig& cfg, DecisionVector& u) {
  if (!problem.positive_parameter) return;
  const std::size_t idx = u.layout().parameter_index(*problem.positive_parameter);
  u.values()[idx] = std::max(u.values()[idx], cfg.p_min);
}

}  // namespace

ControlProblem ControlProblem::from_ocp(OcpDefinition ocp, HorizonGrid grid) {
  ControlProblem problem;
  problem.layout = DecisionLayout(grid.steps(), ocp.dims);
  problem.residual = [ocp = std::move(ocp), grid = std::move(grid)](const Vector& x0,
                                                                    const DecisionVector& u) {
    return assemble_residual(ocp, grid, x0, u);
  };
  return problem;
}

Vector ControlProblem::state_from_measurement(const Vector& measured) const {
  return measurement_to_state ? measurement_to_state(measured) : measured;
}

void SolverConfig::validate() const {
  if (!(fd_step > 0.0)) throw ConfigError("solver: fd_step must be positive");
  if (!(precond_period > 0.0)) throw ConfigError("solver: precond_period must be positive");
  if (gmres.max_iters < 1) throw ConfigError("solver: gmres max_iters must be >= 1");
  if (!(gmres.abs_tol > 0.0)) throw ConfigError("solver: gmres abs_tol must be positive");
  if (newton_iters_per_sample < 1) throw ConfigError("solver: newton_iters_per_sample >= 1");
  if (!(init_tol > 0.0) || init_max_iters < 1) throw ConfigError("solver: bad init settings");
  if (!(p_min > 0.0)) throw ConfigError("solver: p_min must be positive");
}

Vector jacobian_vector_product(const ControlProblem& problem, const Vector& x0,
                               const DecisionVector& u, const Vector& f0, const Vector& v,
                               double h) {
  const double v_norm = norm2(v);
  if (!(v_norm > 0.0)) throw Error("jacobian_vector_product: direction must be nonzero");
  const double step = h * std::max(1.0, norm2(u.values()));
  DecisionVector shifted = u;
  axpy(step / v_norm, v, shifted.values());
  Vector jv = problem.residual(x0, shifted);
  jv -= f0;
  jv *= v_norm / step;
  return jv;
}

Matrix exact_jacobian(const ControlProblem& problem, const Vector& x0, const DecisionVector& u,
                      double h) {
  const std::size_t n = u.size();
  const Vector f0 = problem.residual(x0, u);
  Matrix jac(f0.size(), n);
  DecisionVector shifted = u;
  for (std::size_t j = 0; j < n; ++j) {
    const double saved = shifted.values()[j];
    shifted.values()[j] = saved + h;
    Vector col = problem.residual(x0, shifted);
    shifted.values()[j] = saved;
    col -= f0;
    col *= 1.0 / h;
    jac.set_column(j, col);
  }
  return jac;
}

bool refresh_preconditioner(ControllerState& state, const ControlProblem& problem,
                            const Vector& x0, double t_now, const SolverConfig& cfg) {
  PreconditionerState& pc = state.precond;
  const bool stale = !pc.valid || t_now - pc.built_at >= cfg.precond_period - kClockSlack;
  if (!stale) return false;

  pc.builds += 1;
  pc.built_at = t_now;
  try {
    pc.factors = lu_factor(exact_jacobian(problem, x0, state.u, cfg.fd_step));
    pc.valid = true;
    pc.last_build_singular = false;
  } catch (const SingularMatrix&) {
    pc.factors.reset();
    pc.valid = false;
    pc.last_build_singular = true;
  }
  return true;
}

Initialization initialize(const ControlProblem& problem, const Vector& x_measured,
                          [[maybe_unused]] double t0, const SolverConfig& cfg) {
  cfg.validate();
  if (!problem.initial_guess) throw Error("initialize: problem has no initial guess");
  const Vector x0 = problem.state_from_measurement(x_measured);

  Initialization init{problem.initial_guess(x0), {}, {}};
  DecisionVector& u = init.solution;
  clamp_parameter(problem, cfg, u);

  auto fail = [&](const std::string& why, double residual) {
    throw InitializationFailure(
        fmt::format("initialize: {} (|F| = {:.6e} after {} iterations)", why, residual,
                    init.damping_history.size()),
        residual, init.residual_history, init.damping_history);
  };

  Vector f = problem.residual(x0, u);
  double f_norm = residual_norm(f);
  init.residual_history.push_back(f_norm);

  for (std::size_t it = 0; it < cfg.init_max_iters; ++it) {
    if (f_norm <= cfg.init_tol) return init;
    if (!std::isfinite(f_norm)) fail("non-finite residual", f_norm);

    Vector direction;
    try {
      direction = lu_solve(lu_factor(exact_jacobian(problem, x0, u, cfg.fd_step)), -f);
    } catch (const SingularMatrix& e) {
      fail(std::string("singular Jacobian: ") + e.what(), f_norm);
    }

    // Backtrack until the residual norm decreases sufficiently.
    bool accepted = false;
    for (double alpha = 1.0; alpha >= kMinDamping; alpha *= 0.5) {
      DecisionVector trial = u;
      axpy(alpha, direction, trial.values());
      clamp_parameter(problem, cfg, trial);
      Vector f_trial;
      try {
        f_trial = problem.residual(x0, trial);
      } catch (const ChartDomainViolation&) {
        continue;
      }
      const double trial_norm = residual_norm(f_trial);
      if (std::isfinite(trial_norm) && trial_norm < (1.0 - 1e-4 * alpha) * f_norm) {
        u = std::move(trial);
        f = std::move(f_trial);
        f_norm = trial_norm;
        init.damping_history.push_back(alpha);
        init.residual_history.push_back(f_norm);
        accepted = true;
        break;
      }
    }
    if (!accepted) fail("damped Newton stalled", f_norm);
  }
  if (f_norm <= cfg.init_tol) return init;
  fail("iteration limit reached", f_norm);
  return init;  // unreachable
}

SampleResult sample_update(ControllerState& state, const ControlProblem& problem,
                           const Vector& x_measured, double t_now, const SolverConfig& cfg) {
  if (!state.initialized) throw Error("sample_update: controller not initialized");
  const Vector x0 = problem.state_from_measurement(x_measured);

  SampleTelemetry tel;
  tel.t = t_now;
  clamp_parameter(problem, cfg, state.u);

  std::optional<LinearOperator> precond;
  if (cfg.precond_enabled) {
    tel.precond_refreshed = refresh_preconditioner(state, problem, x0, t_now, cfg);
    if (state.precond.valid) {
      precond = LinearOperator::from_lu(*state.precond.factors);
      tel.precond_age = t_now - state.precond.built_at;
    } else {
      tel.precond_fallback = true;
    }
  }

  Vector f = problem.residual(x0, state.u);
  tel.residual_norm_before = residual_norm(f);
  tel.gmres_converged = true;

  for (std::size_t it = 0; it < cfg.newton_iters_per_sample; ++it) {
    const DecisionVector& base = state.u;
    const LinearOperator jac_op{base.size(), [&](const Vector& v) {
                                  if (norm_inf(v) == 0.0) return Vector(v.size());
                                  return jacobian_vector_product(problem, x0, base, f, v,
                                                                 cfg.fd_step);
                                }};
    const GmresReport report =
        gmres_solve(jac_op, -f, Vector(base.size()), precond, cfg.gmres);
    tel.gmres_iters += report.iters_used;
    tel.gmres_converged = tel.gmres_converged && report.converged;

    // Halve the step only when the update leaves the problem's domain.
    double alpha = 1.0;
    bool accepted = false;
    for (std::size_t k = 0; k <= kMaxStepHalvings; ++k, alpha *= 0.5) {
      DecisionVector trial = base;
      axpy(alpha, report.solution, trial.values());
      clamp_parameter(problem, cfg, trial);
      try {
        Vector f_trial = problem.residual(x0, trial);
        state.u = std::move(trial);
        f = std::move(f_trial);
        accepted = true;
        break;
      } catch (const ChartDomainViolation&) {
        tel.step_halvings += 1;
      }
    }
    if (!accepted) break;
  }

  tel.residual_norm = residual_norm(f);
  tel.u_applied = state.u.control(0);
  state.last_residual_norm = tel.residual_norm;
  state.last_gmres_iters = tel.gmres_iters;
  return {tel.u_applied, tel};
}

}  // namespace geompc
