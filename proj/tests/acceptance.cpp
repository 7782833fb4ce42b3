// Acceptance checks for the hemisphere controller. One line per criterion;
// the exit code is nonzero when any line fails.

#include <chrono>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "geompc/errors.hpp"
#include "geompc/gmres.hpp"
#include "geompc/hemisphere_problem.hpp"
#include "geompc/simulation.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace geompc;
namespace hs = geompc::hemisphere;

namespace {

constexpr double kTargetTime = 1.2332;

int failures = 0;

void report(const std::string& id, bool pass, const std::string& detail) {
  fmt::print("[{}] {:<4} {}\n", pass ? "PASS" : "FAIL", id, detail);
  if (!pass) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

double sphere_defect(const Vector& y) { return std::abs(dot(y, y) - 1.0); }

VectorField sphere_field(double u) {
  return [u](double, const Vector& y) { return hs::ambient_dynamics(y, u); };
}

void time_to_destination_as_printed() {
  SimConfig cfg;
  cfg.params = hs::HemisphereParams::as_printed();
  const auto t0 = std::chrono::steady_clock::now();
  const ControlProblem problem = hs::make_control_problem(cfg.params, cfg.horizon_steps);
  try {
    const Initialization init = initialize(problem, cfg.params.start(), 0.0, cfg.solver);
    const double p = init.solution.parameters()[0];
    report("1a", std::abs(p - kTargetTime) <= 0.05 && seconds_since(t0) < 60.0,
           fmt::format("time to destination from (-0.5, 0.5): p = {:.6f}", p));
  } catch (const InitializationFailure& e) {
    report("1a", false,
           fmt::format("time to destination from (-0.5, 0.5): no solution, {}. Every heading in "
                       "[0.4, 0.6] moves y upwards, so y = 0 is unreachable from y0 = 0.5",
                       e.what()));
  }
}

void time_to_destination(const SimulationResult& run, double runtime) {
  const double p = run.initial_p();
  const bool ok = !run.failed && std::abs(p - kTargetTime) <= 0.05 && runtime < 60.0;
  report("1b", ok,
         fmt::format("time to destination from (-0.5, -0.5): p = {:.6f} (|p - {}| = {:.4f} <= "
                     "0.05), initialization + {} samples in {:.3f} s (< 60 s)",
                     p, kTargetTime, std::abs(p - kTargetTime), run.records.size(), runtime));
}

void control_band(const SimulationResult& run) {
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& s : run.records) {
    lo = std::min(lo, s.u);
    hi = std::max(hi, s.u);
  }
  const bool ok = !run.failed && !run.records.empty() && lo >= 0.4 - 1e-3 && hi <= 0.6 + 1e-3;
  report("2", ok,
         fmt::format("applied control within [0.399, 0.601] over {} samples: range [{:.5f}, {:.5f}]",
                     run.records.size(), lo, hi));
}

void manifold_conservation(const SimulationResult& run) {
  double plant = 0.0;
  for (const auto& s : run.records) plant = std::max(plant, s.sphere_defect);
  plant = std::max(plant, sphere_defect(run.final_state));
  report("3a", !run.records.empty() && plant <= 1e-12,
         fmt::format("local-coordinates plant: max |x^2+y^2+z^2-1| = {:.3e} (<= 1e-12)", plant));

  const double dt = 0.00625;
  const auto heading = [](int i) { return 0.5 + 0.1 * std::sin(0.01 * i); };
  Vector ys = hs::lift({-0.5, -0.5}), yy = ys;
  double standard = 0.0, symmetric = 0.0;
  for (int i = 0; i < 10000; ++i) {
    ys = standard_projection_step(hs::unit_sphere(), sphere_field(heading(i)),
                                  OneStepMethod::explicit_euler, 0.0, ys, dt);
    yy = symmetric_projection_step(hs::unit_sphere(), sphere_field(heading(i)),
                                   OneStepMethod::explicit_euler, 0.0, yy, dt);
    standard = std::max(standard, sphere_defect(ys));
    symmetric = std::max(symmetric, sphere_defect(yy));
  }
  report("3b", standard <= 1e-9,
         fmt::format("standard projection, 1e4 open-loop steps: max defect {:.3e} (<= 1e-9)",
                     standard));
  report("3c", symmetric <= 1e-9,
         fmt::format("symmetric projection, 1e4 open-loop steps: max defect {:.3e} (<= 1e-9)",
                     symmetric));
}

void preconditioning(const PrecondComparison& cmp) {
  std::size_t after_refresh = 0, refreshes = 0;
  for (const auto& s : cmp.with_precond.records) {
    if (!s.precond_refreshed) continue;
    ++refreshes;
    after_refresh = std::max(after_refresh, s.gmres_iters);
  }
  const std::size_t max_iters = std::max(cmp.max_iters_with, cmp.max_iters_without);
  const bool ok = !cmp.with_precond.failed && !cmp.without_precond.failed &&
                  cmp.mean_iters_with < cmp.mean_iters_without && max_iters <= 20 &&
                  refreshes > 0 && after_refresh <= 3;
  report("4", ok,
         fmt::format("mean GMRES iterations {:.3f} with LU vs {:.3f} without; max {} (<= 20); "
                     "max {} after each of {} refreshes (<= 3)",
                     cmp.mean_iters_with, cmp.mean_iters_without, max_iters, after_refresh,
                     refreshes));
}

void residual_health(const SimulationResult& run) {
  std::size_t finite = 0, small = 0;
  double worst = 0.0;
  for (const auto& s : run.records) {
    if (std::isfinite(s.residual_norm)) ++finite;
    if (s.residual_norm < 1e-2) ++small;
    worst = std::max(worst, s.residual_norm);
  }
  const std::size_t n = run.records.size();
  const double share = n ? static_cast<double>(small) / static_cast<double>(n) : 0.0;
  report("5", n > 0 && finite == n && share >= 0.95,
         fmt::format("|F|_2 finite at {}/{} samples, below 1e-2 at {:.1f}% (>= 95%), max {:.3e}",
                     finite, n, 100.0 * share, worst));
}

void residual_equivalence() {
  const hs::HemisphereParams params;
  const HorizonGrid grid = HorizonGrid::uniform(20);
  const OcpDefinition def = hs::make_ocp(params);
  std::mt19937_64 rng(606);
  std::uniform_real_distribution<double> heading(0.4, 0.6), mult(-0.5, 0.5), scale(0.3, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    DecisionVector u(hs::layout(20));
    for (std::size_t i = 0; i < 20; ++i) {
      u.set_control(i, {heading(rng), 0.2 * mult(rng)});
      u.set_multiplier(i, {mult(rng)});
    }
    u.set_terminal_multiplier({mult(rng), mult(rng)});
    u.set_parameters({scale(rng)});
    const Vector a = assemble_residual(def, grid, params.start(), u);
    const Vector b = hs::residual_rows(u, params.start(), grid, params);
    worst = std::max(worst, norm_inf(a - b));
  }
  report("6a", worst <= 1e-12,
         fmt::format("closed-form vs generic residual on 100 random U: max entry gap {:.3e} "
                     "(<= 1e-12)",
                     worst));
}

void jacobian_equivalence(const Initialization& init) {
  const hs::HemisphereParams params;
  const ControlProblem problem = hs::make_control_problem(params, 20);
  const Vector x0 = params.start();
  const Matrix jac = exact_jacobian(problem, x0, init.solution, 1e-8);
  const Vector f0 = problem.residual(x0, init.solution);
  double worst = 0.0;
  for (std::size_t c = 0; c < jac.cols(); ++c) {
    Vector e(jac.cols());
    e[c] = 1.0;
    const Vector col = jac.column(c);
    const Vector jv = jacobian_vector_product(problem, x0, init.solution, f0, e, 1e-8);
    worst = std::max(worst, norm2(jv - col) / std::max(norm2(col), 1e-300));
  }
  report("6b", worst <= 1e-4,
         fmt::format("finite-difference Jacobian columns vs directional derivative at the "
                     "initialized U: max relative gap {:.3e} (<= 1e-4)",
                     worst));
}

void gmres_equivalence() {
  std::mt19937_64 rng(707);
  std::uniform_int_distribution<std::size_t> dim(1, 40);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = dim(rng);
    const Matrix a = geompc::testing::random_matrix(rng, n, n, 3.0);
    const Vector b = geompc::testing::random_vector(rng, n);
    const auto report =
        gmres_solve(LinearOperator::from_matrix(a), b, Vector(n), std::nullopt, {n, 1e-12});
    const Vector direct = lu_solve(lu_factor(a), b);
    worst = std::max(worst, norm2(report.solution - direct) / norm2(direct));
  }
  report("6c", worst <= 1e-8,
         fmt::format("GMRES vs LU on 200 random systems (n <= 40): max relative error {:.3e} "
                     "(<= 1e-8)",
                     worst));
}

void gradient_equivalence() {
  using geompc::testing::Pendulum;
  const OcpDefinition def = Pendulum::ocp();
  const std::vector<double> dtau{0.05, 0.1, 0.08, 0.12, 0.1, 0.05, 0.1, 0.1};
  const HorizonGrid grid(dtau);
  const DecisionLayout layout(dtau.size(), def.dims);
  const Vector x0{0.4, -0.2};
  std::mt19937_64 rng(808);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    DecisionVector u(layout, geompc::testing::random_vector(rng, layout.size()));
    u.set_parameters({1.0 + 0.5 * u.parameters()[0]});
    const Vector residual = assemble_residual(def, grid, x0, u);
    for (std::size_t i = 0; i < layout.steps(); ++i) {
      const std::size_t j = layout.control_index(i, 0);
      Vector up = u.values(), um = u.values();
      up[j] += 1e-7;
      um[j] -= 1e-7;
      const double fd =
          (Pendulum::lagrangian(up, x0, dtau) - Pendulum::lagrangian(um, x0, dtau)) / 2e-7;
      worst = std::max(worst, std::abs(fd - residual[j]));
    }
  }
  report("6d", worst <= 1e-6,
         fmt::format("H_u block vs central-difference gradient of the discrete Lagrangian "
                     "(flat synthetic problem): max gap {:.3e} (<= 1e-6)",
                     worst));
}

void reversibility() {
  std::mt19937_64 rng(909);
  std::uniform_real_distribution<double> coord(-0.6, 0.6), heading(0.4, 0.6), h(0.001, 0.05);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const Vector y = hs::lift({coord(rng), coord(rng)});
    const double u = heading(rng), dt = h(rng);
    const Vector fwd = symmetric_projection_step(hs::unit_sphere(), sphere_field(u),
                                                 OneStepMethod::trapezoidal, 0.0, y, dt);
    const Vector back = symmetric_projection_step(hs::unit_sphere(), sphere_field(u),
                                                  OneStepMethod::trapezoidal, 0.0, fwd, -dt);
    worst = std::max(worst, norm2(back - y));
  }
  report("7a", worst <= 1e-9,
         fmt::format("symmetric projection (trapezoidal base) round trip: max error {:.3e} "
                     "(<= 1e-9)",
                     worst));
}

void convergence_order() {
  const double u = 0.5, horizon = 0.5;
  const Vector y0 = hs::lift({-0.5, -0.5});
  const Vector exact = geompc::testing::exact_rotation(y0, u, horizon);
  struct Named {
    const char* name;
    std::function<Vector(const Vector&, double)> step;
  };
  const std::vector<Named> steppers{
      {"local coordinates",
       [&](const Vector& y, double h) {
         return local_coordinates_step(hs::hemisphere_chart(u, 1.0),
                                       OneStepMethod::explicit_euler, 0.0, y, h);
       }},
      {"standard projection",
       [&](const Vector& y, double h) {
         return standard_projection_step(hs::unit_sphere(), sphere_field(u),
                                         OneStepMethod::explicit_euler, 0.0, y, h);
       }},
      {"symmetric projection",
       [&](const Vector& y, double h) {
         return symmetric_projection_step(hs::unit_sphere(), sphere_field(u),
                                          OneStepMethod::explicit_euler, 0.0, y, h);
       }},
  };
  const char* ids[] = {"7b", "7c", "7d"};
  for (std::size_t k = 0; k < steppers.size(); ++k) {
    auto error_at = [&](int steps) {
      Vector y = y0;
      for (int i = 0; i < steps; ++i) y = steppers[k].step(y, horizon / steps);
      return norm2(y - exact);
    };
    const double e1 = error_at(50), e2 = error_at(100), e3 = error_at(200);
    const double r1 = e1 / e2, r2 = e2 / e3;
    const bool ok = std::abs(r1 - 2.0) <= 0.4 && std::abs(r2 - 2.0) <= 0.4;
    report(ids[k], ok,
           fmt::format("{} (Euler base) error ratios under step halving: {:.3f}, {:.3f} "
                       "(2 +/- 20%)",
                       steppers[k].name, r1, r2));
  }
}

}  // namespace

int main() {
  time_to_destination_as_printed();

  SimConfig cfg;
  const auto t0 = std::chrono::steady_clock::now();
  const SimulationResult run = run_simulation(cfg);
  const double runtime = seconds_since(t0);
  if (run.failed) fmt::print("closed-loop run failed: {}\n", run.error);

  time_to_destination(run, runtime);
  control_band(run);
  manifold_conservation(run);
  preconditioning(compare_preconditioning(cfg));
  residual_health(run);
  residual_equivalence();
  if (run.init) {
    jacobian_equivalence(*run.init);
  } else {
    report("6b", false, "no initialized U to test at");
  }
  gmres_equivalence();
  gradient_equivalence();
  reversibility();
  convergence_order();

  fmt::print("{} check(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
