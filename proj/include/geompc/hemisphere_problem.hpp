#pragma once

#include <cstddef>

#include "geompc/dense_linalg.hpp"
#include "geompc/horizon_problem.hpp"
#include "geompc/manifold_integrators.hpp"
#include "geompc/nmpc_solver.hpp"

namespace geompc::hemisphere {

/// Minimum-time transfer on the unit upper hemisphere with the heading
/// control confined to the band [c_u - r_u, c_u + r_u].
///
/// The defaults start at (x0, y0) = (-0.5, -0.5). With a band of positive
/// headings, y is strictly increasing along every admissible trajectory, so
/// the frequently quoted start (-0.5, 0.5) cannot reach (0.5, 0); see
/// `as_printed()` and the README.
struct HemisphereParams {
  double c_u = 0.5;
  double r_u = 0.1;
  double w_s = 0.005;
  double x0 = -0.5;
  double y0 = -0.5;
  double x_f = 0.5;
  double y_f = 0.0;

  /// Same constants but with the start at (-0.5, 0.5). Infeasible.
  static HemisphereParams as_printed();

  /// Throws ConfigError unless r_u > 0 and both endpoints lie strictly
  /// inside the chart.
  void validate() const;

  Vector start() const { return {x0, y0}; }
  Vector target() const { return {x_f, y_f}; }
};

/// Chart coordinates closer to the equator than this height are rejected.
inline constexpr double kChartZMin = 0.05;

/// alpha(x, y) = (x, y, sqrt(1 - x^2 - y^2)).
Vector lift(const Vector& xy);
Vector chart_coords(const Vector& xyz);
bool in_chart_domain(const Vector& xy);
/// Radially projects an ambient point onto the unit sphere and returns its
/// chart coordinates.
Vector measure_chart_state(const Vector& xyz);

/// (z cos u, z sin u, -x cos u - y sin u).
Vector ambient_dynamics(const Vector& xyz, double u);
/// p * sqrt(1 - x^2 - y^2) * (cos u, sin u). Throws ChartDomainViolation for
/// x^2 + y^2 >= 1.
Vector chart_dynamics(const Vector& xy, double u, double p);

/// (u - c_u)^2 + u_s^2 - r_u^2.
double constraint_C(double u, double u_s, const HemisphereParams& params);
/// (x_N - x_f, y_N - y_f).
Vector terminal_psi(const Vector& xy, const HemisphereParams& params);

struct CostTerms {
  double phi;
  double L;
};
/// phi = p (time to destination), L = -w_s * u_s.
CostTerms cost_terms(double p, double u_s, const HemisphereParams& params);

/// g(y) = |y|^2 - 1.
ManifoldConstraint unit_sphere();
/// Chart of the upper hemisphere with the reduced field of the rescaled
/// dynamics for a fixed heading u and time scale p.
ManifoldChart hemisphere_chart(double u, double p);

/// Layout with n_x = 2, n_u = 2 (heading, slack), n_mu = 1, n_nu = 2, n_p = 1;
/// 3N + 3 unknowns.
DecisionLayout layout(std::size_t steps);

/// Generic problem definition. Running cost and constraint carry the time
/// scale p because the horizon runs over tau in [0, 1]; the stepper is the
/// local-coordinates explicit Euler method.
OcpDefinition make_ocp(const HemisphereParams& params);

/// u_i = c_u, us_i = r_u, mu_i = w_s / (2 r_u), nu = 0, p = great-circle
/// distance between the lifted endpoints.
DecisionVector initial_guess(const HemisphereParams& params, std::size_t steps, const Vector& x0);

double great_circle_distance(const Vector& a, const Vector& b);

/// The KKT residual written out in closed form, independently of
/// assemble_residual. Same row layout.
Vector residual_rows(const DecisionVector& u, const Vector& x0, const HorizonGrid& grid,
                     const HemisphereParams& params);

/// Bundles the OCP, a uniform grid over [0, 1], measurement re-projection and
/// the initial guess for the controller.
ControlProblem make_control_problem(const HemisphereParams& params, std::size_t steps);

}  // namespace geompc::hemisphere
