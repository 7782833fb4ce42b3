#include "geompc/hemisphere_problem.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace geompc::hemisphere {

namespace {

constexpr double kChartRadiusSq = 1.0 - kChartZMin * kChartZMin;

double height(double x, double y) {
  const double r2 = x * x + y * y;
  if (!(r2 < 1.0)) {
    throw ChartDomainViolation(fmt::format("point ({}, {}) is outside the unit disk", x, y));
  }
  return std::sqrt(1.0 - r2);
}

void require_chart_domain(double x, double y, const char* where) {
  if (!(x * x + y * y <= kChartRadiusSq)) {
    throw ChartDomainViolation(
        fmt::format("{}: chart point ({:.6f}, {:.6f}) has z below {}", where, x, y, kChartZMin));
  }
}

}  // namespace

HemisphereParams HemisphereParams::as_printed() {
  HemisphereParams p;
  p.y0 = 0.5;
  return p;
}

void HemisphereParams::validate() const {
  if (!(r_u > 0.0)) throw ConfigError("hemisphere: r_u must be positive");
  if (!(x0 * x0 + y0 * y0 < 1.0)) throw ConfigError("hemisphere: start outside the chart");
  if (!(x_f * x_f + y_f * y_f < 1.0)) throw ConfigError("hemisphere: target outside the chart");
}

Vector lift(const Vector& xy) { return {xy[0], xy[1], height(xy[0], xy[1])}; }

Vector chart_coords(const Vector& xyz) { return {xyz[0], xyz[1]}; }

bool in_chart_domain(const Vector& xy) { return xy[0] * xy[0] + xy[1] * xy[1] <= kChartRadiusSq; }

Vector measure_chart_state(const Vector& xyz) {
  if (xyz.size() != 3) throw DimensionMismatch("measure_chart_state: expected (x, y, z)");
  const double r = norm2(xyz);
  if (!(r > 0.0)) throw ChartDomainViolation("measure_chart_state: zero vector");
  if (!(xyz[2] > 0.0)) throw ChartDomainViolation("measure_chart_state: not on upper hemisphere");
  return {xyz[0] / r, xyz[1] / r};
}

Vector ambient_dynamics(const Vector& xyz, double u) {
  const double c = std::cos(u);
  const double s = std::sin(u);
  return {xyz[2] * c, xyz[2] * s, -xyz[0] * c - xyz[1] * s};
}

Vector chart_dynamics(const Vector& xy, double u, double p) {
  const double z = height(xy[0], xy[1]);
  return {p * z * std::cos(u), p * z * std::sin(u)};
}

double constraint_C(double u, double u_s, const HemisphereParams& params) {
  const double du = u - params.c_u;
  return du * du + u_s * u_s - params.r_u * params.r_u;
}

Vector terminal_psi(const Vector& xy, const HemisphereParams& params) {
  return {xy[0] - params.x_f, xy[1] - params.y_f};
}

CostTerms cost_terms(double p, double u_s, const HemisphereParams& params) {
  return {p, -params.w_s * u_s};
}

ManifoldConstraint unit_sphere() {
  return {[](const Vector& y) { return Vector{dot(y, y) - 1.0}; },
          [](const Vector& y) {
            Matrix g(1, y.size());
            for (std::size_t j = 0; j < y.size(); ++j) g(0, j) = 2.0 * y[j];
            return g;
          }};
}

ManifoldChart hemisphere_chart(double u, double p) {
  return {lift, chart_coords,
          [u, p](double, const Vector& z) { return chart_dynamics(z, u, p); }, in_chart_domain};
}

DecisionLayout layout(std::size_t steps) {
  return DecisionLayout(steps, ProblemDims{.n_x = 2, .n_u = 2, .n_mu = 1, .n_nu = 2, .n_p = 1});
}

OcpDefinition make_ocp(const HemisphereParams& params) {
  params.validate();
  OcpDefinition def;
  def.dims = layout(1).dims();

  def.f = [](double, const Vector& x, const Vector& u, const Vector& p) {
    return chart_dynamics(x, u[0], p[0]);
  };
  def.f_x = [](double, const Vector& x, const Vector& u, const Vector& p) {
    const double z = height(x[0], x[1]);
    const double c = std::cos(u[0]);
    const double s = std::sin(u[0]);
    // d sqrt(1 - x^2 - y^2) / d(x, y) = -(x, y) / z
    return Matrix{{-p[0] * c * x[0] / z, -p[0] * c * x[1] / z},
                  {-p[0] * s * x[0] / z, -p[0] * s * x[1] / z}};
  };
  def.L = [params](double, const Vector&, const Vector& u, const Vector& p) {
    return p[0] * cost_terms(p[0], u[1], params).L;
  };
  def.C = [params](double, const Vector&, const Vector& u, const Vector& p) {
    return Vector{p[0] * constraint_C(u[0], u[1], params)};
  };
  def.phi = [params](const Vector&, const Vector& p) { return cost_terms(p[0], 0.0, params).phi; };
  def.psi = [params](const Vector& x, const Vector&) { return terminal_psi(x, params); };

  def.H_u = [params](double, const Vector& x, const Vector& lambda, const Vector& u,
                     const Vector& mu, const Vector& p) {
    const double z = height(x[0], x[1]);
    const double dfu_lambda = z * (-std::sin(u[0]) * lambda[0] + std::cos(u[0]) * lambda[1]);
    return Vector{p[0] * (dfu_lambda + 2.0 * (u[0] - params.c_u) * mu[0]),
                  p[0] * (2.0 * mu[0] * u[1] - params.w_s)};
  };
  def.H_x = [f_x = def.f_x](double tau, const Vector& x, const Vector& lambda, const Vector& u,
                            const Vector&, const Vector& p) {
    return matvec_transposed(f_x(tau, x, u, p), lambda);
  };
  def.H_p = [params](double, const Vector& x, const Vector& lambda, const Vector& u,
                     const Vector& mu, const Vector&) {
    const Vector beta = chart_dynamics(x, u[0], 1.0);
    return Vector{dot(beta, lambda) + mu[0] * constraint_C(u[0], u[1], params) -
                  params.w_s * u[1]};
  };
  def.phi_x = [](const Vector&, const Vector&) { return Vector(2); };
  def.phi_p = [](const Vector&, const Vector&) { return Vector{1.0}; };
  def.psi_x = [](const Vector&, const Vector&) { return Matrix::identity(2); };
  def.psi_p = [](const Vector&, const Vector&) { return Matrix(2, 1); };

  def.stepper = [](double tau, const Vector& x, const Vector& u, const Vector& p, double dtau) {
    const Vector next = local_coordinates_step(hemisphere_chart(u[0], p[0]),
                                               OneStepMethod::explicit_euler, tau, lift(x), dtau);
    return chart_coords(next);
  };
  return def;
}

double great_circle_distance(const Vector& a, const Vector& b) {
  const double c = std::clamp(dot(a, b) / (norm2(a) * norm2(b)), -1.0, 1.0);
  return std::acos(c);
}

DecisionVector initial_guess(const HemisphereParams& params, std::size_t steps, const Vector& x0) {
  DecisionVector u(layout(steps));
  for (std::size_t i = 0; i < steps; ++i) {
    u.set_control(i, {params.c_u, params.r_u});
    u.set_multiplier(i, {params.w_s / (2.0 * params.r_u)});
  }
  u.set_terminal_multiplier({0.0, 0.0});
  u.set_parameters({great_circle_distance(lift(x0), lift(params.target()))});
  return u;
}

Vector residual_rows(const DecisionVector& u, const Vector& x0, const HorizonGrid& grid,
                     const HemisphereParams& params) {
  const std::size_t n = grid.steps();
  const DecisionLayout& lay = u.layout();
  if (lay != layout(n)) throw DimensionMismatch("residual_rows: layout");
  const Vector& v = u.values();
  auto ctrl = [&](std::size_t i) { return v[lay.control_index(i, 0)]; };
  auto slack = [&](std::size_t i) { return v[lay.control_index(i, 1)]; };
  auto mu = [&](std::size_t i) { return v[lay.multiplier_index(i, 0)]; };
  const double nu1 = v[lay.terminal_multiplier_index(0)];
  const double nu2 = v[lay.terminal_multiplier_index(1)];
  const double p = v[lay.parameter_index(0)];
  const double cu = params.c_u;
  const double ru = params.r_u;
  const double ws = params.w_s;

  std::vector<double> xs(n + 1), ys(n + 1), zs(n);
  xs[0] = x0[0];
  ys[0] = x0[1];
  for (std::size_t i = 0; i < n; ++i) {
    const double dt = grid.dtau(i);
    zs[i] = height(xs[i], ys[i]);
    xs[i + 1] = xs[i] + dt * (p * zs[i] * std::cos(ctrl(i)));
    ys[i + 1] = ys[i] + dt * (p * zs[i] * std::sin(ctrl(i)));
    require_chart_domain(xs[i + 1], ys[i + 1], "residual_rows");
  }

  std::vector<double> l1(n + 1), l2(n + 1);
  l1[n] = nu1;
  l2[n] = nu2;
  for (std::size_t i = n; i-- > 0;) {
    const double dt = grid.dtau(i);
    const double proj = std::cos(ctrl(i)) * l1[i + 1] + std::sin(ctrl(i)) * l2[i + 1];
    l1[i] = l1[i + 1] - dt * p * xs[i] / zs[i] * proj;
    l2[i] = l2[i + 1] - dt * p * ys[i] / zs[i] * proj;
  }

  Vector rows(lay.size());
  double p_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dt = grid.dtau(i);
    const double u_i = ctrl(i);
    const double us_i = slack(i);
    const double c_i = (u_i - cu) * (u_i - cu) + us_i * us_i - ru * ru;
    rows[lay.control_index(i, 0)] =
        dt * p *
        (zs[i] * (-std::sin(u_i) * l1[i + 1] + std::cos(u_i) * l2[i + 1]) +
         2.0 * (u_i - cu) * mu(i));
    rows[lay.control_index(i, 1)] = dt * p * (2.0 * mu(i) * us_i - ws);
    rows[lay.multiplier_index(i, 0)] = dt * p * c_i;
    p_sum += dt * (zs[i] * (std::cos(u_i) * l1[i + 1] + std::sin(u_i) * l2[i + 1]) + mu(i) * c_i -
                   ws * us_i);
  }
  rows[lay.terminal_multiplier_index(0)] = xs[n] - params.x_f;
  rows[lay.terminal_multiplier_index(1)] = ys[n] - params.y_f;
  rows[lay.parameter_index(0)] = 1.0 + p_sum;
  return rows;
}

ControlProblem make_control_problem(const HemisphereParams& params, std::size_t steps) {
  if (steps < 1) throw ConfigError("hemisphere: horizon needs at least one step");
  ControlProblem problem = ControlProblem::from_ocp(make_ocp(params), HorizonGrid::uniform(steps));
  problem.measurement_to_state = [](const Vector& measured) {
    return measured.size() == 3 ? measure_chart_state(measured) : measured;
  };
  problem.initial_guess = [params, steps](const Vector& x0) {
    return initial_guess(params, steps, x0);
  };
  problem.positive_parameter = 0;
  return problem;
}

}  // namespace geompc::hemisphere
