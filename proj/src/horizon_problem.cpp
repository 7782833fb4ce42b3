#include "geompc/horizon_problem.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include <fmt/format.h>

namespace geompc {

HorizonGrid HorizonGrid::uniform(std::size_t steps, double length) {
  if (steps == 0 || !(length > 0.0)) throw Error("HorizonGrid: need steps >= 1 and length > 0");
  HorizonGrid grid(std::vector<double>(steps, length / static_cast<double>(steps)));
  // tau_i = i * dtau exactly, and tau_N pinned to the horizon length.
  for (std::size_t i = 0; i <= steps; ++i)
    grid.tau_[i] = length * static_cast<double>(i) / static_cast<double>(steps);
  return grid;
}

HorizonGrid::HorizonGrid(std::vector<double> step_sizes) : dtau_(std::move(step_sizes)) {
  if (dtau_.empty()) throw Error("HorizonGrid: no steps");
  tau_.resize(dtau_.size() + 1, 0.0);
  for (std::size_t i = 0; i < dtau_.size(); ++i) {
    if (!(dtau_[i] > 0.0)) throw Error("HorizonGrid: step sizes must be positive");
    tau_[i + 1] = tau_[i] + dtau_[i];
  }
}

DecisionVector::DecisionVector(DecisionLayout layout, Vector values)
    : layout_(layout), values_(std::move(values)) {
  if (values_.size() != layout_.size()) {
    throw DimensionMismatch(fmt::format("DecisionVector: {} values for layout of size {}",
                                        values_.size(), layout_.size()));
  }
}

Vector DecisionVector::control(std::size_t stage) const {
  Vector u(layout_.dims().n_u);
  for (std::size_t k = 0; k < u.size(); ++k) u[k] = values_[layout_.control_index(stage, k)];
  return u;
}

void DecisionVector::set_control(std::size_t stage, const Vector& u) {
  if (u.size() != layout_.dims().n_u) throw DimensionMismatch("set_control");
  for (std::size_t k = 0; k < u.size(); ++k) values_[layout_.control_index(stage, k)] = u[k];
}

Vector DecisionVector::multiplier(std::size_t stage) const {
  Vector mu(layout_.dims().n_mu);
  for (std::size_t k = 0; k < mu.size(); ++k)
    mu[k] = values_[layout_.multiplier_index(stage, k)];
  return mu;
}

void DecisionVector::set_multiplier(std::size_t stage, const Vector& mu) {
  if (mu.size() != layout_.dims().n_mu) throw DimensionMismatch("set_multiplier");
  for (std::size_t k = 0; k < mu.size(); ++k)
    values_[layout_.multiplier_index(stage, k)] = mu[k];
}

Vector DecisionVector::terminal_multiplier() const {
  Vector nu(layout_.dims().n_nu);
  for (std::size_t k = 0; k < nu.size(); ++k)
    nu[k] = values_[layout_.terminal_multiplier_index(k)];
  return nu;
}

void DecisionVector::set_terminal_multiplier(const Vector& nu) {
  if (nu.size() != layout_.dims().n_nu) throw DimensionMismatch("set_terminal_multiplier");
  for (std::size_t k = 0; k < nu.size(); ++k)
    values_[layout_.terminal_multiplier_index(k)] = nu[k];
}

Vector DecisionVector::parameters() const {
  Vector p(layout_.dims().n_p);
  for (std::size_t k = 0; k < p.size(); ++k) p[k] = values_[layout_.parameter_index(k)];
  return p;
}

void DecisionVector::set_parameters(const Vector& p) {
  if (p.size() != layout_.dims().n_p) throw DimensionMismatch("set_parameters");
  for (std::size_t k = 0; k < p.size(); ++k) values_[layout_.parameter_index(k)] = p[k];
}

namespace {

void expect_size(const char* name, std::size_t got, std::size_t want) {
  if (got != want) {
    throw DimensionMismatch(fmt::format("OcpDefinition::{} returned {} entries, expected {}",
                                        name, got, want));
  }
}

void expect_shape(const char* name, const Matrix& m, std::size_t rows, std::size_t cols) {
  if (m.rows() != rows || m.cols() != cols) {
    throw DimensionMismatch(fmt::format("OcpDefinition::{} returned {}x{}, expected {}x{}", name,
                                        m.rows(), m.cols(), rows, cols));
  }
}

}  // namespace

void OcpDefinition::validate(const Vector& x_ref, const DecisionVector& u_ref, double tau) const {
  const auto& d = dims;
  expect_size("x_ref", x_ref.size(), d.n_x);
  if (u_ref.layout().dims().n_u != d.n_u || u_ref.layout().dims().n_mu != d.n_mu ||
      u_ref.layout().dims().n_nu != d.n_nu || u_ref.layout().dims().n_p != d.n_p) {
    throw DimensionMismatch("OcpDefinition::validate: decision vector dims differ");
  }
  const Vector u = u_ref.control(0);
  const Vector mu = u_ref.multiplier(0);
  const Vector nu = u_ref.terminal_multiplier();
  const Vector p = u_ref.parameters();
  const Vector lambda(d.n_x);

  if (!f || !f_x || !L || !C || !phi || !psi || !H_u || !H_x || !H_p || !phi_x || !phi_p ||
      !psi_x || !psi_p) {
    throw Error("OcpDefinition::validate: a required callback is missing");
  }
  expect_size("f", f(tau, x_ref, u, p).size(), d.n_x);
  expect_shape("f_x", f_x(tau, x_ref, u, p), d.n_x, d.n_x);
  expect_size("C", C(tau, x_ref, u, p).size(), d.n_mu);
  expect_size("psi", psi(x_ref, p).size(), d.n_nu);
  expect_size("H_u", H_u(tau, x_ref, lambda, u, mu, p).size(), d.n_u);
  expect_size("H_x", H_x(tau, x_ref, lambda, u, mu, p).size(), d.n_x);
  expect_size("H_p", H_p(tau, x_ref, lambda, u, mu, p).size(), d.n_p);
  expect_size("phi_x", phi_x(x_ref, p).size(), d.n_x);
  expect_size("phi_p", phi_p(x_ref, p).size(), d.n_p);
  expect_shape("psi_x", psi_x(x_ref, p), d.n_nu, d.n_x);
  expect_shape("psi_p", psi_p(x_ref, p), d.n_nu, d.n_p);
  if (!std::isfinite(L(tau, x_ref, u, p)) || !std::isfinite(phi(x_ref, p))) {
    throw Error("OcpDefinition::validate: non-finite cost at the reference point");
  }
  expect_size("stepper", step(tau, x_ref, u, p, 1e-3).size(), d.n_x);
}

Vector OcpDefinition::step(double tau, const Vector& x, const Vector& u, const Vector& p,
                           double dtau) const {
  if (stepper) return stepper(tau, x, u, p, dtau);
  Vector next = x;
  axpy(dtau, f(tau, x, u, p), next);
  return next;
}

void forward_recursion(const OcpDefinition& def, const HorizonGrid& grid, const Vector& x0,
                       const DecisionVector& u, TrajectoryWorkspace& ws) {
  const std::size_t n = grid.steps();
  if (u.layout().steps() != n) throw DimensionMismatch("forward_recursion: horizon steps");
  if (x0.size() != def.dims.n_x) throw DimensionMismatch("forward_recursion: x0");
  const Vector p = u.parameters();
  ws.states.resize(n + 1);
  ws.states[0] = x0;
  for (std::size_t i = 0; i < n; ++i) {
    ws.states[i + 1] = def.step(grid.tau(i), ws.states[i], u.control(i), p, grid.dtau(i));
  }
}

void backward_recursion(const OcpDefinition& def, const HorizonGrid& grid,
                        const DecisionVector& u, TrajectoryWorkspace& ws) {
  const std::size_t n = grid.steps();
  if (ws.states.size() != n + 1) {
    throw DimensionMismatch("backward_recursion: states not populated");
  }
  const Vector p = u.parameters();
  const Vector nu = u.terminal_multiplier();
  const Vector& x_n = ws.states[n];

  ws.costates.resize(n + 1);
  Vector lambda = def.phi_x(x_n, p);
  lambda += matvec_transposed(def.psi_x(x_n, p), nu);
  ws.costates[n] = lambda;
  for (std::size_t i = n; i-- > 0;) {
    Vector next = ws.costates[i + 1];
    axpy(grid.dtau(i),
         def.H_x(grid.tau(i), ws.states[i], ws.costates[i + 1], u.control(i), u.multiplier(i), p),
         next);
    ws.costates[i] = std::move(next);
  }
}

Vector assemble_residual(const OcpDefinition& def, const HorizonGrid& grid, const Vector& x0,
                         const DecisionVector& u, TrajectoryWorkspace& ws) {
  forward_recursion(def, grid, x0, u, ws);
  backward_recursion(def, grid, u, ws);

  const DecisionLayout& layout = u.layout();
  const ProblemDims& d = def.dims;
  const std::size_t n = grid.steps();
  const Vector p = u.parameters();
  const Vector nu = u.terminal_multiplier();

  Vector residual(layout.size());
  Vector p_row = def.phi_p(ws.states[n], p);
  p_row += matvec_transposed(def.psi_p(ws.states[n], p), nu);

  for (std::size_t i = 0; i < n; ++i) {
    const double tau = grid.tau(i);
    const double dtau = grid.dtau(i);
    const Vector& x = ws.states[i];
    const Vector& lambda_next = ws.costates[i + 1];
    const Vector ui = u.control(i);
    const Vector mui = u.multiplier(i);

    const Vector hu = def.H_u(tau, x, lambda_next, ui, mui, p);
    for (std::size_t k = 0; k < d.n_u; ++k) residual[layout.control_index(i, k)] = hu[k] * dtau;

    const Vector c = def.C(tau, x, ui, p);
    for (std::size_t k = 0; k < d.n_mu; ++k)
      residual[layout.multiplier_index(i, k)] = c[k] * dtau;

    axpy(dtau, def.H_p(tau, x, lambda_next, ui, mui, p), p_row);
  }

  const Vector psi = def.psi(ws.states[n], p);
  for (std::size_t k = 0; k < d.n_nu; ++k) residual[layout.terminal_multiplier_index(k)] = psi[k];
  for (std::size_t k = 0; k < d.n_p; ++k) residual[layout.parameter_index(k)] = p_row[k];
  return residual;
}

Vector assemble_residual(const OcpDefinition& def, const HorizonGrid& grid, const Vector& x0,
                         const DecisionVector& u) {
  TrajectoryWorkspace ws;
  return assemble_residual(def, grid, x0, u, ws);
}

}  // namespace geompc
