#include "geompc/manifold_integrators.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <fmt/format.h>

namespace geompc {

namespace {

constexpr int kTrapezoidalMaxIters = 200;
constexpr int kProjectionMaxIters = 20;
constexpr int kSymmetricMaxIters = 30;

// Iterations stop early once g is at rounding level; the acceptance
// threshold stays kOnManifoldTol.
constexpr double kProjectionTargetTol = 1e-15;

}  // namespace

bool is_symmetric(OneStepMethod method) { return method == OneStepMethod::trapezoidal; }

Vector one_step(OneStepMethod method, const VectorField& field, double tau, const Vector& y,
                double dtau) {
  const Vector f0 = field(tau, y);
  if (f0.size() != y.size()) throw DimensionMismatch("one_step: field dimension");
  Vector next = y;
  axpy(dtau, f0, next);
  if (method == OneStepMethod::explicit_euler) return next;

  // Trapezoidal: fixed-point iteration started from the Euler predictor.
  for (int it = 0; it < kTrapezoidalMaxIters; ++it) {
    Vector candidate = y;
    axpy(0.5 * dtau, f0, candidate);
    axpy(0.5 * dtau, field(tau + dtau, next), candidate);
    const double change = norm_inf(candidate - next);
    next = std::move(candidate);
    if (change <= 1e-16 * (1.0 + norm_inf(next))) break;
  }
  return next;
}

bool on_manifold(const ManifoldConstraint& c, const Vector& y, double tol) {
  return norm_inf(c.g(y)) <= tol;
}

Vector local_coordinates_step(const ManifoldChart& chart, OneStepMethod method, double tau,
                              const Vector& x, double dtau) {
  const Vector z = chart.project_coords(x);
  Vector z_next = one_step(method, chart.reduced_field, tau, z, dtau);
  if (chart.in_domain && !chart.in_domain(z_next)) {
    throw ChartDomainViolation(
        fmt::format("local_coordinates_step: coordinates left the chart domain at tau={}", tau));
  }
  return chart.lift(z_next);
}

Vector project_onto_manifold(const ManifoldConstraint& constraint, const Vector& y_hat) {
  const Matrix g_hat = constraint.jacobian_g(y_hat);
  const std::size_t m = g_hat.rows();

  Vector lambda(m);
  Vector y = y_hat;
  Vector residual = constraint.g(y);
  for (int it = 0; it < kProjectionMaxIters && norm_inf(residual) > kProjectionTargetTol; ++it) {
    // d g(y_hat + G_hat^T lambda) / d lambda = G(y) G_hat^T
    const Matrix jac = matmul(constraint.jacobian_g(y), transpose(g_hat));
    Vector delta;
    try {
      delta = lu_solve(lu_factor(jac), -residual);
    } catch (const SingularMatrix&) {
      break;
    }
    lambda += delta;
    y = y_hat + matvec_transposed(g_hat, lambda);
    const Vector next = constraint.g(y);
    if (norm_inf(next) >= norm_inf(residual) && norm_inf(residual) <= kOnManifoldTol) {
      residual = next;
      break;
    }
    residual = next;
  }
  if (!(norm_inf(residual) <= kOnManifoldTol)) {
    throw ProjectionDivergence(
        fmt::format("projection did not converge: |g| = {:.3e}", norm_inf(residual)));
  }
  return y;
}

Vector standard_projection_step(const ManifoldConstraint& constraint, const VectorField& field,
                                OneStepMethod method, double tau, const Vector& y, double dtau) {
  return project_onto_manifold(constraint, one_step(method, field, tau, y, dtau));
}

Vector symmetric_projection_step(const ManifoldConstraint& constraint, const VectorField& field,
                                 OneStepMethod method, double tau, const Vector& y, double dtau) {
  const Matrix g_start = constraint.jacobian_g(y);
  const std::size_t m = g_start.rows();

  auto endpoint = [&](const Vector& mu) {
    const Vector y_tilde = y + matvec_transposed(g_start, mu);
    const Vector y_hat = one_step(method, field, tau, y_tilde, dtau);
    return y_hat + matvec_transposed(constraint.jacobian_g(y_hat), mu);
  };

  Vector mu(m);
  Vector y_next = endpoint(mu);
  Vector residual = constraint.g(y_next);
  for (int it = 0; it < kSymmetricMaxIters && norm_inf(residual) > kProjectionTargetTol; ++it) {
    Matrix sens(m, m);
    for (std::size_t j = 0; j < m; ++j) {
      const double h = 1e-7 * std::max(1.0, std::abs(mu[j]));
      Vector mu_p = mu;
      mu_p[j] += h;
      sens.set_column(j, (1.0 / h) * (constraint.g(endpoint(mu_p)) - residual));
    }
    Vector delta;
    try {
      delta = lu_solve(lu_factor(sens), -residual);
    } catch (const SingularMatrix&) {
      break;
    }
    const Vector mu_new = mu + delta;
    const Vector y_new = endpoint(mu_new);
    const Vector res_new = constraint.g(y_new);
    const bool stalled = norm_inf(res_new) >= norm_inf(residual);
    if (stalled && norm_inf(residual) <= kOnManifoldTol) break;
    mu = mu_new;
    y_next = y_new;
    residual = res_new;
  }
  if (!(norm_inf(residual) <= kOnManifoldTol)) {
    throw ProjectionDivergence(
        fmt::format("symmetric projection did not converge: |g| = {:.3e}", norm_inf(residual)));
  }
  return y_next;
}

}  // namespace geompc
