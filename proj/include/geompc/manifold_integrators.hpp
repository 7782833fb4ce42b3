#pragma once

#include <functional>

#include "geompc/dense_linalg.hpp"

namespace geompc {

/// Right-hand side y' = field(tau, y). Controls and parameters are bound by
/// the caller.
using VectorField = std::function<Vector(double tau, const Vector& y)>;

/// Base one-step integrators that the manifold steppers wrap.
enum class OneStepMethod {
  explicit_euler,
  /// Implicit trapezoidal rule; symmetric (time-reversible).
  trapezoidal,
};

bool is_symmetric(OneStepMethod method);

/// One step y_i -> y_{i+1} of the base method with step dtau (dtau may be
/// negative, which integrates the time-reversed system).
Vector one_step(OneStepMethod method, const VectorField& field, double tau, const Vector& y,
                double dtau);

/// Manifold {y : g(y) = 0} given by the constraint residual and its Jacobian
/// G(y) = g'(y) (m x n, m < n).
struct ManifoldConstraint {
  std::function<Vector(const Vector&)> g;
  std::function<Matrix(const Vector&)> jacobian_g;
};

inline constexpr double kOnManifoldTol = 1e-10;
inline constexpr double kChartLiftTol = 1e-12;

bool on_manifold(const ManifoldConstraint& c, const Vector& y, double tol = kOnManifoldTol);

/// Local parametrization x = lift(z) of the manifold together with the
/// reduced vector field z' = reduced_field(tau, z).
struct ManifoldChart {
  std::function<Vector(const Vector&)> lift;
  std::function<Vector(const Vector&)> project_coords;
  VectorField reduced_field;
  /// Chart domain test on coordinates; steps landing outside raise
  /// ChartDomainViolation.
  std::function<bool(const Vector&)> in_domain;
};

/// Local-coordinates method: z_i = project_coords(x_i), one base step on the
/// reduced field, x_{i+1} = lift(z_{i+1}).
Vector local_coordinates_step(const ManifoldChart& chart, OneStepMethod method, double tau,
                              const Vector& x, double dtau);

/// Orthogonal projection of y_hat onto the manifold along G(y_hat)^T,
/// i.e. y = y_hat + G(y_hat)^T lambda with g(y) = 0, solved by Newton on
/// lambda. Throws ProjectionDivergence after 20 iterations.
Vector project_onto_manifold(const ManifoldConstraint& constraint, const Vector& y_hat);

/// Standard projection method: base step in the ambient space, then
/// orthogonal projection.
Vector standard_projection_step(const ManifoldConstraint& constraint, const VectorField& field,
                                OneStepMethod method, double tau, const Vector& y, double dtau);

/// Symmetric projection method. With a single multiplier mu:
///   y_tilde = y + G(y)^T mu,  y_hat = Phi(y_tilde),  y_next = y_hat + G(y_hat)^T mu,
/// with mu chosen so that g(y_next) = 0 (Newton with finite-difference
/// sensitivity, at most 30 iterations). Time-reversible when the base method
/// is symmetric; an explicit Euler base is accepted but gives up reversibility.
Vector symmetric_projection_step(const ManifoldConstraint& constraint, const VectorField& field,
                                 OneStepMethod method, double tau, const Vector& y, double dtau);

}  // namespace geompc
