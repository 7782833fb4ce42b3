#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "geompc/dense_linalg.hpp"

namespace geompc {

/// A square linear map given only through its action. Finite-difference
/// Jacobian products are accepted even though they are only approximately
/// linear.
struct LinearOperator {
  std::size_t dim = 0;
  std::function<Vector(const Vector&)> apply;

  static LinearOperator from_matrix(const Matrix& a);
  /// Applies the inverse of the factored matrix.
  static LinearOperator from_lu(const LuFactors& f);
};

struct GmresConfig {
  std::size_t max_iters = 20;
  double abs_tol = 1e-5;
};

struct GmresReport {
  Vector solution;
  std::size_t iters_used = 0;
  /// Preconditioned residual norm of `solution`, from the least-squares
  /// recurrence.
  double final_residual_norm = 0.0;
  bool converged = false;
  /// The Arnoldi process hit an invariant subspace before max_iters.
  bool breakdown = false;
  /// Residual norm before the first iteration and after each iteration.
  std::vector<double> residual_history;
};

inline constexpr double kArnoldiBreakdownThreshold = 1e-14;

/// Unrestarted GMRES with optional left preconditioning: minimizes
/// ||M^{-1}(rhs - A x)||_2 over x0 + K_k(M^{-1}A, M^{-1}r0). Arnoldi uses
/// modified Gram-Schmidt; the Hessenberg least-squares problem is reduced
/// with Givens rotations. Stops at the first iterate whose preconditioned
/// residual is <= abs_tol, at max_iters, or on breakdown.
GmresReport gmres_solve(const LinearOperator& op, const Vector& rhs, const Vector& x0,
                        const std::optional<LinearOperator>& precond, const GmresConfig& cfg);

}  // namespace geompc
