#include "geompc/gmres.hpp"

#include <cmath>
#include <string>

namespace geompc {

LinearOperator LinearOperator::from_matrix(const Matrix& a) {
  if (a.rows() != a.cols()) throw DimensionMismatch("LinearOperator::from_matrix: not square");
  return {a.rows(), [a](const Vector& v) { return matvec(a, v); }};
}

LinearOperator LinearOperator::from_lu(const LuFactors& f) {
  return {f.dim, [f](const Vector& v) { return lu_solve(f, v); }};
}

namespace {

struct Givens {
  double c = 1.0;
  double s = 0.0;

  static Givens annihilating(double a, double b) {
    if (b == 0.0) return {1.0, 0.0};
    const double r = std::hypot(a, b);
    return {a / r, b / r};
  }

  void apply(double& a, double& b) const {
    const double t = c * a + s * b;
    b = -s * a + c * b;
    a = t;
  }
};

}  // namespace

GmresReport gmres_solve(const LinearOperator& op, const Vector& rhs, const Vector& x0,
                        const std::optional<LinearOperator>& precond, const GmresConfig& cfg) {
  const std::size_t n = op.dim;
  if (rhs.size() != n || x0.size() != n) {
    throw DimensionMismatch("gmres_solve: operator dim " + std::to_string(n) + ", rhs " +
                            std::to_string(rhs.size()) + ", x0 " + std::to_string(x0.size()));
  }
  if (precond && precond->dim != n) {
    throw DimensionMismatch("gmres_solve: preconditioner dim " + std::to_string(precond->dim));
  }
  if (cfg.max_iters < 1 || !(cfg.abs_tol > 0.0)) {
    throw Error("gmres_solve: need max_iters >= 1 and abs_tol > 0");
  }

  auto apply_system = [&](const Vector& v) {
    Vector w = op.apply(v);
    return precond ? precond->apply(w) : w;
  };

  GmresReport report;
  Vector r0 = rhs;
  if (norm_inf(x0) != 0.0) r0 -= op.apply(x0);
  if (precond) r0 = precond->apply(r0);

  const double beta = norm2(r0);
  report.residual_history.push_back(beta);
  if (beta <= cfg.abs_tol) {
    report.solution = x0;
    report.final_residual_norm = beta;
    report.converged = true;
    return report;
  }

  const std::size_t m = std::min(cfg.max_iters, n);
  std::vector<Vector> basis;
  basis.reserve(m + 1);
  basis.push_back((1.0 / beta) * r0);

  // Column k of the Hessenberg matrix, rotated into upper-triangular form.
  std::vector<Vector> hess;
  hess.reserve(m);
  std::vector<Givens> rotations;
  rotations.reserve(m);
  std::vector<double> g(m + 1, 0.0);
  g[0] = beta;

  double residual = beta;
  std::size_t k = 0;
  while (k < m) {
    Vector w = apply_system(basis[k]);
    Vector h(k + 2);
    for (std::size_t j = 0; j <= k; ++j) {
      h[j] = dot(w, basis[j]);
      axpy(-h[j], basis[j], w);
    }
    const double h_next = norm2(w);
    h[k + 1] = h_next;

    for (std::size_t j = 0; j < k; ++j) rotations[j].apply(h[j], h[j + 1]);
    if (std::hypot(h[k], h[k + 1]) < kArnoldiBreakdownThreshold) {
      // The new direction adds nothing (singular operator); keep the previous iterate.
      report.breakdown = true;
      break;
    }
    const Givens rot = Givens::annihilating(h[k], h[k + 1]);
    rot.apply(h[k], h[k + 1]);
    rot.apply(g[k], g[k + 1]);
    rotations.push_back(rot);
    hess.push_back(std::move(h));

    residual = std::abs(g[k + 1]);
    report.residual_history.push_back(residual);
    ++k;

    if (residual <= cfg.abs_tol) break;
    if (h_next < kArnoldiBreakdownThreshold) {
      report.breakdown = true;
      break;
    }
    if (k < m) basis.push_back((1.0 / h_next) * w);
  }

  // Back substitution on the k x k triangular system.
  std::vector<double> y(k, 0.0);
  for (std::size_t ii = k; ii-- > 0;) {
    double s = g[ii];
    for (std::size_t j = ii + 1; j < k; ++j) s -= hess[j][ii] * y[j];
    y[ii] = s / hess[ii][ii];
  }

  report.solution = x0;
  for (std::size_t j = 0; j < k; ++j) axpy(y[j], basis[j], report.solution);
  report.iters_used = k;
  report.final_residual_norm = residual;
  report.converged = residual <= cfg.abs_tol;
  return report;
}

}  // namespace geompc
