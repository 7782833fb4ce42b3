#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "geompc/dense_linalg.hpp"

namespace geompc {

/// Dimensions of a discretized finite-horizon problem. Slack variables count
/// as control components.
struct ProblemDims {
  std::size_t n_x = 0;
  std::size_t n_u = 0;
  std::size_t n_mu = 0;
  std::size_t n_nu = 0;
  std::size_t n_p = 0;

  bool operator==(const ProblemDims&) const = default;
};

/// Fictitious-time grid tau_0 = 0 < ... < tau_N = length.
class HorizonGrid {
 public:
  static HorizonGrid uniform(std::size_t steps, double length = 1.0);
  explicit HorizonGrid(std::vector<double> step_sizes);

  std::size_t steps() const { return dtau_.size(); }
  double dtau(std::size_t i) const { return dtau_[i]; }
  double tau(std::size_t i) const { return tau_[i]; }
  double length() const { return tau_.back(); }

 private:
  std::vector<double> dtau_;
  std::vector<double> tau_;
};

/// Offsets of the stacked unknown
///   U = [u (component-major) | mu (component-major) | nu | p].
/// Component-major means entry k of u_i sits at k*N + i, so for the
/// hemisphere problem the block reads [u_0..u_{N-1}, us_0..us_{N-1}].
/// The residual F uses the same row layout.
class DecisionLayout {
 public:
  DecisionLayout() = default;
  DecisionLayout(std::size_t steps, ProblemDims dims) : steps_(steps), dims_(dims) {}

  std::size_t steps() const { return steps_; }
  const ProblemDims& dims() const { return dims_; }
  std::size_t size() const {
    return steps_ * (dims_.n_u + dims_.n_mu) + dims_.n_nu + dims_.n_p;
  }

  std::size_t control_index(std::size_t stage, std::size_t component) const {
    return component * steps_ + stage;
  }
  std::size_t multiplier_index(std::size_t stage, std::size_t component) const {
    return steps_ * dims_.n_u + component * steps_ + stage;
  }
  std::size_t terminal_multiplier_index(std::size_t k) const {
    return steps_ * (dims_.n_u + dims_.n_mu) + k;
  }
  std::size_t parameter_index(std::size_t k) const {
    return steps_ * (dims_.n_u + dims_.n_mu) + dims_.n_nu + k;
  }

  bool operator==(const DecisionLayout&) const = default;

 private:
  std::size_t steps_ = 0;
  ProblemDims dims_;
};

/// Typed view over the stacked unknown U.
class DecisionVector {
 public:
  DecisionVector() = default;
  explicit DecisionVector(DecisionLayout layout) : layout_(layout), values_(layout.size()) {}
  DecisionVector(DecisionLayout layout, Vector values);

  const DecisionLayout& layout() const { return layout_; }
  std::size_t size() const { return values_.size(); }
  Vector& values() { return values_; }
  const Vector& values() const { return values_; }

  Vector control(std::size_t stage) const;
  void set_control(std::size_t stage, const Vector& u);
  Vector multiplier(std::size_t stage) const;
  void set_multiplier(std::size_t stage, const Vector& mu);
  Vector terminal_multiplier() const;
  void set_terminal_multiplier(const Vector& nu);
  Vector parameters() const;
  void set_parameters(const Vector& p);

 private:
  DecisionLayout layout_;
  Vector values_;
};

/// Callback bundle of a finite-horizon optimal control problem. The
/// Hamiltonian is H = L + lambda^T f + mu^T C. All callbacks must be pure.
struct OcpDefinition {
  using StageVector =
      std::function<Vector(double tau, const Vector& x, const Vector& u, const Vector& p)>;
  using StageScalar =
      std::function<double(double tau, const Vector& x, const Vector& u, const Vector& p)>;
  using StageMatrix =
      std::function<Matrix(double tau, const Vector& x, const Vector& u, const Vector& p)>;
  using HamiltonianPartial = std::function<Vector(double tau, const Vector& x,
                                                  const Vector& lambda, const Vector& u,
                                                  const Vector& mu, const Vector& p)>;
  using TerminalVector = std::function<Vector(const Vector& x, const Vector& p)>;
  using TerminalScalar = std::function<double(const Vector& x, const Vector& p)>;
  using TerminalMatrix = std::function<Matrix(const Vector& x, const Vector& p)>;
  /// Returns x_{i+1} = x_i + Phi_i(tau_i, x_i, u_i, p) dtau_i.
  using Stepper = std::function<Vector(double tau, const Vector& x, const Vector& u,
                                       const Vector& p, double dtau)>;

  ProblemDims dims;

  StageVector f;
  StageMatrix f_x;
  StageScalar L;
  StageVector C;
  TerminalScalar phi;
  TerminalVector psi;

  HamiltonianPartial H_u;
  HamiltonianPartial H_x;
  HamiltonianPartial H_p;
  TerminalVector phi_x;
  TerminalVector phi_p;
  TerminalMatrix psi_x;
  TerminalMatrix psi_p;

  /// Structure-preserving one-step map. Explicit Euler on f when empty.
  Stepper stepper;

  /// Probe-evaluates every callback at (tau, x, U's first stage) and throws
  /// DimensionMismatch naming the first callback with a wrong output shape.
  void validate(const Vector& x_ref, const DecisionVector& u_ref, double tau = 0.0) const;

  Vector step(double tau, const Vector& x, const Vector& u, const Vector& p, double dtau) const;
};

/// States x_0..x_N and costates lambda_0..lambda_N of one horizon evaluation.
struct TrajectoryWorkspace {
  std::vector<Vector> states;
  std::vector<Vector> costates;
};

void forward_recursion(const OcpDefinition& def, const HorizonGrid& grid, const Vector& x0,
                       const DecisionVector& u, TrajectoryWorkspace& ws);

/// lambda_N = phi_x^T + psi_x^T nu, then
/// lambda_i = lambda_{i+1} + H_x^T(tau_i, x_i, lambda_{i+1}, u_i, mu_i, p) dtau_i.
/// Uses df/dx in place of dPhi/dx. Requires ws.states from forward_recursion.
void backward_recursion(const OcpDefinition& def, const HorizonGrid& grid,
                        const DecisionVector& u, TrajectoryWorkspace& ws);

/// KKT residual F[U, x0]: [H_u dtau_i | C dtau_i | psi | phi_p + psi_p^T nu + sum H_p dtau_i],
/// laid out like U.
Vector assemble_residual(const OcpDefinition& def, const HorizonGrid& grid, const Vector& x0,
                         const DecisionVector& u, TrajectoryWorkspace& ws);
Vector assemble_residual(const OcpDefinition& def, const HorizonGrid& grid, const Vector& x0,
                         const DecisionVector& u);

inline double residual_norm(const Vector& residual) { return norm2(residual); }

}  // namespace geompc
