#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "geompc/errors.hpp"
#include "geompc/hemisphere_problem.hpp"
#include "geompc/horizon_problem.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace geompc;
namespace hs = geompc::hemisphere;

namespace {

OcpDefinition drift_free(ProblemDims dims) {
  OcpDefinition d;
  d.dims = dims;
  d.f = [n = dims.n_x](double, const Vector&, const Vector&, const Vector&) { return Vector(n); };
  d.f_x = [n = dims.n_x](double, const Vector&, const Vector&, const Vector&) {
    return Matrix(n, n);
  };
  d.L = [](double, const Vector&, const Vector& u, const Vector&) { return dot(u, u); };
  d.C = [](double, const Vector&, const Vector& u, const Vector&) { return Vector{u[0] * u[0] - 1.0}; };
  d.phi = [](const Vector&, const Vector&) { return 0.0; };
  d.psi = [](const Vector& x, const Vector&) { return x; };
  d.H_u = [](double, const Vector&, const Vector& l, const Vector& u, const Vector& mu,
             const Vector&) { return Vector{2.0 * u[0] + l[0] + 2.0 * mu[0] * u[0]}; };
  d.H_x = [n = dims.n_x](double, const Vector&, const Vector&, const Vector&, const Vector&,
                         const Vector&) { return Vector(n); };
  d.H_p = [](double, const Vector&, const Vector&, const Vector&, const Vector&, const Vector&) {
    return Vector{1.0};
  };
  d.phi_x = [n = dims.n_x](const Vector&, const Vector&) { return Vector(n); };
  d.phi_p = [](const Vector&, const Vector&) { return Vector{0.0}; };
  d.psi_x = [n = dims.n_x](const Vector&, const Vector&) { return Matrix::identity(n); };
  d.psi_p = [n = dims.n_x](const Vector&, const Vector&) { return Matrix(n, 1); };
  return d;
}

DecisionVector random_decision(std::mt19937_64& rng, const DecisionLayout& layout) {
  return DecisionVector(layout, geompc::testing::random_vector(rng, layout.size()));
}

}  // namespace

TEST_CASE("uniform grid") {
  const HorizonGrid g = HorizonGrid::uniform(20, 1.0);
  CHECK(g.steps() == 20);
  CHECK(g.dtau(7) == 0.05);
  CHECK(g.tau(0) == 0.0);
  CHECK(g.length() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(HorizonGrid::uniform(0), Error);
  CHECK_THROWS_AS(HorizonGrid({0.1, -0.1}), Error);
}

TEST_CASE("decision layout") {
  const DecisionLayout lay = hs::layout(20);
  CHECK(lay.size() == 63);
  CHECK(lay.control_index(3, 0) == 3);
  CHECK(lay.control_index(3, 1) == 23);
  CHECK(lay.multiplier_index(3, 0) == 43);
  CHECK(lay.terminal_multiplier_index(1) == 61);
  CHECK(lay.parameter_index(0) == 62);
}

TEST_CASE("decision vector accessors round-trip") {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<std::size_t> small(1, 4), steps(1, 12);
  for (int trial = 0; trial < 100; ++trial) {
    const ProblemDims dims{small(rng), small(rng), small(rng), small(rng), small(rng)};
    const DecisionLayout lay(steps(rng), dims);
    DecisionVector a(lay);
    const DecisionVector src = random_decision(rng, lay);
    for (std::size_t i = 0; i < lay.steps(); ++i) {
      a.set_control(i, src.control(i));
      a.set_multiplier(i, src.multiplier(i));
    }
    a.set_terminal_multiplier(src.terminal_multiplier());
    a.set_parameters(src.parameters());
    CHECK(a.values() == src.values());
    CHECK(src.control(0).size() == dims.n_u);
    CHECK(src.parameters().size() == dims.n_p);
  }
  DecisionVector v(hs::layout(2));
  CHECK_THROWS_AS(v.set_control(0, Vector{1.0}), DimensionMismatch);
  CHECK_THROWS_AS(DecisionVector(hs::layout(2), Vector(5)), DimensionMismatch);
}

TEST_CASE("forward recursion with zero dynamics is constant") {
  const OcpDefinition d = drift_free({2, 1, 1, 2, 1});
  const DecisionLayout lay(5, d.dims);
  std::mt19937_64 rng(1);
  TrajectoryWorkspace ws;
  const Vector x0{0.3, -0.7};
  forward_recursion(d, HorizonGrid::uniform(5), x0, random_decision(rng, lay), ws);
  REQUIRE(ws.states.size() == 6);
  for (const auto& x : ws.states) CHECK(x == x0);
}

TEST_CASE("hemisphere forward recursion from the apex") {
  const OcpDefinition d = hs::make_ocp({});
  DecisionVector u(hs::layout(2));
  u.set_parameters({1.0});
  TrajectoryWorkspace ws;
  forward_recursion(d, HorizonGrid::uniform(2), {0.0, 0.0}, u, ws);
  CHECK(ws.states[1][0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(ws.states[2][0] == doctest::Approx(0.5 + 0.5 * std::sqrt(0.75)).epsilon(1e-15));
  CHECK(ws.states[2][0] == doctest::Approx(0.9330).epsilon(1e-4));
  for (const auto& x : ws.states) {
    CHECK(x[1] == 0.0);
    CHECK(std::abs(dot(hs::lift(x), hs::lift(x)) - 1.0) <= 1e-12);
  }
}

TEST_CASE("backward recursion boundary and constant costate") {
  const OcpDefinition d = drift_free({2, 1, 1, 2, 1});
  const DecisionLayout lay(6, d.dims);
  std::mt19937_64 rng(2);
  const DecisionVector u = random_decision(rng, lay);
  TrajectoryWorkspace ws;
  forward_recursion(d, HorizonGrid::uniform(6), {0.1, 0.2}, u, ws);
  backward_recursion(d, HorizonGrid::uniform(6), u, ws);
  for (const auto& l : ws.costates) CHECK(l == u.terminal_multiplier());
}

TEST_CASE("hemisphere costate is constant while the trajectory sits at the apex") {
  // With p = 0 the state never moves and H_x vanishes at x = 0.
  const OcpDefinition d = hs::make_ocp({});
  DecisionVector u(hs::layout(4));
  u.set_terminal_multiplier({0.3, -0.2});
  TrajectoryWorkspace ws;
  forward_recursion(d, HorizonGrid::uniform(4), {0.0, 0.0}, u, ws);
  backward_recursion(d, HorizonGrid::uniform(4), u, ws);
  for (const auto& l : ws.costates) CHECK(norm_inf(l - Vector{0.3, -0.2}) <= 1e-15);
}

TEST_CASE("H_u and C blocks carry the step size") {
  const OcpDefinition d = drift_free({1, 1, 1, 1, 1});
  const DecisionLayout lay(4, d.dims);
  std::mt19937_64 rng(3);
  const DecisionVector u = random_decision(rng, lay);
  const Vector f1 = assemble_residual(d, HorizonGrid({0.1, 0.2, 0.3, 0.4}), {0.5}, u);
  const Vector f2 = assemble_residual(d, HorizonGrid({0.2, 0.4, 0.6, 0.8}), {0.5}, u);
  for (std::size_t r = 0; r < 8; ++r) CHECK(f2[r] == 2.0 * f1[r]);
  CHECK(f2[8] == f1[8]);
}

TEST_CASE("residual is the gradient of the discrete Lagrangian") {
  const OcpDefinition d = geompc::testing::Pendulum::ocp();
  const std::vector<double> dtau{0.05, 0.1, 0.08, 0.12, 0.1, 0.05, 0.1, 0.1};
  const HorizonGrid grid(dtau);
  const DecisionLayout lay(dtau.size(), d.dims);
  std::mt19937_64 rng(41);
  const Vector x0{0.4, -0.2};
  for (int trial = 0; trial < 20; ++trial) {
    DecisionVector u = random_decision(rng, lay);
    u.set_parameters({1.0 + 0.5 * u.parameters()[0]});
    const Vector residual = assemble_residual(d, grid, x0, u);
    const double h = 1e-7;
    for (std::size_t j = 0; j < lay.size(); ++j) {
      Vector up = u.values(), um = u.values();
      up[j] += h;
      um[j] -= h;
      const double fd =
          (geompc::testing::Pendulum::lagrangian(up, x0, dtau) - geompc::testing::Pendulum::lagrangian(um, x0, dtau)) / (2.0 * h);
      CHECK(std::abs(fd - residual[j]) <= 1e-6);
    }
  }
}

TEST_CASE("hemisphere residual is the gradient of its discrete Lagrangian") {
  const hs::HemisphereParams params;
  const std::size_t n = 10;
  const HorizonGrid grid = HorizonGrid::uniform(n);
  const OcpDefinition d = hs::make_ocp(params);
  auto lagrangian = [&](const Vector& U) {
    const double p = U[3 * n + 2];
    double x = params.x0, y = params.y0, sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double u = U[i], us = U[n + i], mu = U[2 * n + i];
      sum += p * (-params.w_s * us) * grid.dtau(i) +
             mu * p * (std::pow(u - params.c_u, 2) + us * us - params.r_u * params.r_u) *
                 grid.dtau(i);
      const double s = std::sqrt(1.0 - x * x - y * y);
      x += p * s * std::cos(u) * grid.dtau(i);
      y += p * s * std::sin(u) * grid.dtau(i);
    }
    return p + sum + U[3 * n] * (x - params.x_f) + U[3 * n + 1] * (y - params.y_f);
  };
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> heading(0.4, 0.6), mult(-0.5, 0.5), scale(0.5, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    DecisionVector u(hs::layout(n));
    for (std::size_t i = 0; i < n; ++i) {
      u.set_control(i, {heading(rng), mult(rng) * 0.2});
      u.set_multiplier(i, {mult(rng)});
    }
    u.set_terminal_multiplier({mult(rng), mult(rng)});
    u.set_parameters({scale(rng)});
    const Vector residual = assemble_residual(d, grid, params.start(), u);
    for (std::size_t j = 0; j < u.size(); ++j) {
      Vector up = u.values(), um = u.values();
      up[j] += 1e-7;
      um[j] -= 1e-7;
      const double fd = (lagrangian(up) - lagrangian(um)) / 2e-7;
      CAPTURE(j);
      CHECK(std::abs(fd - residual[j]) <= 1e-6);
    }
  }
}

TEST_CASE("residual assembly is deterministic") {
  const OcpDefinition d = hs::make_ocp({});
  const DecisionVector u = hs::initial_guess({}, 20, hs::HemisphereParams{}.start());
  const Vector a = assemble_residual(d, HorizonGrid::uniform(20), {-0.5, -0.5}, u);
  TrajectoryWorkspace ws;
  const Vector b = assemble_residual(d, HorizonGrid::uniform(20), {-0.5, -0.5}, u, ws);
  CHECK(a == b);
  CHECK(residual_norm(a) == norm2(a));
}

TEST_CASE("validate names a callback with a wrong shape") {
  OcpDefinition d = hs::make_ocp({});
  const DecisionVector u(hs::layout(3));
  CHECK_NOTHROW(d.validate({0.1, 0.1}, u));
  d.psi = [](const Vector& x, const Vector&) { return Vector{x[0]}; };
  try {
    d.validate({0.1, 0.1}, u);
    FAIL("expected DimensionMismatch");
  } catch (const DimensionMismatch& e) {
    CHECK(std::string(e.what()).find("psi") != std::string::npos);
  }
  CHECK_THROWS_AS(assemble_residual(d, HorizonGrid::uniform(2), {0.1, 0.1}, u), DimensionMismatch);
}
