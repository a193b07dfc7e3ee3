#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "mhess/catalogue.hpp"
#include "mhess/hessian_algebra.hpp"
#include "mhess/solver.hpp"

using namespace mhess;

namespace {

constexpr double kPi = std::numbers::pi;

// u* = a (cos 2 pi x1 + cos 2 pi y2) has I + H(u*) = diag(1 - 2 pi a cos 2 pi x1,
// 1 - 2 pi a cos 2 pi y2, 1, ...).
ScalarField manufactured(const TorusGrid& g, double a) {
  ScalarField u(g);
  const int y2 = g.n() >= 2 ? 3 : 1;
  for (Index p = 0; p < g.size(); ++p)
    u.values[p] = a * (std::cos(2 * kPi * g.position(p, 0)) + std::cos(2 * kPi * g.position(p, y2)));
  return u;
}

DensityField manufactured_density(const TorusGrid& g, double a, int m) {
  DensityField f(g);
  const int y2 = g.n() >= 2 ? 3 : 1;
  Eigen::VectorXd mu = Eigen::VectorXd::Ones(g.n());
  for (Index p = 0; p < g.size(); ++p) {
    mu(0) = 1 - 2 * kPi * a * std::cos(2 * kPi * g.position(p, 0));
    if (g.n() >= 2) mu(1) = 1 - 2 * kPi * a * std::cos(2 * kPi * g.position(p, y2));
    f.values[p] = elementary_symmetric(mu, m) / binomial(g.n(), m);
  }
  return f;
}

}  // namespace

TEST_CASE("uniform density gives the zero solution") {
  const TorusGrid g(2, 16);
  const Differentiator d(g, Backend::spectral);
  for (int m = 1; m <= 2; ++m) {
    const auto res = solve_hessian(d, DensityField(g, Field::Ones(g.size())), m, SolverConfig{});
    CHECK(res.report.converged);
    CHECK(res.u.values.abs().maxCoeff() == 0.0);
  }
}

TEST_CASE("solve_hessian validates its input") {
  const TorusGrid g(2, 8);
  const Differentiator d(g, Backend::spectral);
  Field v = Field::Ones(g.size());
  v[0] = -1.0;
  CHECK_THROWS_AS(solve_hessian(d, DensityField(g, v), 1, SolverConfig{}), ConfigError);
  CHECK_THROWS_AS(solve_hessian(d, DensityField(g, Field::Constant(g.size(), 2.0)), 1, SolverConfig{}),
                  ConfigError);
  CHECK_THROWS_AS(solve_hessian(d, DensityField(g, Field::Ones(g.size())), 3, SolverConfig{}), ConfigError);
  SolverConfig bad;
  bad.damping = 1.5;
  CHECK_THROWS_AS(solve_hessian(d, DensityField(g, Field::Ones(g.size())), 1, bad), ConfigError);
}

TEST_CASE("manufactured solutions are recovered with the spectral backend") {
  struct Case { int n, N, m; };
  for (const Case c : {Case{2, 16, 1}, Case{2, 16, 2}, Case{3, 8, 2}, Case{3, 8, 3}}) {
    CAPTURE(c.n);
    CAPTURE(c.m);
    const TorusGrid g(c.n, c.N);
    const Differentiator d(g, Backend::spectral);
    const double a = 0.05;
    const SolverConfig cfg;
    const auto res = solve_hessian(d, manufactured_density(g, a, c.m), c.m, cfg);
    CHECK(res.report.converged);
    CHECK(res.report.residual <= cfg.residual_tol);
    const Field err = res.u.values - manufactured(g, a).values;
    CHECK((err - err.mean()).abs().maxCoeff() <= 10 * cfg.residual_tol);
    CHECK(cone_membership(d, res.u, c.m).all_pass());
    for (std::size_t i = 1; i < res.report.residual_history.size(); ++i)
      CHECK(res.report.residual_history[i] < res.report.residual_history[i - 1]);
  }
}

TEST_CASE("first-order equation is the linear spectral solve") {
  const TorusGrid g(2, 16);
  const Differentiator d(g, Backend::spectral);
  std::mt19937_64 rng(42);
  const auto w = random_cone_valid(d, 2, rng, 0.3);
  const DensityField f = hessian_density(d, w, 1);
  const auto res = solve_hessian(d, f, 1, SolverConfig{});
  // h_1 = 1 + trace H / 2.
  const Field direct = d.solve_shifted_trace(2.0 * (f.values - 1.0), 1.0, 0.0);
  CHECK((res.u.values - direct).abs().maxCoeff() <= 1e-8);
}

TEST_CASE("solutions are unique up to constants") {
  const TorusGrid g(2, 16);
  const Differentiator d(g, Backend::spectral);
  std::mt19937_64 rng(5);
  const auto target = random_cone_valid(d, 2, rng, 0.3);
  const DensityField f = hessian_density(d, target, 2);
  const auto s1 = random_cone_valid(d, 2, rng, 0.2);
  const auto s2 = random_cone_valid(d, 2, rng, 0.2);
  const auto r1 = solve_hessian(d, f, 2, SolverConfig{}, &s1);
  const auto r2 = solve_hessian(d, f, 2, SolverConfig{}, &s2);
  REQUIRE(r1.report.converged);
  REQUIRE(r2.report.converged);
  const Field diff = r1.u.values - r2.u.values;
  CHECK((diff - diff.mean()).abs().maxCoeff() <= 1e-7);
}

TEST_CASE("finite-difference backend converges at second order") {
  const double a = 0.05;
  for (int m = 1; m <= 2; ++m) {
    double err[2];
    for (int i = 0; i < 2; ++i) {
      const TorusGrid g(2, 8 << i);
      const Differentiator d(g, Backend::finite_difference);
      const auto res = solve_hessian(d, manufactured_density(g, a, m), m, SolverConfig{});
      REQUIRE(res.report.converged);
      const Field e = res.u.values - manufactured(g, a).values;
      err[i] = (e - e.mean()).abs().maxCoeff();
    }
    CHECK(std::log2(err[0] / err[1]) >= 1.9);
  }
}

TEST_CASE("exponential equation with a constant obstacle") {
  const TorusGrid g(2, 16);
  const Differentiator d(g, Backend::spectral);
  for (int m = 1; m <= 2; ++m)
    for (double beta : {1.0, 8.0, 1024.0, 16384.0}) {
      const auto res = solve_exponential(d, ScalarField(g), m, beta, SolverConfig{});
      CHECK(res.report.converged);
      const double expect = -std::log1p(1.0 / beta) / beta;
      CHECK((res.u.values - expect).abs().maxCoeff() <= 1e-9);
    }
}

TEST_CASE("exponential solutions lie below the obstacle and increase with beta") {
  // Only the first-order stencil scheme has a discrete maximum principle.
  const TorusGrid g(2, 16);
  const Differentiator d(g, Backend::finite_difference);
  const ScalarField f = cosine_field(g, {{0.3, {1, 0, 0, 0}, {}}, {0.2, {0, 1, 1, 0}, {}}});
  ScalarField prev(g);
  bool first = true;
  for (double beta = 1.0; beta <= 16384.0; beta *= 2.0) {
    CAPTURE(beta);
    const auto res = solve_exponential(d, f, 1, beta, SolverConfig{}, first ? nullptr : &prev);
    REQUIRE(res.report.converged);
    CHECK((res.u.values - f.values).maxCoeff() <= 1e-7);
    if (!first) CHECK((prev.values - res.u.values).maxCoeff() <= 1e-7);
    prev = res.u;
    first = false;
  }
}

TEST_CASE("second-order exponential continuation converges") {
  const TorusGrid g(2, 16);
  const Differentiator d(g, Backend::finite_difference);
  const ScalarField f = cosine_field(g, {{0.3, {1, 0, 0, 0}, {}}, {0.2, {0, 1, 1, 0}, {}}});
  ScalarField prev(g);
  bool first = true;
  for (double beta = 1.0; beta <= 16384.0; beta *= 4.0) {
    CAPTURE(beta);
    const auto res = solve_exponential(d, f, 2, beta, SolverConfig{}, first ? nullptr : &prev);
    REQUIRE(res.report.converged);
    CHECK(cone_membership(d, res.u, 2).all_pass());
    CHECK((res.u.values - f.values).maxCoeff() <= 1e-3);
    prev = res.u;
    first = false;
  }
}
