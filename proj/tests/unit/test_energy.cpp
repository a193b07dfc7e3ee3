#include <doctest.h>

#include <cmath>
#include <random>

#include "mhess/catalogue.hpp"
#include "mhess/energy.hpp"
#include "mhess/hessian_algebra.hpp"

using namespace mhess;

namespace {

ScalarField scaled(const ScalarField& u, double s) { return ScalarField(u.grid, s * u.values); }

}  // namespace

TEST_CASE("energy basics") {
  const TorusGrid g(2, 8);
  const Differentiator d(g, Backend::spectral);
  std::mt19937_64 rng(21);
  for (int m = 1; m <= 2; ++m) {
    CAPTURE(m);
    const auto zero = energy(d, ScalarField(g), m);
    CHECK(zero.total == 0.0);
    CHECK(zero.terms.size() == static_cast<std::size_t>(m + 1));

    const auto phi = random_cone_valid(d, m, rng);
    const auto e = energy(d, phi, m);
    double sum = 0.0;
    for (double t : e.terms) sum += t;
    CHECK(sum == doctest::Approx(e.total).epsilon(1e-14));
    CHECK(std::abs(energy(d, ScalarField(g, phi.values + 0.37), m).total - e.total - 0.37) <= 1e-9);

    // Sandwich for a nonpositive field.
    const ScalarField neg(g, phi.values - phi.values.maxCoeff());
    const double top = (neg.values * hessian_density(d, neg, m).values).mean();
    const double en = energy(d, neg, m).total;
    CHECK(top <= en + 1e-8);
    CHECK(en <= top / (m + 1) + 1e-8);
  }
  ScalarField bad = cosine_field(g, {{0.6, {1, 0, 0, 0}, {}}});
  CHECK_THROWS_AS(energy(d, bad, 1), ConeError);
}

TEST_CASE("cocycle, concavity and two-sided bounds") {
  const TorusGrid g(2, 8);
  const Differentiator d(g, Backend::spectral);
  std::mt19937_64 rng(4);
  for (int m = 1; m <= 2; ++m) {
    CAPTURE(m);
    const auto phi = random_cone_valid(d, m, rng);
    const auto psi = random_cone_valid(d, m, rng);
    CHECK(cocycle_gap(d, phi, phi, m) <= 1e-12);
    CHECK(cocycle_gap(d, phi, ScalarField(g, phi.values + 0.2), m) <= 1e-9);
    CHECK(cocycle_gap(d, phi, psi, m) <= 1e-7);

    const double ep = energy(d, phi, m).total;
    const double es = energy(d, psi, m).total;
    for (double s : {0.25, 0.5, 0.75}) {
      const ScalarField mix(g, s * phi.values + (1 - s) * psi.values);
      CHECK(energy(d, mix, m).total >= s * ep + (1 - s) * es - 1e-8);
    }
    const Field diff = phi.values - psi.values;
    CHECK((diff * hessian_density(d, phi, m).values).mean() - 1e-7 <= ep - es);
    CHECK(ep - es <= (diff * hessian_density(d, psi, m).values).mean() + 1e-7);

    const ScalarField lower(g, phi.values - std::max(0.0, (phi.values - psi.values).maxCoeff()));
    CHECK(energy(d, lower, m).total <= es + 1e-8);
  }
}

TEST_CASE("energy is a primitive of the density") {
  // Band-limited products stay below the Nyquist frequency only from N = 16.
  const TorusGrid g(2, 16);
  const Differentiator d(g, Backend::spectral);
  std::mt19937_64 rng(9);
  const auto phi = random_cone_valid(d, 2, rng);
  CHECK(primitive_check(d, phi, ScalarField::constant(g, 1.0), 2, 1e-3) <= 1e-10);
  // Third derivative int v det H(v) vanishes for many directions; this one
  // couples x_1 and x_2 and keeps it away from zero.
  const auto v = cosine_field(g, {{0.05, {1, 0, 0, 0}, {}}, {0.05, {0, 0, 1, 0}, {}}, {0.05, {1, 0, 1, 0}, {}}});
  CHECK(primitive_check(d, phi, v, 2, 1e-3) <= 1e-5);
  const double a = primitive_check(d, phi, v, 2, 0.1);
  const double b = primitive_check(d, phi, v, 2, 0.05);
  CHECK(a / b >= 3.5);
  CHECK(a / b <= 4.5);
  CHECK_THROWS_AS(primitive_check(d, phi, v, 2, 0.0), ConfigError);
}

TEST_CASE("functional F") {
  const TorusGrid g(2, 8);
  const Differentiator d(g, Backend::spectral);
  const DensityField volume(g, Field::Ones(g.size()));
  std::mt19937_64 rng(13);
  CHECK(functional_F(d, ScalarField(g), volume, 2) == 0.0);
  for (int i = 0; i < 5; ++i) {
    const auto phi = scaled(random_cone_valid(d, 2, rng), 0.5);
    const double F = functional_F(d, phi, volume, 2);
    CHECK(F <= 1e-12);
    CHECK(std::abs(functional_F(d, ScalarField(g, phi.values + 1.5), volume, 2) - F) <= 1e-9);
  }
  CHECK_THROWS_AS(functional_F(d, ScalarField(g), DensityField(g, Field::Constant(g.size(), 2.0)), 2),
                  ConfigError);
}

TEST_CASE("derivative of energy after projection") {
  const TorusGrid g(2, 8);
  const Differentiator d(g, Backend::spectral);
  std::mt19937_64 rng(17);
  const BetaSchedule sched;
  const SolverConfig cfg;
  const auto u = random_cone_valid(d, 2, rng, 0.3);
  const auto v = scaled(random_smooth(g, rng), 0.02);
  CHECK(envelope_derivative_check(d, u, v, 2, 1e-3, sched, cfg) <= 1e-5);
  CHECK(envelope_derivative_check(d, u, ScalarField::constant(g, 1.0), 2, 1e-3, sched, cfg) <= 1e-6);
}

TEST_CASE("variational solver with the volume measure") {
  const TorusGrid g(2, 8);
  const Differentiator d(g, Backend::spectral);
  const DensityField volume(g, Field::Ones(g.size()));
  const auto res = variational_solve(d, volume, 2, AscentConfig{}, BetaSchedule{}, SolverConfig{});
  CHECK(res.converged);
  CHECK(res.phi.values.abs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(variational_solve(d, DensityField(g, Field::Constant(g.size(), 0.5)), 2, AscentConfig{},
                                    BetaSchedule{}, SolverConfig{}),
                  ConfigError);
  AscentConfig bad;
  bad.tau = 0.0;
  CHECK_THROWS_AS(variational_solve(d, volume, 2, bad, BetaSchedule{}, SolverConfig{}), ConfigError);
}

TEST_CASE("variational solver reproduces the Newton solution") {
  const TorusGrid g(2, 8);
  const Differentiator d(g, Backend::spectral);
  const auto mu = bump_density(g, {{{0.3, 0.4, 0.6, 0.5}, 0.3, 1.0}}, 0.5);
  AscentConfig acfg;
  acfg.stationarity_tol = 1e-4;
  const auto res = variational_solve(d, mu, 1, acfg, BetaSchedule{}, SolverConfig{});
  REQUIRE(res.converged);
  for (std::size_t k = 1; k < res.trace.size(); ++k) CHECK(res.trace[k].F >= res.trace[k - 1].F);
  const auto newton = solve_hessian(d, mu, 1, SolverConfig{});
  REQUIRE(newton.report.converged);
  const Field a = res.phi.values - res.phi.values.mean();
  const Field b = newton.u.values - newton.u.values.mean();
  CHECK((a - b).abs().maxCoeff() <= 1e-3);
}
