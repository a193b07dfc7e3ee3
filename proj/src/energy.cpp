#include "mhess/energy.hpp"

#include <cmath>

#include "mhess/error.hpp"
#include "mhess/hessian_algebra.hpp"

namespace mhess {

namespace {

void check_degree(const TorusGrid& g, int m) {
  if (m < 1 || m > g.n()) throw ConfigError("energy: degree m out of range");
}

double mean_product(const Field& a, const Field& b) { return (a * b).mean(); }

}  // namespace

EnergyBreakdown energy(const Differentiator& d, const ScalarField& phi, int m, double cone_tol) {
  const TorusGrid& g = d.grid();
  if (phi.grid != g) throw ConfigError("energy: field grid does not match");
  check_degree(g, m);
  const Eigen::ArrayXXd dens = hessian_densities(d, phi, m);
  double worst = 0.0;
  for (int k = 1; k <= m; ++k) worst = std::min(worst, dens.row(k).minCoeff());
  if (worst < -cone_tol)
    throw ConeError("energy: field is outside the cone (worst density " + std::to_string(worst) + ")");
  EnergyBreakdown out;
  for (int k = 0; k <= m; ++k) {
    out.terms.push_back(mean_product(phi.values, dens.row(k).transpose()) / (m + 1));
    out.total += out.terms.back();
  }
  return out;
}

double cocycle_gap(const Differentiator& d, const ScalarField& phi, const ScalarField& psi, int m) {
  const double lhs = energy(d, phi, m).total - energy(d, psi, m).total;
  const Field diff = phi.values - psi.values;
  double rhs = 0.0;
  for (int j = 0; j <= m; ++j) {
    std::vector<MixedFactor> factors;
    if (j > 0) factors.push_back({&phi, j});
    if (m - j > 0) factors.push_back({&psi, m - j});
    rhs += mean_product(diff, mixed_density(d, factors).values);
  }
  return std::abs(lhs - rhs / (m + 1));
}

double functional_F(const Differentiator& d, const ScalarField& phi, const DensityField& mu, int m) {
  if (mu.grid != phi.grid) throw ConfigError("functional F: grids differ");
  if (std::abs(mu.mass() - 1.0) > 1e-8) throw ConfigError("functional F: measure must have unit mass");
  return energy(d, phi, m).total - mean_product(phi.values, mu.values);
}

double primitive_check(const Differentiator& d, const ScalarField& phi, const ScalarField& v, int m, double t) {
  if (!(t > 0.0)) throw ConfigError("primitive check: step must be positive");
  const ScalarField up(phi.grid, phi.values + t * v.values);
  const ScalarField down(phi.grid, phi.values - t * v.values);
  const double fd = (energy(d, up, m).total - energy(d, down, m).total) / (2.0 * t);
  return std::abs(fd - mean_product(v.values, hessian_density(d, phi, m).values));
}

double envelope_derivative_check(const Differentiator& d, const ScalarField& u, const ScalarField& v, int m,
                                 double t, const BetaSchedule& sched, const SolverConfig& cfg) {
  if (!(t > 0.0)) throw ConfigError("envelope derivative check: step must be positive");
  auto envelope = [&](const Field& f) {
    auto r = project(d, ScalarField(u.grid, f), m, sched, cfg);
    if (!r.converged) throw NumericalError("envelope derivative check: projection did not converge");
    return r;
  };
  const auto center = envelope(u.values);
  const auto up = envelope(u.values + t * v.values);
  const auto down = envelope(u.values - t * v.values);
  const double fd = (energy(d, up.P, m).total - energy(d, down.P, m).total) / (2.0 * t);
  return std::abs(fd - mean_product(v.values, center.density));
}

void AscentConfig::validate() const {
  if (!(tau > 0.0)) throw ConfigError("ascent: tau must be positive");
  if (!(backtrack > 0.0 && backtrack < 1.0)) throw ConfigError("ascent: backtracking factor must lie in (0, 1)");
  if (max_iters < 1 || max_backtracks < 0) throw ConfigError("ascent: invalid iteration limits");
  if (!(stationarity_tol > 0.0)) throw ConfigError("ascent: stationarity tolerance must be positive");
}

VariationalResult variational_solve(const Differentiator& d, const DensityField& mu, int m,
                                    const AscentConfig& acfg, const BetaSchedule& sched, const SolverConfig& cfg) {
  acfg.validate();
  const TorusGrid& g = d.grid();
  if (mu.grid != g) throw ConfigError("variational solve: measure grid does not match");
  check_degree(g, m);
  if (!mu.is_nonnegative()) throw ConfigError("variational solve: measure must be nonnegative");
  if (std::abs(mu.mass() - 1.0) > 1e-8) throw ConfigError("variational solve: measure must have unit mass");

  VariationalResult res(g);
  ScalarField phi(g);
  Field dens = hessian_density(d, phi, m).values;
  double F = functional_F(d, phi, mu, m);
  res.stationarity = (dens - mu.values).abs().maxCoeff();
  res.trace.push_back({F, res.stationarity, 0.0, false});
  const double flat = static_cast<double>(m) / g.n();

  while (res.stationarity > acfg.stationarity_tol && res.iterations < acfg.max_iters) {
    const Field dir = d.solve_shifted_trace(mu.values - dens, flat, 0.0);
    double tau = acfg.tau;
    bool accepted = false;
    for (int b = 0; b <= acfg.max_backtracks && !accepted; ++b, tau *= acfg.backtrack) {
      ScalarField trial(g, phi.values + tau * dir);
      bool projected = false;
      // The envelope of a cone-valid field is the field itself; only trial
      // points outside the cone go through the continuation.
      if (!cone_membership(d, trial, m, cfg.cone_tol).all_pass()) {
        auto env = project(d, trial, m, sched, cfg);
        ++res.projections;
        if (!env.converged) continue;
        trial = std::move(env.P);
        projected = true;
      }
      trial.values -= trial.values.mean();
      const double trial_F = functional_F(d, trial, mu, m);
      if (trial_F < F) continue;
      phi = std::move(trial);
      F = trial_F;
      dens = hessian_density(d, phi, m).values;
      res.stationarity = (dens - mu.values).abs().maxCoeff();
      res.trace.push_back({F, res.stationarity, tau, projected});
      accepted = true;
    }
    ++res.iterations;
    if (!accepted) break;
  }
  res.converged = res.stationarity <= acfg.stationarity_tol;
  res.phi = std::move(phi);
  return res;
}

}  // namespace mhess
