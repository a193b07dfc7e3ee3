#pragma once

#include <vector>

#include "mhess/differentiation.hpp"
#include "mhess/envelope.hpp"
#include "mhess/grid.hpp"
#include "mhess/solver.hpp"

namespace mhess {

struct EnergyBreakdown {
  /// terms[k] = integrate(phi * h_k(phi)) / (m + 1), k = 0..m.
  std::vector<double> terms;
  double total = 0.0;
};

/// Energy of a cone-valid field; throws ConeError otherwise.
EnergyBreakdown energy(const Differentiator& d, const ScalarField& phi, int m,
                       double cone_tol = kDefaultConeTol);

/// |E(phi) - E(psi) - 1/(m+1) sum_j integrate((phi - psi) mixed((phi, j), (psi, m - j)))|.
double cocycle_gap(const Differentiator& d, const ScalarField& phi, const ScalarField& psi, int m);

/// E(phi) - integrate(phi * mu).
double functional_F(const Differentiator& d, const ScalarField& phi, const DensityField& mu, int m);

/// |(E(phi + t v) - E(phi - t v)) / 2t - integrate(v h_m(phi))|.
double primitive_check(const Differentiator& d, const ScalarField& phi, const ScalarField& v, int m, double t);

/// Same central difference for E o P.
double envelope_derivative_check(const Differentiator& d, const ScalarField& u, const ScalarField& v, int m,
                                 double t, const BetaSchedule& sched, const SolverConfig& cfg);

struct AscentConfig {
  double tau = 0.5;
  double backtrack = 0.5;
  int max_iters = 200;
  /// Target for sup|h_m(phi) - mu|.
  double stationarity_tol = 1e-3;
  int max_backtracks = 20;

  void validate() const;
};

struct AscentRecord {
  double F = 0.0;
  double stationarity = 0.0;
  double tau = 0.0;
  /// Whether the trial point needed the beta continuation (it was outside
  /// the cone).
  bool projected = false;
};

struct VariationalResult {
  explicit VariationalResult(const TorusGrid& g) : phi(g) {}

  ScalarField phi;
  double stationarity = 0.0;
  int iterations = 0;
  int projections = 0;
  bool converged = false;
  /// Entry 0 is the start.
  std::vector<AscentRecord> trace;
};

/// Projected ascent on F_mu from phi = 0. Directions are the gradient
/// h_m(phi) - mu measured in the Sobolev metric of the flat operator
/// (m/n) trace, i.e. v solves (m/n) trace v = mu - h_m(phi).
VariationalResult variational_solve(const Differentiator& d, const DensityField& mu, int m,
                                    const AscentConfig& acfg, const BetaSchedule& sched, const SolverConfig& cfg);

}  // namespace mhess
