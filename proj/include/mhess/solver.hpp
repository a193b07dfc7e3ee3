#pragma once

#include <vector>

#include "mhess/differentiation.hpp"
#include "mhess/grid.hpp"
#include "mhess/hessian_algebra.hpp"

namespace mhess {

struct SolverConfig {
  int max_newton_iters = 60;
  /// Sup-norm target for the (scaled) residual.
  double residual_tol = 1e-9;
  double damping = 0.5;
  int max_halvings = 30;
  /// Absolute GMRES target per grid point (root-mean-square scale).
  double linear_tol = 1e-10;
  /// Relative GMRES reduction of the Newton residual (inexact Newton).
  double linear_forcing = 1e-3;
  int gmres_restart = 20;
  int max_linear_iters = 400;
  double cone_tol = kDefaultConeTol;
  Backend backend = Backend::spectral;

  void validate() const;
};

struct SolverReport {
  int iterations = 0;
  double residual = 0.0;
  /// Trial steps rejected because they left the cone.
  int cone_rejections = 0;
  /// Trial steps rejected by the merit test.
  int merit_rejections = 0;
  int linear_iterations = 0;
  bool converged = false;
  double wall_seconds = 0.0;
  /// Additive constant c with h_m(u) = f e^c; absorbs the discrete mass
  /// defect of the right-hand side (zero for the exponential equation).
  double compatibility_constant = 0.0;
  std::vector<double> residual_history;
};

struct SolveResult {
  ScalarField u;
  SolverReport report;
};

/// Solves h_m(u) = f e^c with mean(u) = 0 by damped Newton on
/// log h_m(u) - log f - c, keeping every iterate in the cone.
SolveResult solve_hessian(const Differentiator& d, const DensityField& f, int m,
                          const SolverConfig& cfg, const ScalarField* initial = nullptr);
SolveResult solve_hessian(const DensityField& f, int m, const SolverConfig& cfg);

/// Solves h_m(u) = exp(beta (u - f)) (max(h_m(f), 0) + 1/beta).
/// The sup-norm residual is (h_m(u) - rhs) / max(1, rhs).
SolveResult solve_exponential(const Differentiator& d, const ScalarField& f, int m, double beta,
                              const SolverConfig& cfg, const ScalarField* initial = nullptr);
SolveResult solve_exponential(const ScalarField& f, int m, double beta, const SolverConfig& cfg);

/// Start for solve_hessian: the linearized solve (m/n) trace H(u) = log f -
/// mean(log f), shrunk until it is inside the cone.
ScalarField hessian_warm_start(const Differentiator& d, const DensityField& f, int m);

}  // namespace mhess
