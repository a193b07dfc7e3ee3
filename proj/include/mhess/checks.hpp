#pragma once

#include <string>
#include <utility>
#include <vector>

#include "mhess/differentiation.hpp"
#include "mhess/envelope.hpp"
#include "mhess/grid.hpp"
#include "mhess/solver.hpp"

// Numerical probes of comparison principles, cutoff masses, integrability and
// volume/capacity estimates. Every probe returns a CheckReport.

namespace mhess {

struct CheckReport {
  std::string name;
  std::string inputs;
  double measured = 0.0;
  double bound = 0.0;
  double tolerance = 0.0;
  /// Mollification radius used for max-type constructions (0 if none).
  double smoothing_radius = 0.0;
  bool pass = false;
  /// Reported for information only; bound is +infinity.
  bool informational = false;
  bool skipped = false;
  /// Extra named numbers (per-level values, fitted constants, ...).
  std::vector<std::pair<std::string, double>> details;

  /// Sets pass from measured <= bound + tolerance.
  void decide();
};

/// Mollified pointwise maximum (sentinels are absorbed by the max).
Field smoothed_max(const Differentiator& d, const Field& a, const Field& b, double radius);

/// integrate over {phi < psi} of h_m(psi) minus the same for h_m(phi); both
/// fields must be cone-valid.
CheckReport comparison_check(const Differentiator& d, const ScalarField& phi, const ScalarField& psi, int m,
                             double tol = 1e-4);

/// measured = max(mu - h_m(smoothed max(phi, psi))), a deficit; passes when
/// it is at most tol. Both inputs must already satisfy h_m >= mu - tol.
CheckReport maximum_density_check(const Differentiator& d, const ScalarField& phi, const ScalarField& psi,
                                  const DensityField& mu, int m, double tol = 1e-3);

struct CutoffMass {
  double level = 0.0;
  double mass = 0.0;
};

/// For each level j: integral over {phi > -j} of h_m(smoothed max(phi, -j)).
/// m = 0 gives the volume of {phi > -j}.
std::vector<CutoffMass> cutoff_mass_profile(const Differentiator& d, const ScalarField& phi, int m,
                                            const std::vector<double>& levels);

/// measured = largest decrease between consecutive levels.
CheckReport profile_monotonicity(const std::vector<CutoffMass>& profile, double tol = 1e-3);

/// If the degree-m profile reaches 1 - delta, the degree m-1 profile must
/// reach 1 - delta - tol. Vacuous pass (detail "premise" = 0) otherwise.
CheckReport nesting_check(const Differentiator& d, const ScalarField& phi, int m, const std::vector<double>& levels,
                          double delta = 0.05, double tol = 1e-3);

/// Shape of V(E) <= C Cap(E)^p. C is the smallest constant valid for the
/// larger half (by volume) of the family; measured is the worst relative
/// excess over all members. Skipped for m = n.
CheckReport volume_capacity_check(const Differentiator& d, const std::vector<SetMask>& sets, int m, double p,
                                  const BetaSchedule& sched, const SolverConfig& cfg, double tol = 0.1);

/// integrate(|max(phi, c)|^p) over increasingly deep caps c; measured is the
/// relative change between the last two. Informational when p is at or
/// above n/(n-m).
CheckReport lp_integrability_check(const ScalarField& phi, int m, double p, const std::vector<double>& caps,
                                   double tol = 0.05);

/// sum_i t_i Cap({phi < -t_i}) (t_i - t_{i-1}) over an increasing t-grid,
/// with |E(phi)| as a detail. Passes when the sum is finite.
CheckReport capacity_tail_check(const Differentiator& d, const ScalarField& phi, int m,
                                const std::vector<double>& levels, const BetaSchedule& sched,
                                const SolverConfig& cfg);

/// Band-limited test weights: 1, cos and sin of 2 pi x_a on every axis, and
/// cos 2 pi (x_1 + y_1).
std::vector<Field> default_weights(const TorusGrid& g);

/// gaps_j = max_w |integrate(w h_m(phi_j)) - integrate(w h_m(phi))|.
/// measured = final gap plus every increase along the sequence.
CheckReport monotone_convergence_check(const Differentiator& d, const ScalarField& phi,
                                       const std::vector<ScalarField>& approximants, int m,
                                       const std::vector<Field>& weights, double tol = 1e-3);

/// Same with approximants from regularize(phi, K levels).
CheckReport monotone_convergence_check(const Differentiator& d, const ScalarField& phi, int m, int K,
                                       const BetaSchedule& sched, const SolverConfig& cfg, double tol = 1e-3);

}  // namespace mhess
