#pragma once

#include <vector>

#include "mhess/differentiation.hpp"
#include "mhess/grid.hpp"
#include "mhess/solver.hpp"

namespace mhess {

/// Geometric beta continuation: beta_0, beta_0 * growth, ... up to beta_max
/// (always included as the last value).
struct BetaSchedule {
  double beta_0 = 1.0;
  double growth = 2.0;
  double beta_max = 16384.0;

  void validate() const;
  std::vector<double> values() const;
};

using Mask = Eigen::Array<bool, Eigen::Dynamic, 1>;

/// Indicator of a grid-representable set.
struct SetMask {
  TorusGrid grid;
  Mask inside;

  explicit SetMask(const TorusGrid& g) : grid(g), inside(Mask::Constant(g.size(), false)) {}
  SetMask(const TorusGrid& g, Mask m);

  static SetMask everything(const TorusGrid& g);
  /// Points whose coordinates lie in [lo_a, hi_a) on every real axis a.
  static SetMask box(const TorusGrid& g, const std::vector<double>& lo, const std::vector<double>& hi);

  SetMask operator|(const SetMask& o) const;
  Index count() const { return inside.count(); }
  /// Volume fraction.
  double volume() const { return static_cast<double>(count()) / static_cast<double>(grid.size()); }
};

/// One solve of the continuation.
struct BetaRecord {
  double beta = 0.0;
  /// False for intermediate values inserted after a failed solve.
  bool scheduled = true;
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;
  double wall_seconds = 0.0;
  /// Orthogonality defect of this iterate.
  double defect = 0.0;
  /// max(u - f).
  double max_excess = 0.0;
};

struct EnvelopeOptions {
  /// Negative: max(1e-4 * oscillation(f), 1e-7, log(1e3) / beta_max).
  double contact_tol = -1.0;
  /// Negative: equal to contact_tol.
  double defect_eps = -1.0;
  /// Depth of geometric beta bisection after a failed solve.
  int max_refinements = 3;
};

struct EnvelopeResult {
  explicit EnvelopeResult(const TorusGrid& g) : P(g) {}

  ScalarField P;
  int m = 1;
  /// Normalized density h_m(P).
  Field density;
  Mask contact_mask;
  double contact_tol = 0.0;
  double defect_eps = 0.0;
  double defect = 0.0;
  bool converged = false;
  std::vector<BetaRecord> trace;
};

/// Envelope of f by beta continuation of the exponential equation.
EnvelopeResult project(const Differentiator& d, const ScalarField& f, int m, const BetaSchedule& sched,
                       const SolverConfig& cfg, const EnvelopeOptions& opts = {});
EnvelopeResult project(const ScalarField& f, int m, const BetaSchedule& sched, const SolverConfig& cfg);

/// Integral of h_m(P) over {P < f - eps}.
double orthogonality_defect(const EnvelopeResult& res, const ScalarField& f, double eps);

/// sup|P(f) - P(g)| - sup|f - g|.
double lipschitz_check(const Differentiator& d, const ScalarField& f, const ScalarField& g, int m,
                       const BetaSchedule& sched, const SolverConfig& cfg);

struct RegularizeOptions {
  /// Shift and smoothing width at level j are delta_0 * 2^-j.
  double delta_0 = 0.1;
  /// Truncation levels; empty means -2^j for j = 1..levels.
  std::vector<double> caps;
};

/// Decreasing smooth approximants phi_j = P(smax_j(phi, cap_j) + delta_j) of a
/// function that may contain sentinel (minus infinity) values. smax_j is the
/// log-sum-exp maximum of width delta_j, so no point is lowered.
std::vector<ScalarField> regularize(const Differentiator& d, const ScalarField& phi, int m, int levels,
                                    const BetaSchedule& sched, const SolverConfig& cfg,
                                    const RegularizeOptions& opts = {});

/// Obstacle for the relative extremal function: -1 on E, 0 elsewhere,
/// mollified with a kernel supported in the ball of that radius.
ScalarField extremal_obstacle(const Differentiator& d, const SetMask& E, double radius);

/// Default obstacle smoothing: two grid spacings.
inline double default_smoothing_radius(const TorusGrid& g) { return 2.0 * g.h(); }

EnvelopeResult relative_extremal(const Differentiator& d, const SetMask& E, int m, const BetaSchedule& sched,
                                 const SolverConfig& cfg);

struct CapacityResult {
  explicit CapacityResult(const TorusGrid& g) : extremal(g) {}

  double value = 0.0;
  double smoothing_radius = 0.0;
  EnvelopeResult extremal;
};

/// integrate((-h) h_m(h)) for the relative extremal function h of E.
CapacityResult capacity(const Differentiator& d, const SetMask& E, int m, const BetaSchedule& sched,
                        const SolverConfig& cfg);

}  // namespace mhess
