#include "mhess/envelope.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "mhess/catalogue.hpp"
#include "mhess/error.hpp"
#include "mhess/hessian_algebra.hpp"

namespace mhess {

void BetaSchedule::validate() const {
  if (!(beta_0 > 0.0) || !std::isfinite(beta_0)) throw ConfigError("beta schedule: beta_0 must be positive");
  if (!(growth > 1.0) || !std::isfinite(growth)) throw ConfigError("beta schedule: growth must exceed 1");
  if (!(beta_max >= beta_0) || !std::isfinite(beta_max))
    throw ConfigError("beta schedule: beta_max must be at least beta_0");
}

std::vector<double> BetaSchedule::values() const {
  validate();
  std::vector<double> out;
  for (double b = beta_0; b < beta_max * (1.0 - 1e-12); b *= growth) out.push_back(b);
  out.push_back(beta_max);
  return out;
}

SetMask::SetMask(const TorusGrid& g, Mask m) : grid(g), inside(std::move(m)) {
  if (inside.size() != g.size()) throw ConfigError("set mask: size does not match the grid");
}

SetMask SetMask::everything(const TorusGrid& g) { return SetMask(g, Mask::Constant(g.size(), true)); }

SetMask SetMask::box(const TorusGrid& g, const std::vector<double>& lo, const std::vector<double>& hi) {
  const int d = g.dims();
  if (static_cast<int>(lo.size()) != d || static_cast<int>(hi.size()) != d)
    throw ConfigError("box: expected " + std::to_string(d) + " lower and upper coordinates");
  SetMask out(g);
  const double slack = 1e-9 * g.h();
  for (Index p = 0; p < g.size(); ++p) {
    bool in = true;
    for (int a = 0; a < d && in; ++a) {
      const double x = g.position(p, a);
      in = x >= lo[a] - slack && x < hi[a] - slack;
    }
    out.inside[p] = in;
  }
  return out;
}

SetMask SetMask::operator|(const SetMask& o) const {
  if (grid != o.grid) throw ConfigError("set mask union: grids differ");
  return SetMask(grid, inside || o.inside);
}

namespace {

double defect_of(const Field& u, const Field& density, const Field& f, double eps) {
  double s = 0.0;
  for (Index p = 0; p < u.size(); ++p)
    if (u[p] < f[p] - eps) s += density[p];
  return s / static_cast<double>(u.size());
}

}  // namespace

EnvelopeResult project(const Differentiator& d, const ScalarField& f, int m, const BetaSchedule& sched,
                       const SolverConfig& cfg, const EnvelopeOptions& opts) {
  const TorusGrid& g = d.grid();
  if (f.grid != g) throw ConfigError("project: field grid does not match");
  if (!f.values.allFinite()) throw ConfigError("project: obstacle must be finite");
  const std::vector<double> betas = sched.values();

  EnvelopeResult res(g);
  res.m = m;
  // Off the contact set the penalty leaves density exp(-beta gap); gaps
  // below log(1e3)/beta_max still carry more than 1e-3 and count as contact.
  res.contact_tol = opts.contact_tol >= 0.0
                        ? opts.contact_tol
                        : std::max({1e-4 * oscillation(f), 1e-7, std::log(1e3) / betas.back()});
  res.defect_eps = opts.defect_eps >= 0.0 ? opts.defect_eps : res.contact_tol;

  // A cone-valid obstacle is its own envelope; the continuation would only
  // add its O(log(beta)/beta) offset.
  if (cone_membership(d, f, m, cfg.cone_tol).all_pass()) {
    res.converged = true;
    res.P = f;
    res.density = hessian_density(d, f, m).values;
    res.contact_mask = Mask::Constant(g.size(), true);
    res.defect = 0.0;
    return res;
  }

  ScalarField u(g);
  bool have_start = false;
  bool ok = true;

  auto record = [&](double beta, bool scheduled, const SolveResult& s) {
    BetaRecord rec;
    rec.beta = beta;
    rec.scheduled = scheduled;
    rec.converged = s.report.converged;
    rec.iterations = s.report.iterations;
    rec.residual = s.report.residual;
    rec.wall_seconds = s.report.wall_seconds;
    rec.max_excess = (s.u.values - f.values).maxCoeff();
    rec.defect = defect_of(s.u.values, hessian_density(d, s.u, m).values, f.values, res.defect_eps);
    res.trace.push_back(rec);
  };

  // Solves at `target` from the current iterate (last solved at `from`);
  // on failure, bisects the step geometrically.
  std::function<bool(double, double, int, bool)> advance = [&](double from, double target, int depth,
                                                               bool scheduled) -> bool {
    SolveResult s = solve_exponential(d, f, m, target, cfg, have_start ? &u : nullptr);
    if (s.report.converged) {
      record(target, scheduled, s);
      u = std::move(s.u);
      have_start = true;
      return true;
    }
    if (depth >= opts.max_refinements || !have_start) {
      record(target, scheduled, s);
      return false;
    }
    const double mid = std::sqrt(from * target);
    if (!advance(from, mid, depth + 1, false)) return false;
    return advance(mid, target, depth + 1, scheduled);
  };

  double prev = betas.front();
  for (double beta : betas) {
    if (!advance(prev, beta, 0, true)) {
      ok = false;
      break;
    }
    prev = beta;
  }

  res.converged = ok;
  res.P = u;
  res.density = hessian_density(d, u, m).values;
  res.contact_mask = (u.values - f.values).abs() <= res.contact_tol;
  res.defect = orthogonality_defect(res, f, res.defect_eps);
  return res;
}

EnvelopeResult project(const ScalarField& f, int m, const BetaSchedule& sched, const SolverConfig& cfg) {
  const Differentiator d(f.grid, cfg.backend);
  return project(d, f, m, sched, cfg);
}

double orthogonality_defect(const EnvelopeResult& res, const ScalarField& f, double eps) {
  if (!(eps > 0.0)) throw ConfigError("orthogonality defect: eps must be positive");
  if (f.grid != res.P.grid) throw ConfigError("orthogonality defect: grids differ");
  return defect_of(res.P.values, res.density, f.values, eps);
}

namespace {

void require(const EnvelopeResult& r, const char* what) {
  if (!r.converged) throw NumericalError(std::string(what) + ": beta continuation did not converge");
}

}  // namespace

double lipschitz_check(const Differentiator& d, const ScalarField& f, const ScalarField& g, int m,
                       const BetaSchedule& sched, const SolverConfig& cfg) {
  const auto pf = project(d, f, m, sched, cfg);
  require(pf, "lipschitz check");
  const auto pg = project(d, g, m, sched, cfg);
  require(pg, "lipschitz check");
  return (pf.P.values - pg.P.values).abs().maxCoeff() - (f.values - g.values).abs().maxCoeff();
}

std::vector<ScalarField> regularize(const Differentiator& d, const ScalarField& phi, int m, int levels,
                                    const BetaSchedule& sched, const SolverConfig& cfg,
                                    const RegularizeOptions& opts) {
  const TorusGrid& g = d.grid();
  if (phi.grid != g) throw ConfigError("regularize: field grid does not match");
  if (levels < 1) throw ConfigError("regularize: levels must be at least 1");
  if (!(opts.delta_0 > 0.0)) throw ConfigError("regularize: delta_0 must be positive");
  if (!opts.caps.empty() && static_cast<int>(opts.caps.size()) != levels)
    throw ConfigError("regularize: one cap per level expected");
  bool any_finite = false;
  for (Index p = 0; p < g.size() && !any_finite; ++p) any_finite = !is_sentinel(phi.values[p]);
  if (!any_finite) throw ConfigError("regularize: field has no finite values");

  std::vector<ScalarField> out;
  for (int j = 1; j <= levels; ++j) {
    const double cap = opts.caps.empty() ? -std::ldexp(1.0, j) : opts.caps[j - 1];
    const double delta = opts.delta_0 * std::ldexp(1.0, -j);
    Field obstacle(g.size());
    for (Index p = 0; p < g.size(); ++p) {
      const double a = phi.values[p];
      const double hi = std::max(a, cap);
      obstacle[p] = hi + delta * std::log1p(std::exp(-std::abs(a - cap) / delta)) + delta;
    }
    auto res = project(d, ScalarField(g, obstacle), m, sched, cfg);
    require(res, "regularize");
    out.push_back(std::move(res.P));
  }
  return out;
}

ScalarField extremal_obstacle(const Differentiator& d, const SetMask& E, double radius) {
  if (E.grid != d.grid()) throw ConfigError("extremal obstacle: mask grid does not match");
  Field raw = -E.inside.cast<double>();
  if (radius > 0.0) raw = d.mollify(raw, radius);
  return ScalarField(d.grid(), raw);
}

EnvelopeResult relative_extremal(const Differentiator& d, const SetMask& E, int m, const BetaSchedule& sched,
                                 const SolverConfig& cfg) {
  const auto obstacle = extremal_obstacle(d, E, default_smoothing_radius(d.grid()));
  auto res = project(d, obstacle, m, sched, cfg);
  require(res, "relative extremal function");
  return res;
}

CapacityResult capacity(const Differentiator& d, const SetMask& E, int m, const BetaSchedule& sched,
                        const SolverConfig& cfg) {
  CapacityResult out(d.grid());
  out.smoothing_radius = default_smoothing_radius(d.grid());
  out.extremal = relative_extremal(d, E, m, sched, cfg);
  out.value = (-out.extremal.P.values * out.extremal.density).mean();
  return out;
}

}  // namespace mhess
