#include "mhess/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include "mhess/algebra.hpp"
#include "mhess/gmres.hpp"

namespace mhess {

namespace {

constexpr double kMaxExponent = 700.0;
constexpr double kArmijo = 1e-4;
constexpr double kOffsetRatio = 1e-2;
constexpr double kMaxOffset = 1e-3;
constexpr int kMaxChords = 2;

double rms(const Field& v) { return std::sqrt(v.square().mean()); }

/// Densities, cone margin and the linearization of h_m at one iterate.
struct Linearization {
  Field density;
  Field margin;
  /// Packed derivative tensor (float storage is enough for a Jacobian);
  /// empty when m = 1, where the derivative is trace / n.
  Eigen::ArrayXXf tensor;
  /// Scalar per point approximating the tensor by a multiple of the identity.
  Field trace_weight;
};

Linearization linearize(const Differentiator& d, const Field& u, int m) {
  const TorusGrid& g = d.grid();
  const int n = g.n();
  const Index size = g.size();
  Linearization lin;
  lin.density.resize(size);
  lin.margin.resize(size);
  if (m == 1) {
    d.for_each_hessian(u, [&](Index p, const double* h) {
      const auto s = shifted_densities(n, h);
      lin.density[p] = s[1];
      lin.margin[p] = s[1];
    });
    lin.trace_weight = Field::Constant(size, 1.0 / n);
    return lin;
  }
  lin.tensor.resize(n * n, size);
  lin.trace_weight.resize(size);
  std::array<double, 9> t{};
  d.for_each_hessian(u, [&](Index p, const double* h) {
    const auto s = shifted_densities(n, h);
    double lo = s[1];
    for (int k = 2; k <= m; ++k) lo = std::min(lo, s[k]);
    lin.density[p] = s[m];
    lin.margin[p] = lo;
    density_derivative_tensor(n, m, h, t.data());
    double tr = 0.0;
    for (int r = 0; r < n * n; ++r) lin.tensor(r, p) = static_cast<float>(t[r]);
    for (int j = 0; j < n; ++j) tr += t[j];
    lin.trace_weight[p] = tr / n;
  });
  return lin;
}

/// Directional derivative of h_m at the linearization point along v.
Field apply_derivative(const Differentiator& d, const Linearization& lin, const Field& v) {
  if (lin.tensor.size() == 0) return d.trace(v) * lin.trace_weight[0];
  const int rows = static_cast<int>(lin.tensor.rows());
  Field out(v.size());
  d.for_each_hessian(v, [&](Index p, const double* h) {
    double s = 0.0;
    for (int r = 0; r < rows; ++r) s += static_cast<double>(lin.tensor(r, p)) * h[r];
    out[p] = s;
  });
  return out;
}

void check_order(const TorusGrid& g, int m) {
  if (m < 1 || m > g.n())
    throw ConfigError("Hessian degree m = " + std::to_string(m) + " out of range for n = " +
                      std::to_string(g.n()));
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Absolute GMRES floor in the 2-norm. The Newton residual is a sup norm, so
// a single bad point can hold it above tolerance while the 2-norm of the
// right side is tiny; the floor is a fraction of the sup target itself.
double linear_floor(const SolverConfig& cfg, Index size, double factor = 1e-2) {
  return std::min(cfg.linear_tol * std::sqrt(static_cast<double>(size)), factor * cfg.residual_tol);
}

bool admissible(const Linearization& lin, double cone_tol, bool strict) {
  if (lin.margin.minCoeff() < -cone_tol) return false;
  return !strict || lin.density.minCoeff() > 0.0;
}

}  // namespace

void SolverConfig::validate() const {
  if (max_newton_iters < 1) throw ConfigError("solver: max_newton_iters must be positive");
  if (!(residual_tol > 0.0)) throw ConfigError("solver: residual_tol must be positive");
  if (!(damping > 0.0 && damping < 1.0)) throw ConfigError("solver: damping must lie in (0, 1)");
  if (max_halvings < 0) throw ConfigError("solver: max_halvings must be nonnegative");
  if (!(linear_tol > 0.0)) throw ConfigError("solver: linear_tol must be positive");
  if (!(linear_forcing > 0.0 && linear_forcing < 1.0))
    throw ConfigError("solver: linear_forcing must lie in (0, 1)");
  if (gmres_restart < 1 || max_linear_iters < 1) throw ConfigError("solver: invalid GMRES limits");
  if (!(cone_tol >= 0.0)) throw ConfigError("solver: cone_tol must be nonnegative");
}

ScalarField hessian_warm_start(const Differentiator& d, const DensityField& f, int m) {
  const TorusGrid& g = d.grid();
  const Field logf = f.values.log();
  Field u = d.solve_shifted_trace(logf - logf.mean(), static_cast<double>(m) / g.n(), 0.0);
  for (int attempt = 0; attempt < 40; ++attempt, u *= 0.5) {
    ScalarField cand(g, u);
    if (cone_margin(d, cand, m).minCoeff() > 1e-3) return cand;
  }
  return ScalarField(g);
}

SolveResult solve_hessian(const Differentiator& d, const DensityField& f, int m,
                          const SolverConfig& cfg, const ScalarField* initial) {
  const auto t0 = std::chrono::steady_clock::now();
  cfg.validate();
  const TorusGrid& g = d.grid();
  if (f.grid != g) throw ConfigError("solve_hessian: density grid does not match");
  check_order(g, m);
  if (!(f.values.minCoeff() > 0.0)) throw ConfigError("solve_hessian: density must be positive");
  if (std::abs(f.mass() - 1.0) > 1e-8) throw ConfigError("solve_hessian: density must integrate to one");

  const Field logf = f.values.log();
  const Index size = g.size();
  SolveResult res{initial ? *initial : hessian_warm_start(d, f, m), {}};
  if (res.u.grid != g) throw ConfigError("solve_hessian: initial guess grid does not match");
  Field u = res.u.values - res.u.values.mean();
  SolverReport& rep = res.report;

  Linearization lin = linearize(d, u, m);
  if (!admissible(lin, cfg.cone_tol, true)) throw ConeError("solve_hessian: start is outside the cone");
  double c = (lin.density.log() - logf).mean();
  Field resid = lin.density.log() - logf - c;

  for (;;) {
    rep.residual = resid.abs().maxCoeff();
    rep.residual_history.push_back(rep.residual);
    if (rep.residual <= cfg.residual_tol) {
      rep.converged = true;
      break;
    }
    if (rep.iterations >= cfg.max_newton_iters) break;
    ++rep.iterations;

    const Field weight = lin.trace_weight / lin.density;
    const double cbar = weight.mean();
    const Field inv_density = lin.density.inverse();
    auto apply = [&](const Field& z) -> Field {
      const double dc = z.mean();
      return apply_derivative(d, lin, z - dc) * inv_density - dc;
    };
    auto precondition = [&](const Field& r) -> Field {
      const double mean = r.mean();
      return d.solve_shifted_trace(r - mean, cbar, 0.0) - mean;
    };
    Field z;
    const double tol = std::max(cfg.linear_forcing * resid.matrix().norm(),
                                linear_floor(cfg, size));
    const auto lres = gmres(apply, precondition, Field(-resid), z, tol, cfg.gmres_restart,
                            cfg.max_linear_iters);
    rep.linear_iterations += lres.iterations;
    const double dc = z.mean();
    const Field step = z - dc;

    const double merit = rms(resid);
    double t = 1.0;
    bool accepted = false;
    for (int halving = 0; halving <= cfg.max_halvings; ++halving, t *= cfg.damping) {
      Field trial = u + t * step;
      Linearization tl = linearize(d, trial, m);
      if (!admissible(tl, cfg.cone_tol, true)) {
        ++rep.cone_rejections;
        continue;
      }
      Field tr = tl.density.log() - logf - (c + t * dc);
      if (rms(tr) > (1.0 - kArmijo * t) * merit) {
        ++rep.merit_rejections;
        continue;
      }
      u = std::move(trial);
      c += t * dc;
      lin = std::move(tl);
      resid = std::move(tr);
      accepted = true;
      break;
    }
    if (!accepted) break;
  }
  res.u = ScalarField(g, u);
  rep.compatibility_constant = c;
  rep.wall_seconds = seconds_since(t0);
  return res;
}

SolveResult solve_hessian(const DensityField& f, int m, const SolverConfig& cfg) {
  const Differentiator d(f.grid, cfg.backend);
  return solve_hessian(d, f, m, cfg);
}

SolveResult solve_exponential(const Differentiator& d, const ScalarField& f, int m, double beta,
                              const SolverConfig& cfg, const ScalarField* initial) {
  const auto t0 = std::chrono::steady_clock::now();
  cfg.validate();
  const TorusGrid& g = d.grid();
  if (f.grid != g) throw ConfigError("solve_exponential: field grid does not match");
  check_order(g, m);
  if (!(beta > 0.0) || !std::isfinite(beta)) throw ConfigError("solve_exponential: beta must be positive");
  if (!f.values.allFinite()) throw ConfigError("solve_exponential: obstacle must be finite");

  const Index size = g.size();
  const Field weight = hessian_density(d, f, m).values.max(0.0) + 1.0 / beta;
  auto rhs = [&](const Field& u) -> Field {
    return (beta * (u - f.values)).min(kMaxExponent).exp() * weight;
  };

  Field u;
  if (initial) {
    if (initial->grid != g) throw ConfigError("solve_exponential: initial guess grid does not match");
    u = initial->values;
  } else {
    u = Field::Constant(size, f.values.minCoeff() - std::log1p(1.0 / beta) / beta);
  }

  SolveResult res{ScalarField(g), {}};
  SolverReport& rep = res.report;
  Linearization lin = linearize(d, u, m);
  if (!admissible(lin, cfg.cone_tol, false)) throw ConeError("solve_exponential: start is outside the cone");
  Field r = rhs(u);
  Field F = lin.density - r;
  const double floor_tol = linear_floor(cfg, size);
  // Retries after a cone failure: the pointwise linear error must drop below
  // the h_m margin of nearly degenerate points.
  const double sharp_tol = linear_floor(cfg, size, 1e-3);

  for (;;) {
    rep.residual = (F / r.max(1.0)).abs().maxCoeff();
    rep.residual_history.push_back(rep.residual);
    if (rep.residual <= cfg.residual_tol) {
      rep.converged = true;
      break;
    }
    if (rep.iterations >= cfg.max_newton_iters) break;
    ++rep.iterations;

    // Where the solution is degenerate (h_m ~ rhs ~ 0) a Newton step changes
    // h_m by a negative quadratic term, so the iterate aims at rhs + offset
    // instead. The offset shrinks with the residual and ends below tolerance.
    const double offset = std::clamp(kOffsetRatio * rep.residual, 0.1 * cfg.residual_tol, kMaxOffset);
    const Field b = offset - F;
    // Frozen scaling keeps the Newton direction a descent direction.
    const Field scale = r.max(1.0).inverse();
    const double merit = rms(b * scale);

    const Field shift = beta * r;
    const double cbar = lin.trace_weight.mean();
    const double bbar = shift.mean();
    const Field diagonal = lin.trace_weight * d.trace_diagonal() - shift;
    auto apply = [&](const Field& v) -> Field { return apply_derivative(d, lin, v) - shift * v; };
    // Jacobi sweeps handle the penalty-dominated points, the shifted
    // constant-coefficient solve the smooth remainder.
    auto precondition = [&](const Field& q) -> Field {
      Field x = q / diagonal;
      x += d.solve_shifted_trace(q - apply(x), cbar, bbar);
      x += (q - apply(x)) / diagonal;
      return x;
    };
    double tol = std::max(cfg.linear_forcing * b.matrix().norm(), floor_tol);
    Field newton;
    rep.linear_iterations += gmres(apply, precondition, b, newton, tol, cfg.gmres_restart, cfg.max_linear_iters).iterations;
    if (!newton.allFinite()) break;

    Field step = newton;
    int chords = 0;
    double t = 1.0;
    bool accepted = false;
    for (int halving = 0; halving <= cfg.max_halvings;) {
      Field trial = u + t * step;
      Linearization tl = linearize(d, trial, m);
      Field tr = rhs(trial);
      Field tF = tl.density - tr;
      const bool inside = admissible(tl, cfg.cone_tol, false);
      if (inside && tF.allFinite() && rms((offset - tF) * scale) <= (1.0 - kArmijo * t) * merit) {
        u = std::move(trial);
        lin = std::move(tl);
        r = std::move(tr);
        F = std::move(tF);
        accepted = true;
        break;
      }
      if (inside) {
        ++rep.merit_rejections;
      } else {
        ++rep.cone_rejections;
      }
      // Violation of the trial point; sharpening or correcting only helps
      // when it is of the size of the linear error or the offset cushion.
      const double violation = inside ? 0.0 : -tl.margin.minCoeff();
      if (t == 1.0 && !inside) {
        // Points near the cone boundary sit within the linear-solve error of
        // it: sharpen the step first, then correct it with the frozen
        // Jacobian, and only then damp.
        if (tol > sharp_tol && violation <= 10.0 * tol) {
          tol = std::max(tol * 1e-3, sharp_tol);
          rep.linear_iterations +=
              gmres(apply, precondition, b, newton, tol, cfg.gmres_restart, cfg.max_linear_iters).iterations;
          step = newton;
          continue;
        }
        if (chords < kMaxChords && tF.allFinite() && violation <= kMaxOffset) {
          ++chords;
          Field correction;
          rep.linear_iterations += gmres(apply, precondition, Field(offset - tF), correction, sharp_tol,
                                         cfg.gmres_restart, cfg.max_linear_iters)
                                       .iterations;
          step += correction;
          continue;
        }
      }
      step = newton;
      chords = kMaxChords;
      t *= cfg.damping;
      ++halving;
    }
    if (!accepted) break;
  }
  res.u = ScalarField(g, u);
  rep.wall_seconds = seconds_since(t0);
  return res;
}

SolveResult solve_exponential(const ScalarField& f, int m, double beta, const SolverConfig& cfg) {
  const Differentiator d(f.grid, cfg.backend);
  return solve_exponential(d, f, m, beta, cfg);
}

}  // namespace mhess
