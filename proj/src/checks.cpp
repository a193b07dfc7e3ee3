#include "mhess/checks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "mhess/catalogue.hpp"
#include "mhess/energy.hpp"
#include "mhess/error.hpp"
#include "mhess/hessian_algebra.hpp"

namespace mhess {

void CheckReport::decide() { pass = measured <= bound + tolerance; }

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_cone(const Differentiator& d, const ScalarField& u, int m, const char* what) {
  if (!cone_membership(d, u, m).all_pass()) throw ConeError(std::string(what) + ": input is outside the cone");
}

void check_levels(const std::vector<double>& v, const char* what) {
  if (v.empty()) throw ConfigError(std::string(what) + ": empty level list");
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] > v[i - 1])) throw ConfigError(std::string(what) + ": levels must be increasing");
}

std::string describe(int n, int N, int m) {
  std::ostringstream s;
  s << "n=" << n << " N=" << N << " m=" << m;
  return s.str();
}

}  // namespace

Field smoothed_max(const Differentiator& d, const Field& a, const Field& b, double radius) {
  return d.mollify(a.max(b), radius);
}

CheckReport comparison_check(const Differentiator& d, const ScalarField& phi, const ScalarField& psi, int m,
                             double tol) {
  if (phi.grid != d.grid() || psi.grid != d.grid()) throw ConfigError("comparison check: grids differ");
  require_cone(d, phi, m, "comparison check");
  require_cone(d, psi, m, "comparison check");
  const Field hphi = hessian_density(d, phi, m).values;
  const Field hpsi = hessian_density(d, psi, m).values;
  const Field below = (phi.values < psi.values).cast<double>();
  CheckReport r;
  r.name = "comparison";
  r.inputs = describe(d.grid().n(), d.grid().N(), m);
  r.measured = (below * hpsi).mean() - (below * hphi).mean();
  r.tolerance = tol;
  r.details = {{"set_volume", below.mean()}};
  r.decide();
  return r;
}

CheckReport maximum_density_check(const Differentiator& d, const ScalarField& phi, const ScalarField& psi,
                                  const DensityField& mu, int m, double tol) {
  const TorusGrid& g = d.grid();
  if (phi.grid != g || psi.grid != g || mu.grid != g) throw ConfigError("maximum density check: grids differ");
  if ((hessian_density(d, phi, m).values - mu.values).minCoeff() < -tol ||
      (hessian_density(d, psi, m).values - mu.values).minCoeff() < -tol)
    throw ConfigError("maximum density check: an input density falls below mu");
  CheckReport r;
  r.name = "maximum_density";
  r.inputs = describe(g.n(), g.N(), m);
  r.smoothing_radius = default_smoothing_radius(g);
  const ScalarField top(g, smoothed_max(d, phi.values, psi.values, r.smoothing_radius));
  r.measured = (mu.values - hessian_density(d, top, m).values).maxCoeff();
  r.tolerance = tol;
  r.decide();
  return r;
}

std::vector<CutoffMass> cutoff_mass_profile(const Differentiator& d, const ScalarField& phi, int m,
                                            const std::vector<double>& levels) {
  const TorusGrid& g = d.grid();
  if (phi.grid != g) throw ConfigError("cutoff profile: grid does not match");
  if (m < 0 || m > g.n()) throw ConfigError("cutoff profile: degree out of range");
  check_levels(levels, "cutoff profile");
  const double radius = default_smoothing_radius(g);
  std::vector<CutoffMass> out;
  for (double j : levels) {
    const Field above = (phi.values > -j).cast<double>();
    double mass = above.mean();
    if (m > 0) {
      const ScalarField cut(g, d.mollify(phi.values.max(-j), radius));
      mass = (above * hessian_density(d, cut, m).values).mean();
    }
    out.push_back({j, mass});
  }
  return out;
}

CheckReport profile_monotonicity(const std::vector<CutoffMass>& profile, double tol) {
  CheckReport r;
  r.name = "cutoff_monotone";
  r.inputs = std::to_string(profile.size()) + " levels";
  for (std::size_t i = 1; i < profile.size(); ++i)
    r.measured = std::max(r.measured, profile[i - 1].mass - profile[i].mass);
  for (const auto& c : profile) r.details.push_back({"mass@" + std::to_string(c.level), c.mass});
  r.tolerance = tol;
  r.decide();
  return r;
}

CheckReport nesting_check(const Differentiator& d, const ScalarField& phi, int m, const std::vector<double>& levels,
                          double delta, double tol) {
  if (m < 1) throw ConfigError("nesting check: degree must be at least 1");
  const auto upper = cutoff_mass_profile(d, phi, m, levels);
  const auto lower = cutoff_mass_profile(d, phi, m - 1, levels);
  CheckReport r;
  r.name = "nesting";
  r.inputs = describe(d.grid().n(), d.grid().N(), m);
  r.smoothing_radius = default_smoothing_radius(d.grid());
  r.tolerance = tol;
  const bool premise = upper.back().mass >= 1.0 - delta;
  r.details = {{"premise", premise ? 1.0 : 0.0}, {"mass_m", upper.back().mass}, {"mass_m_minus_1", lower.back().mass}};
  r.measured = premise ? (1.0 - delta) - lower.back().mass : 0.0;
  r.decide();
  return r;
}

CheckReport volume_capacity_check(const Differentiator& d, const std::vector<SetMask>& sets, int m, double p,
                                  const BetaSchedule& sched, const SolverConfig& cfg, double tol) {
  const TorusGrid& g = d.grid();
  CheckReport r;
  r.name = "volume_capacity";
  r.inputs = describe(g.n(), g.N(), m) + " p=" + std::to_string(p) + " sets=" + std::to_string(sets.size());
  r.tolerance = tol;
  if (m >= g.n()) {
    r.skipped = true;
    r.inputs += " (out of exponent range)";
    r.decide();
    return r;
  }
  const double p_top = static_cast<double>(g.n()) / (g.n() - m);
  if (!(p > 1.0 && p < p_top)) throw ConfigError("volume capacity check: p must lie in (1, n/(n-m))");
  if (sets.empty()) throw ConfigError("volume capacity check: empty set family");

  struct Member {
    double volume, cap;
  };
  std::vector<Member> members;
  for (const auto& E : sets) {
    if (E.grid != g) throw ConfigError("volume capacity check: mask grid does not match");
    if (E.count() == 0) continue;
    members.push_back({E.volume(), capacity(d, E, m, sched, cfg).value});
  }
  std::stable_sort(members.begin(), members.end(),
                   [](const Member& a, const Member& b) { return a.volume > b.volume; });
  for (std::size_t i = 0; i < members.size(); ++i) {
    r.details.push_back({"volume_" + std::to_string(i), members[i].volume});
    r.details.push_back({"capacity_" + std::to_string(i), members[i].cap});
  }
  if (members.empty()) {
    r.decide();
    return r;
  }
  auto ratio = [&](const Member& e) { return e.cap > 0.0 ? e.volume / std::pow(e.cap, p) : kInf; };
  double C = 0.0;
  const std::size_t fit = (members.size() + 1) / 2;
  for (std::size_t i = 0; i < fit; ++i) C = std::max(C, ratio(members[i]));
  r.details.push_back({"C", C});
  if (!std::isfinite(C)) {
    r.measured = kInf;
  } else {
    for (const auto& e : members) r.measured = std::max(r.measured, ratio(e) / C - 1.0);
  }
  r.decide();
  return r;
}

CheckReport lp_integrability_check(const ScalarField& phi, int m, double p, const std::vector<double>& caps,
                                   double tol) {
  const int n = phi.grid.n();
  if (m < 1 || m >= n) throw ConfigError("integrability check: requires 1 <= m < n");
  if (!(p > 0.0)) throw ConfigError("integrability check: p must be positive");
  if (caps.size() < 2) throw ConfigError("integrability check: at least two caps needed");
  for (std::size_t i = 1; i < caps.size(); ++i)
    if (!(caps[i] < caps[i - 1])) throw ConfigError("integrability check: caps must decrease");
  CheckReport r;
  r.name = "lp_integrability";
  r.inputs = describe(n, phi.grid.N(), m) + " p=" + std::to_string(p);
  std::vector<double> integrals;
  for (double c : caps) {
    integrals.push_back(phi.values.max(c).abs().pow(p).mean());
    r.details.push_back({"cap" + std::to_string(c), integrals.back()});
  }
  const double last = integrals.back();
  const double prev = integrals[integrals.size() - 2];
  r.measured = std::abs(last - prev) / std::max(std::abs(prev), std::numeric_limits<double>::min());
  r.tolerance = tol;
  if (p >= static_cast<double>(n) / (n - m)) {
    r.informational = true;
    r.bound = kInf;
  }
  r.decide();
  return r;
}

CheckReport capacity_tail_check(const Differentiator& d, const ScalarField& phi, int m,
                                const std::vector<double>& levels, const BetaSchedule& sched,
                                const SolverConfig& cfg) {
  const TorusGrid& g = d.grid();
  check_levels(levels, "capacity tail check");
  if (levels.front() <= 0.0) throw ConfigError("capacity tail check: levels must be positive");
  CheckReport r;
  r.name = "capacity_tail";
  r.inputs = describe(g.n(), g.N(), m);
  r.smoothing_radius = default_smoothing_radius(g);
  r.bound = kInf;
  double prev = 0.0;
  for (double t : levels) {
    const SetMask E(g, phi.values < -t);
    const double cap = E.count() == 0 ? 0.0 : capacity(d, E, m, sched, cfg).value;
    r.details.push_back({"cap@" + std::to_string(t), cap});
    r.measured += t * cap * (t - prev);
    prev = t;
  }
  r.details.push_back({"abs_energy", std::abs(energy(d, phi, m).total)});
  r.decide();
  return r;
}

std::vector<Field> default_weights(const TorusGrid& g) {
  constexpr double twopi = 2.0 * std::numbers::pi;
  std::vector<Field> w{Field::Ones(g.size())};
  for (int a = 0; a < g.dims(); ++a) {
    Field c(g.size()), s(g.size());
    for (Index p = 0; p < g.size(); ++p) {
      c[p] = std::cos(twopi * g.position(p, a));
      s[p] = std::sin(twopi * g.position(p, a));
    }
    w.push_back(std::move(c));
    w.push_back(std::move(s));
  }
  Field mix(g.size());
  for (Index p = 0; p < g.size(); ++p) mix[p] = std::cos(twopi * (g.position(p, 0) + g.position(p, 1)));
  w.push_back(std::move(mix));
  return w;
}

CheckReport monotone_convergence_check(const Differentiator& d, const ScalarField& phi,
                                       const std::vector<ScalarField>& approximants, int m,
                                       const std::vector<Field>& weights, double tol) {
  if (approximants.empty()) throw ConfigError("convergence check: no approximants");
  if (weights.empty()) throw ConfigError("convergence check: no test weights");
  const Field target = hessian_density(d, phi, m).values;
  CheckReport r;
  r.name = "monotone_convergence";
  r.inputs = describe(d.grid().n(), d.grid().N(), m) + " K=" + std::to_string(approximants.size());
  r.tolerance = tol;
  std::vector<double> gaps;
  for (const auto& a : approximants) {
    const Field diff = hessian_density(d, a, m).values - target;
    double worst = 0.0;
    for (const auto& w : weights) worst = std::max(worst, std::abs((w * diff).mean()));
    gaps.push_back(worst);
    r.details.push_back({"gap_" + std::to_string(gaps.size()), worst});
  }
  double rises = 0.0;
  for (std::size_t i = 1; i < gaps.size(); ++i) rises += std::max(0.0, gaps[i] - gaps[i - 1]);
  r.measured = gaps.back() + rises;
  r.decide();
  return r;
}

CheckReport monotone_convergence_check(const Differentiator& d, const ScalarField& phi, int m, int K,
                                       const BetaSchedule& sched, const SolverConfig& cfg, double tol) {
  const auto approx = regularize(d, phi, m, K, sched, cfg);
  return monotone_convergence_check(d, phi, approx, m, default_weights(d.grid()), tol);
}

}  // namespace mhess
