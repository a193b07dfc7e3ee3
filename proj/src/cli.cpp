#include "mhess/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "mhess/catalogue.hpp"
#include "mhess/checks.hpp"
#include "mhess/error.hpp"
#include "mhess/field_io.hpp"
#include "mhess/hessian_algebra.hpp"

namespace mhess::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------- parsing

void expect_object(const json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
}

void allow_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  expect_object(j, where);
  for (const auto& [k, v] : j.items()) {
    bool known = false;
    for (const char* a : keys) known = known || k == a;
    if (!known) throw ConfigError(where + ": unknown key '" + k + "'");
  }
}

template <class T>
T read(const json& j, const char* key, const std::string& where) {
  const std::string path = where.empty() ? key : where + "." + key;
  if (!j.contains(key)) throw ConfigError(path + ": missing");
  try {
    const json& v = j.at(key);
    if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) throw ConfigError(path + ": expected a number");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError(path + ": expected an integer");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(path + ": expected a string");
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(path + ": expected true or false");
    }
    return v.get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

template <class T>
void read_into(const json& j, const char* key, const std::string& where, T& target) {
  if (j.contains(key)) target = read<T>(j, key, where);
}

std::vector<double> read_vector(const json& j, const char* key, const std::string& where) {
  const std::string path = where + "." + key;
  if (!j.contains(key) || !j.at(key).is_array()) throw ConfigError(path + ": expected an array of numbers");
  std::vector<double> out;
  for (const auto& v : j.at(key)) {
    if (!v.is_number()) throw ConfigError(path + ": expected an array of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

std::vector<double> read_point(const json& j, const char* key, const std::string& where, const TorusGrid& g) {
  auto p = read_vector(j, key, where);
  if (static_cast<int>(p.size()) != g.dims())
    throw ConfigError(where + "." + key + ": expected " + std::to_string(g.dims()) + " coordinates");
  return p;
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

// ---------------------------------------------------------------- output

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json to_json(const CheckReport& r) {
  json details = json::object();
  for (const auto& [k, v] : r.details) details[k] = number(v);
  return json{{"name", r.name},
              {"inputs", r.inputs},
              {"measured", number(r.measured)},
              {"bound", number(r.bound)},
              {"tolerance", number(r.tolerance)},
              {"smoothing_radius", r.smoothing_radius},
              {"pass", r.pass},
              {"informational", r.informational},
              {"skipped", r.skipped},
              {"details", details}};
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write " + path.string());
  os << j.dump(2) << '\n';
}

std::string csv_number(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

void write_beta_trace(const fs::path& path, const std::vector<BetaRecord>& trace) {
  std::ofstream os(path);
  os << "beta,scheduled,converged,iterations,residual,defect,max_excess\n";
  for (const auto& r : trace)
    os << csv_number(r.beta) << ',' << r.scheduled << ',' << r.converged << ',' << r.iterations << ','
       << csv_number(r.residual) << ',' << csv_number(r.defect) << ',' << csv_number(r.max_excess) << '\n';
}

// Wall-clock data lives here so every other artifact is reproducible.
void write_metadata(const fs::path& dir, const std::string& command, double seconds, const RunConfig& cfg) {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  std::ostringstream stamp;
  stamp << std::put_time(&utc, "%Y-%m-%dT%H:%M:%SZ");
  int workers = 1;
#ifdef _OPENMP
  workers = omp_get_max_threads();
#endif
  write_json(dir / "metadata.json", json{{"command", command},
                                         {"finished_utc", stamp.str()},
                                         {"wall_seconds", seconds},
                                         {"workers", workers},
                                         {"seed", cfg.seed}});
}

void prepare_output(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

json solver_json(const SolverReport& r) {
  return json{{"converged", r.converged},
              {"iterations", r.iterations},
              {"residual", r.residual},
              {"linear_iterations", r.linear_iterations},
              {"cone_rejections", r.cone_rejections},
              {"merit_rejections", r.merit_rejections},
              {"compatibility_constant", r.compatibility_constant}};
}

struct Problem {
  TorusGrid grid;
  Differentiator diff;

  explicit Problem(const RunConfig& cfg) : grid(cfg.n, cfg.N), diff(grid, cfg.backend) {}
};

void require_section(const json& section, const char* name, const char* command) {
  if (section.is_null()) throw ConfigError(std::string(command) + " needs a '" + name + "' section");
}

void require_cone_valid(const Differentiator& d, const ScalarField& f, int m, double tol, const char* what) {
  for (Index p = 0; p < f.grid.size(); ++p)
    if (is_sentinel(f.values[p])) throw ConfigError(std::string(what) + " must be finite");
  if (!cone_membership(d, f, m, tol).all_pass())
    throw ConfigError(std::string(what) + " is outside the admissible cone");
}

}  // namespace

// ---------------------------------------------------------------- config

RunConfig parse_config(const json& j, const fs::path& base_dir) {
  allow_keys(j, "config",
             {"grid", "m", "backend", "solver", "beta", "envelope", "ascent", "verify", "seed", "output", "field",
              "obstacle", "density", "sets", "profile"});
  RunConfig c;
  c.base_dir = base_dir;
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    allow_keys(g, "grid", {"n", "N"});
    read_into(g, "n", "grid", c.n);
    read_into(g, "N", "grid", c.N);
  }
  (void)TorusGrid(c.n, c.N);  // validates n and N
  read_into(j, "m", "", c.m);
  if (c.m < 1 || c.m > c.n) throw ConfigError("m: must lie in 1.." + std::to_string(c.n));
  if (j.contains("backend")) c.backend = parse_backend(read<std::string>(j, "backend", ""));
  c.solver.backend = c.backend;

  if (j.contains("solver")) {
    const auto& s = j.at("solver");
    allow_keys(s, "solver",
               {"max_newton_iters", "residual_tol", "damping", "max_halvings", "linear_tol", "linear_forcing",
                "gmres_restart", "max_linear_iters", "cone_tol"});
    read_into(s, "max_newton_iters", "solver", c.solver.max_newton_iters);
    read_into(s, "residual_tol", "solver", c.solver.residual_tol);
    read_into(s, "damping", "solver", c.solver.damping);
    read_into(s, "max_halvings", "solver", c.solver.max_halvings);
    read_into(s, "linear_tol", "solver", c.solver.linear_tol);
    read_into(s, "linear_forcing", "solver", c.solver.linear_forcing);
    read_into(s, "gmres_restart", "solver", c.solver.gmres_restart);
    read_into(s, "max_linear_iters", "solver", c.solver.max_linear_iters);
    read_into(s, "cone_tol", "solver", c.solver.cone_tol);
  }
  c.solver.validate();

  if (j.contains("beta")) {
    const auto& b = j.at("beta");
    allow_keys(b, "beta", {"beta_0", "growth", "beta_max"});
    read_into(b, "beta_0", "beta", c.beta.beta_0);
    read_into(b, "growth", "beta", c.beta.growth);
    read_into(b, "beta_max", "beta", c.beta.beta_max);
  }
  c.beta.validate();

  if (j.contains("envelope")) {
    const auto& e = j.at("envelope");
    allow_keys(e, "envelope", {"contact_tol", "defect_eps", "max_refinements"});
    read_into(e, "contact_tol", "envelope", c.envelope.contact_tol);
    read_into(e, "defect_eps", "envelope", c.envelope.defect_eps);
    read_into(e, "max_refinements", "envelope", c.envelope.max_refinements);
    if (c.envelope.max_refinements < 0) throw ConfigError("envelope.max_refinements: must be nonnegative");
  }

  if (j.contains("ascent")) {
    const auto& a = j.at("ascent");
    allow_keys(a, "ascent", {"tau", "backtrack", "max_iters", "stationarity_tol", "max_backtracks"});
    read_into(a, "tau", "ascent", c.ascent.tau);
    read_into(a, "backtrack", "ascent", c.ascent.backtrack);
    read_into(a, "max_iters", "ascent", c.ascent.max_iters);
    read_into(a, "stationarity_tol", "ascent", c.ascent.stationarity_tol);
    read_into(a, "max_backtracks", "ascent", c.ascent.max_backtracks);
  }
  c.ascent.validate();

  if (j.contains("verify")) {
    const auto& v = j.at("verify");
    allow_keys(v, "verify", {"suite", "tolerance", "pairs"});
    read_into(v, "suite", "verify", c.verify.suite);
    if (v.contains("tolerance")) {
      c.verify.tolerance = read<double>(v, "tolerance", "verify");
      if (!(*c.verify.tolerance >= 0.0)) throw ConfigError("verify.tolerance: must be nonnegative");
    }
    read_into(v, "pairs", "verify", c.verify.pairs);
    if (c.verify.pairs < 1) throw ConfigError("verify.pairs: must be positive");
  }

  if (j.contains("seed")) {
    const auto& s = j.at("seed");
    if (!s.is_number_unsigned()) throw ConfigError("seed: expected a nonnegative integer");
    c.seed = s.get<std::uint64_t>();
  }
  if (j.contains("output")) c.output = read<std::string>(j, "output", "");

  if (j.contains("field")) c.field = j.at("field");
  if (j.contains("obstacle")) c.obstacle = j.at("obstacle");
  if (j.contains("density")) c.density = j.at("density");
  if (j.contains("sets")) c.sets = j.at("sets");
  if (j.contains("profile")) {
    const auto& p = j.at("profile");
    allow_keys(p, "profile", {"levels"});
    c.profile_levels = read_vector(p, "levels", "profile");
    for (std::size_t i = 1; i < c.profile_levels.size(); ++i)
      if (!(c.profile_levels[i] > c.profile_levels[i - 1]))
        throw ConfigError("profile.levels: must be increasing");
  }

  // Catalogue sections are checked here too, so a bad problem never reaches
  // a command.
  const TorusGrid g(c.n, c.N);
  const Differentiator d(g, c.backend);
  if (!c.field.is_null()) (void)build_field(c.field, g, d, c.m, base_dir);
  if (!c.obstacle.is_null()) (void)build_field(c.obstacle, g, d, c.m, base_dir);
  if (!c.density.is_null()) (void)build_density(c.density, g, d, c.m, base_dir);
  if (!c.sets.is_null()) (void)build_sets(c.sets, g);
  return c;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(is, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return parse_config(j, path.has_parent_path() ? path.parent_path() : fs::path("."));
}

// ---------------------------------------------------------------- catalogue

ScalarField build_field(const json& spec, const TorusGrid& g, const Differentiator& d, int m,
                        const fs::path& base_dir) {
  const std::string where = "field";
  expect_object(spec, where);
  const auto kind = read<std::string>(spec, "kind", where);
  if (kind == "constant") {
    allow_keys(spec, where, {"kind", "value"});
    return ScalarField::constant(g, read<double>(spec, "value", where));
  }
  if (kind == "cosines") {
    allow_keys(spec, where, {"kind", "terms", "offset"});
    if (!spec.contains("terms") || !spec.at("terms").is_array()) throw ConfigError("field.terms: expected an array");
    std::vector<CosineTerm> terms;
    for (const auto& t : spec.at("terms")) {
      allow_keys(t, "field.terms[]", {"amplitude", "frequencies", "phases"});
      CosineTerm term;
      term.amplitude = read<double>(t, "amplitude", "field.terms[]");
      const auto freq = read_point(t, "frequencies", "field.terms[]", g);
      for (double k : freq) {
        if (k != std::round(k)) throw ConfigError("field.terms[].frequencies: expected integers");
        term.frequencies.push_back(static_cast<int>(k));
      }
      if (t.contains("phases")) term.phases = read_point(t, "phases", "field.terms[]", g);
      terms.push_back(std::move(term));
    }
    double offset = 0.0;
    read_into(spec, "offset", where, offset);
    return cosine_field(g, terms, offset);
  }
  if (kind == "gaussian") {
    allow_keys(spec, where, {"kind", "center", "radius", "amplitude"});
    const double r = read<double>(spec, "radius", where);
    if (!(r > 0.0)) throw ConfigError("field.radius: must be positive");
    return gaussian_bump(g, read_point(spec, "center", where, g), r, read<double>(spec, "amplitude", where));
  }
  if (kind == "log_singular") {
    allow_keys(spec, where, {"kind", "center", "epsilon"});
    const double eps = read<double>(spec, "epsilon", where);
    if (!(eps > 0.0)) throw ConfigError("field.epsilon: must be positive");
    return log_singular(g, read_point(spec, "center", where, g), eps);
  }
  if (kind == "sum") {
    allow_keys(spec, where, {"kind", "terms"});
    if (!spec.contains("terms") || !spec.at("terms").is_array() || spec.at("terms").empty())
      throw ConfigError("field.terms: expected a nonempty array");
    ScalarField total(g);
    for (const auto& t : spec.at("terms")) {
      const auto f = build_field(t, g, d, m, base_dir);
      for (Index p = 0; p < g.size(); ++p)
        total.values[p] = is_sentinel(total.values[p]) || is_sentinel(f.values[p]) ? kNegativeSentinel
                                                                                   : total.values[p] + f.values[p];
    }
    return total;
  }
  if (kind == "file") {
    allow_keys(spec, where, {"kind", "path"});
    auto f = read_scalar_field(resolve(base_dir, read<std::string>(spec, "path", where)));
    if (f.grid != g) throw ConfigError("field file grid does not match the configured grid");
    return f;
  }
  throw ConfigError("field.kind: unknown kind '" + kind + "'");
}

DensityField build_density(const json& spec, const TorusGrid& g, const Differentiator& d, int m,
                           const fs::path& base_dir) {
  const std::string where = "density";
  expect_object(spec, where);
  const auto kind = read<std::string>(spec, "kind", where);
  DensityField mu(g);
  bool normalize = false;
  if (kind == "volume") {
    allow_keys(spec, where, {"kind"});
    mu.values.setOnes();
  } else if (kind == "bumps") {
    allow_keys(spec, where, {"kind", "bumps", "floor"});
    if (!spec.contains("bumps") || !spec.at("bumps").is_array() || spec.at("bumps").empty())
      throw ConfigError("density.bumps: expected a nonempty array");
    std::vector<Bump> bumps;
    for (const auto& b : spec.at("bumps")) {
      allow_keys(b, "density.bumps[]", {"center", "radius", "weight"});
      Bump bump;
      bump.center = read_point(b, "center", "density.bumps[]", g);
      bump.radius = read<double>(b, "radius", "density.bumps[]");
      bump.weight = read<double>(b, "weight", "density.bumps[]");
      if (!(bump.radius > 0.0) || !(bump.weight >= 0.0))
        throw ConfigError("density.bumps[]: radius must be positive and weight nonnegative");
      bumps.push_back(std::move(bump));
    }
    const double floor = read<double>(spec, "floor", where);
    if (!(floor > 0.0)) throw ConfigError("density.floor: must be positive");
    mu = bump_density(g, bumps, floor);
  } else if (kind == "manufactured") {
    // Density of a known cone-valid field; the field itself is the reference.
    allow_keys(spec, where, {"kind", "field"});
    const auto phi = build_field(spec.at("field"), g, d, m, base_dir);
    require_cone_valid(d, phi, m, kDefaultConeTol, "density.field");
    mu = hessian_density(d, phi, m);
    normalize = true;
  } else if (kind == "file") {
    allow_keys(spec, where, {"kind", "path", "normalize"});
    read_into(spec, "normalize", where, normalize);
    const auto any = read_field(resolve(base_dir, read<std::string>(spec, "path", where)));
    if (const auto* df = std::get_if<DensityField>(&any))
      mu = *df;
    else if (const auto* sf = std::get_if<ScalarField>(&any))
      mu = DensityField(sf->grid, sf->values);
    else
      throw ConfigError("density file must hold a scalar or density field");
    if (mu.grid != g) throw ConfigError("density file grid does not match the configured grid");
  } else {
    throw ConfigError("density.kind: unknown kind '" + kind + "'");
  }
  if (!mu.values.allFinite()) throw ConfigError("density: values must be finite");
  if (!(mu.values.minCoeff() > 0.0)) throw ConfigError("density: values must be positive");
  if (normalize) mu.values /= mu.mass();
  if (std::abs(mu.mass() - 1.0) > 1e-8) throw ConfigError("density: must integrate to one (or set normalize)");
  return mu;
}

SetMask build_sets(const json& spec, const TorusGrid& g) {
  if (!spec.is_array()) throw ConfigError("sets: expected an array of boxes");
  SetMask out(g);
  for (const auto& b : spec) {
    allow_keys(b, "sets[]", {"lo", "hi"});
    const auto lo = read_point(b, "lo", "sets[]", g);
    const auto hi = read_point(b, "hi", "sets[]", g);
    for (int a = 0; a < g.dims(); ++a)
      if (!(lo[a] >= 0.0 && lo[a] <= hi[a] && hi[a] <= 1.0))
        throw ConfigError("sets[]: expected 0 <= lo <= hi <= 1 on every axis");
    out = out | SetMask::box(g, lo, hi);
  }
  return out;
}

// ---------------------------------------------------------------- commands

int cmd_solve(const RunConfig& cfg, std::ostream& out) {
  require_section(cfg.density, "density", "solve");
  const Problem pb(cfg);
  const auto mu = build_density(cfg.density, pb.grid, pb.diff, cfg.m, cfg.base_dir);
  std::optional<ScalarField> reference;
  if (cfg.density.value("kind", "") == "manufactured")
    reference = build_field(cfg.density.at("field"), pb.grid, pb.diff, cfg.m, cfg.base_dir);

  prepare_output(cfg.output);
  const Stopwatch clock;
  const auto res = solve_hessian(pb.diff, mu, cfg.m, cfg.solver);
  json report = solver_json(res.report);
  if (reference) {
    const Field a = res.u.values - res.u.values.mean();
    const Field b = reference->values - reference->values.mean();
    report["reference_error"] = (a - b).abs().maxCoeff();
  }
  write_field(cfg.output / "solution.hlf", res.u);
  write_json(cfg.output / "report.json", report);
  {
    std::ofstream os(cfg.output / "residual_history.csv");
    os << "iteration,residual\n";
    for (std::size_t i = 0; i < res.report.residual_history.size(); ++i)
      os << i << ',' << csv_number(res.report.residual_history[i]) << '\n';
  }
  write_metadata(cfg.output, "solve", clock.seconds(), cfg);
  out << "solve: " << (res.report.converged ? "converged" : "not converged") << " residual "
      << res.report.residual << " after " << res.report.iterations << " iterations\n";
  return res.report.converged ? kSuccess : kNotConverged;
}

int cmd_envelope(const RunConfig& cfg, std::ostream& out) {
  require_section(cfg.obstacle, "obstacle", "envelope");
  const Problem pb(cfg);
  const auto f = build_field(cfg.obstacle, pb.grid, pb.diff, cfg.m, cfg.base_dir);
  if (!f.values.allFinite() || (f.values == kNegativeSentinel).any())
    throw ConfigError("obstacle must be finite");

  prepare_output(cfg.output);
  const Stopwatch clock;
  const auto res = project(pb.diff, f, cfg.m, cfg.beta, cfg.solver, cfg.envelope);
  Field mask = res.contact_mask.cast<double>();
  write_field(cfg.output / "envelope.hlf", res.P);
  write_field(cfg.output / "contact_mask.hlf", DensityField(pb.grid, mask));
  write_field(cfg.output / "density.hlf", DensityField(pb.grid, res.density));
  write_json(cfg.output / "report.json", json{{"converged", res.converged},
                                              {"m", res.m},
                                              {"contact_tol", res.contact_tol},
                                              {"defect_eps", res.defect_eps},
                                              {"defect", res.defect},
                                              {"contact_fraction", mask.mean()},
                                              {"max_excess", (res.P.values - f.values).maxCoeff()},
                                              {"steps", res.trace.size()}});
  write_beta_trace(cfg.output / "beta_trace.csv", res.trace);
  write_metadata(cfg.output, "envelope", clock.seconds(), cfg);
  out << "envelope: " << (res.converged ? "converged" : "not converged") << " defect " << res.defect
      << " contact fraction " << mask.mean() << '\n';
  return res.converged ? kSuccess : kNotConverged;
}

int cmd_capacity(const RunConfig& cfg, std::ostream& out) {
  require_section(cfg.sets, "sets", "capacity");
  const Problem pb(cfg);
  const auto E = build_sets(cfg.sets, pb.grid);

  prepare_output(cfg.output);
  const Stopwatch clock;
  const auto res = capacity(pb.diff, E, cfg.m, cfg.beta, cfg.solver);
  const bool ok = res.extremal.converged;
  write_field(cfg.output / "extremal.hlf", res.extremal.P);
  write_json(cfg.output / "report.json", json{{"capacity", res.value},
                                              {"converged", ok},
                                              {"set_volume", E.volume()},
                                              {"smoothing_radius", res.smoothing_radius},
                                              {"defect", res.extremal.defect}});
  write_beta_trace(cfg.output / "beta_trace.csv", res.extremal.trace);
  write_metadata(cfg.output, "capacity", clock.seconds(), cfg);
  out << std::setprecision(12) << res.value << '\n';
  return ok ? kSuccess : kNotConverged;
}

int cmd_energy(const RunConfig& cfg, std::ostream& out) {
  require_section(cfg.field, "field", "energy");
  const Problem pb(cfg);
  const auto phi = build_field(cfg.field, pb.grid, pb.diff, cfg.m, cfg.base_dir);
  const bool singular = (phi.values == kNegativeSentinel).any();
  if (singular && cfg.profile_levels.empty())
    throw ConfigError("energy: a singular field needs profile.levels (its energy is not computed)");
  if (!singular) require_cone_valid(pb.diff, phi, cfg.m, cfg.solver.cone_tol, "field");

  prepare_output(cfg.output);
  const Stopwatch clock;
  json report{{"m", cfg.m}, {"singular", singular}};
  if (!singular) {
    const auto e = energy(pb.diff, phi, cfg.m, cfg.solver.cone_tol);
    report["terms"] = e.terms;
    report["total"] = e.total;
    out << "energy: " << std::setprecision(12) << e.total << '\n';
  }
  if (!cfg.profile_levels.empty()) {
    std::vector<std::vector<CutoffMass>> profiles;
    for (int k = 0; k <= cfg.m; ++k) profiles.push_back(cutoff_mass_profile(pb.diff, phi, k, cfg.profile_levels));
    std::ofstream os(cfg.output / "cutoff_profile.csv");
    os << "level";
    for (int k = 0; k <= cfg.m; ++k) os << ",mass_" << k;
    os << '\n';
    for (std::size_t i = 0; i < cfg.profile_levels.size(); ++i) {
      os << csv_number(cfg.profile_levels[i]);
      for (const auto& p : profiles) os << ',' << csv_number(p[i].mass);
      os << '\n';
    }
    report["final_cutoff_mass"] = profiles.back().back().mass;
    out << "cutoff mass at the deepest level: " << profiles.back().back().mass << '\n';
  }
  write_json(cfg.output / "report.json", report);
  write_metadata(cfg.output, "energy", clock.seconds(), cfg);
  return kSuccess;
}

int cmd_variational(const RunConfig& cfg, std::ostream& out) {
  require_section(cfg.density, "density", "variational");
  const Problem pb(cfg);
  const auto mu = build_density(cfg.density, pb.grid, pb.diff, cfg.m, cfg.base_dir);

  prepare_output(cfg.output);
  const Stopwatch clock;
  const auto res = variational_solve(pb.diff, mu, cfg.m, cfg.ascent, cfg.beta, cfg.solver);
  write_field(cfg.output / "solution.hlf", res.phi);
  write_json(cfg.output / "report.json", json{{"converged", res.converged},
                                              {"iterations", res.iterations},
                                              {"projections", res.projections},
                                              {"stationarity", res.stationarity},
                                              {"F", res.trace.empty() ? 0.0 : res.trace.back().F}});
  {
    std::ofstream os(cfg.output / "ascent_trace.csv");
    os << "iteration,F,stationarity,tau,projected\n";
    for (std::size_t i = 0; i < res.trace.size(); ++i) {
      const auto& r = res.trace[i];
      os << i << ',' << csv_number(r.F) << ',' << csv_number(r.stationarity) << ',' << csv_number(r.tau) << ','
         << r.projected << '\n';
    }
  }
  write_metadata(cfg.output, "variational", clock.seconds(), cfg);
  out << "variational: " << (res.converged ? "converged" : "not converged") << " stationarity "
      << res.stationarity << '\n';
  return res.converged ? kSuccess : kNotConverged;
}

// ---------------------------------------------------------------- verify

namespace {

using Reports = std::vector<CheckReport>;

CheckReport scalar_report(std::string name, std::string inputs, double measured, double tol) {
  CheckReport r;
  r.name = std::move(name);
  r.inputs = std::move(inputs);
  r.measured = measured;
  r.tolerance = tol;
  r.decide();
  return r;
}

std::string degree(int m) { return "m=" + std::to_string(m); }

void suite_principles(const RunConfig& cfg, const Differentiator& d, std::mt19937_64& rng, Reports& out) {
  const auto& g = d.grid();
  for (int m = 1; m <= g.n(); ++m)
    for (int i = 0; i < cfg.verify.pairs; ++i) {
      const auto phi = random_cone_valid(d, m, rng);
      const auto psi = random_cone_valid(d, m, rng);
      auto r = comparison_check(d, phi, psi, m);
      r.inputs = degree(m) + " pair " + std::to_string(i);
      out.push_back(r);
      const DensityField mu(g, 0.5 * hessian_density(d, phi, m).values.min(hessian_density(d, psi, m).values));
      auto s = maximum_density_check(d, phi, psi, mu, m);
      s.inputs = r.inputs;
      out.push_back(s);
    }
}

void suite_classes(const Differentiator& d, Reports& out) {
  const auto& g = d.grid();
  const double eps = 0.6;
  const auto pole = log_singular(g, std::vector<double>(g.dims(), 0.5), eps);
  std::vector<double> levels;
  for (double r = 0.45; r >= 4.0 * g.h(); r *= 0.85) levels.push_back(-eps * std::log(r));
  if (levels.size() < 2) levels = {-eps * std::log(0.45), -eps * std::log(0.3)};
  for (int m = 1; m <= g.n(); ++m) {
    auto r = profile_monotonicity(cutoff_mass_profile(d, pole, m, levels));
    r.inputs = degree(m) + " logarithmic pole";
    out.push_back(r);
    auto s = nesting_check(d, pole, m, levels);
    s.inputs = r.inputs;
    out.push_back(s);
    if (m < g.n()) {
      const std::vector<double> caps{-1.0, -2.0, -4.0, -8.0};
      auto p = lp_integrability_check(pole, m, 1.0, caps);
      p.inputs = r.inputs + " p=1";
      out.push_back(p);
      const double edge = static_cast<double>(g.n()) / (g.n() - m);
      auto q = lp_integrability_check(pole, m, edge, caps);
      q.inputs = r.inputs + " p=n/(n-m)";
      out.push_back(q);
    }
  }
}

// Capacities always use the stencil backend: its first-order scheme keeps
// the penalized iterates below the obstacle, while the spectral one
// overshoots on rough set obstacles and the continuation stalls.
void suite_capacity(const RunConfig& cfg, const Differentiator& spectral, std::mt19937_64& rng, Reports& out) {
  const auto& g = spectral.grid();
  const Differentiator d(g, Backend::finite_difference);
  SolverConfig solver = cfg.solver;
  solver.backend = Backend::finite_difference;
  for (int m = 1; m < g.n(); ++m) {
    std::vector<SetMask> family;
    // Sides 1 - j h stay well above the 2h smoothing radius on any grid.
    for (int j = 1; j <= 4; ++j) {
      const double side = 1.0 - j * g.h();
      const double lo = 0.5 - side / 2;
      family.push_back(SetMask::box(g, std::vector<double>(g.dims(), lo), std::vector<double>(g.dims(), lo + side)));
    }
    const double p = (1.0 + static_cast<double>(g.n()) / (g.n() - m)) / 2.0;
    auto r = volume_capacity_check(d, family, m, p, cfg.beta, solver);
    r.inputs = degree(m) + " centered boxes";
    out.push_back(r);
  }
  for (int m = 1; m <= g.n(); ++m) {
    auto phi = random_cone_valid(d, m, rng);
    phi.values -= phi.values.maxCoeff();
    const double depth = -phi.values.minCoeff();
    auto r = capacity_tail_check(d, phi, m, {0.25 * depth, 0.5 * depth, 0.75 * depth}, cfg.beta, solver);
    r.inputs = degree(m) + " bounded random field";
    out.push_back(r);
  }
}

void suite_energy(const RunConfig& cfg, const Differentiator& d, std::mt19937_64& rng, Reports& out) {
  const auto& g = d.grid();
  for (int m = 1; m <= g.n(); ++m) {
    for (int i = 0; i < cfg.verify.pairs; ++i) {
      const auto phi = random_cone_valid(d, m, rng);
      const auto psi = random_cone_valid(d, m, rng);
      out.push_back(scalar_report("cocycle", degree(m) + " pair " + std::to_string(i), cocycle_gap(d, phi, psi, m),
                                  1e-7));
    }
    const auto phi = random_cone_valid(d, m, rng);
    out.push_back(scalar_report("primitive", degree(m) + " constant direction",
                                primitive_check(d, phi, ScalarField::constant(g, 1.0), m, 1e-3), 1e-5));
    std::vector<ScalarField> shifted;
    for (int j = 1; j <= 4; ++j) shifted.emplace_back(g, phi.values + 1.0 / j);
    auto r = monotone_convergence_check(d, phi, shifted, m, default_weights(g));
    r.inputs = degree(m) + " shifted approximants";
    out.push_back(r);
  }
}

}  // namespace

int cmd_verify(const RunConfig& cfg, const std::string& suite, std::ostream& out) {
  static const std::vector<std::string> known{"principles", "classes", "capacity", "energy", "all"};
  if (std::find(known.begin(), known.end(), suite) == known.end())
    throw ConfigError("unknown suite '" + suite + "'");
  const Problem pb(cfg);

  prepare_output(cfg.output);
  const Stopwatch clock;
  std::mt19937_64 rng(cfg.seed);
  Reports reports;
  const bool all = suite == "all";
  if (all || suite == "principles") suite_principles(cfg, pb.diff, rng, reports);
  if (all || suite == "classes") suite_classes(pb.diff, reports);
  if (all || suite == "capacity") suite_capacity(cfg, pb.diff, rng, reports);
  if (all || suite == "energy") suite_energy(cfg, pb.diff, rng, reports);

  int failures = 0;
  json summary_checks = json::array();
  {
    std::ofstream os(cfg.output / "reports.jsonl");
    for (auto& r : reports) {
      if (cfg.verify.tolerance && !r.skipped && !r.informational) {
        r.tolerance = *cfg.verify.tolerance;
        r.decide();
      }
      failures += r.pass ? 0 : 1;
      os << to_json(r).dump() << '\n';
      summary_checks.push_back(json{{"name", r.name}, {"inputs", r.inputs}, {"pass", r.pass}});
      out << (r.pass ? "PASS " : "FAIL ") << r.name << " [" << r.inputs << "] measured " << r.measured << '\n';
    }
  }
  write_json(cfg.output / "summary.json", json{{"suite", suite},
                                               {"seed", cfg.seed},
                                               {"checks", summary_checks},
                                               {"total", reports.size()},
                                               {"failures", failures},
                                               {"pass", failures == 0}});
  write_metadata(cfg.output, "verify", clock.seconds(), cfg);
  out << suite << ": " << reports.size() - failures << "/" << reports.size() << " checks passed\n";
  return failures == 0 ? kSuccess : kVerificationFailed;
}

// ---------------------------------------------------------------- entry

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Numerical toolkit for complex Hessian equations on the flat torus"};
  app.require_subcommand(1, 1);
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  int workers = 0;
  std::string suite;
  app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory (overrides the config)");
  auto* seed_opt = app.add_option("--seed", seed, "random seed (overrides the config)");
  app.add_option("--workers", workers, "thread cap")->check(CLI::PositiveNumber);
  // Global options are accepted after the subcommand too; subcommands
  // inherit this setting when created.
  app.fallthrough();
  for (const char* name : {"solve", "envelope", "capacity", "energy", "variational"}) app.add_subcommand(name);
  auto* verify = app.add_subcommand("verify", "run a check suite");
  verify->add_option("--suite", suite, "principles, classes, capacity, energy or all");

  std::vector<std::string> rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }

  try {
    RunConfig cfg = config_path.empty() ? parse_config(json::object()) : load_config(config_path);
    if (!out_dir.empty()) cfg.output = out_dir;
    if (*seed_opt) cfg.seed = seed;
    if (workers > 0) {
#ifdef _OPENMP
      omp_set_num_threads(workers);
#endif
    }
    const std::string cmd = app.get_subcommands().front()->get_name();
    if (cmd == "solve") return cmd_solve(cfg, out);
    if (cmd == "envelope") return cmd_envelope(cfg, out);
    if (cmd == "capacity") return cmd_capacity(cfg, out);
    if (cmd == "energy") return cmd_energy(cfg, out);
    if (cmd == "variational") return cmd_variational(cfg, out);
    return cmd_verify(cfg, suite.empty() ? cfg.verify.suite : suite, out);
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kConfigError;
  } catch (const FormatError& e) {
    err << "input error: " << e.what() << '\n';
    return kConfigError;
  } catch (const ConeError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNotConverged;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNotConverged;
  }
}

}  // namespace mhess::cli
