#include "mhess/catalogue.hpp"

#include <cmath>
#include <numbers>

#include "mhess/hessian_algebra.hpp"

namespace mhess {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_point(const TorusGrid& g, const std::vector<double>& c, const char* what) {
  if (static_cast<int>(c.size()) != g.dims())
    throw ConfigError(std::string(what) + ": expected " + std::to_string(g.dims()) + " coordinates");
}

}  // namespace

ScalarField cosine_field(const TorusGrid& g, const std::vector<CosineTerm>& terms, double offset) {
  ScalarField f = ScalarField::constant(g, offset);
  const int d = g.dims();
  for (const auto& t : terms) {
    if (static_cast<int>(t.frequencies.size()) != d)
      throw ConfigError("cosine term: expected " + std::to_string(d) + " frequencies");
    if (!t.phases.empty() && static_cast<int>(t.phases.size()) != d)
      throw ConfigError("cosine term: expected " + std::to_string(d) + " phases");
    // Separable: tabulate each axis factor once.
    std::vector<std::vector<double>> factor(d, std::vector<double>(g.N()));
    for (int a = 0; a < d; ++a) {
      const double ph = t.phases.empty() ? 0.0 : t.phases[a];
      for (int i = 0; i < g.N(); ++i) factor[a][i] = std::cos(kTwoPi * t.frequencies[a] * i * g.h() + ph);
    }
    for (Index p = 0; p < g.size(); ++p) {
      double v = t.amplitude;
      for (int a = 0; a < d; ++a) v *= factor[a][g.coord(p, a)];
      f.values[p] += v;
    }
  }
  return f;
}

Field periodic_distance_sq(const TorusGrid& g, const std::vector<double>& center) {
  check_point(g, center, "periodic distance");
  const int d = g.dims();
  std::vector<std::vector<double>> table(d, std::vector<double>(g.N()));
  for (int a = 0; a < d; ++a)
    for (int i = 0; i < g.N(); ++i) {
      const double s = std::sin(std::numbers::pi * (i * g.h() - center[a])) / std::numbers::pi;
      table[a][i] = s * s;
    }
  Field out(g.size());
  for (Index p = 0; p < g.size(); ++p) {
    double r = 0.0;
    for (int a = 0; a < d; ++a) r += table[a][g.coord(p, a)];
    out[p] = r;
  }
  return out;
}

ScalarField gaussian_bump(const TorusGrid& g, const std::vector<double>& center, double radius,
                          double amplitude) {
  if (radius <= 0.0) throw ConfigError("gaussian bump: radius must be positive");
  const Field r2 = periodic_distance_sq(g, center);
  return ScalarField(g, amplitude * (-r2 / (2.0 * radius * radius)).exp());
}

ScalarField log_singular(const TorusGrid& g, const std::vector<double>& center, double epsilon) {
  if (epsilon <= 0.0) throw ConfigError("log singular field: epsilon must be positive");
  const Field r2 = periodic_distance_sq(g, center);
  ScalarField f(g);
  for (Index p = 0; p < g.size(); ++p)
    f.values[p] = r2[p] < 1e-300 ? kNegativeSentinel : 0.5 * epsilon * std::log(r2[p]);
  return f;
}

DensityField bump_density(const TorusGrid& g, const std::vector<Bump>& bumps, double floor) {
  if (floor < 0.0) throw ConfigError("bump density: floor must be nonnegative");
  Field v = Field::Constant(g.size(), floor);
  for (const auto& b : bumps) {
    if (b.radius < 2.0 * g.h())
      throw ConfigError("bump density: radius below two grid spacings is not resolvable");
    if (b.weight < 0.0) throw ConfigError("bump density: negative weight");
    v += gaussian_bump(g, b.center, b.radius, b.weight).values;
  }
  const double mass = v.mean();
  if (!(mass > 0.0)) throw ConfigError("bump density: zero total mass");
  return DensityField(g, v / mass);
}

ScalarField random_smooth(const TorusGrid& g, std::mt19937_64& rng, int max_frequency, int terms) {
  const int d = g.dims();
  std::uniform_int_distribution<int> freq(-max_frequency, max_frequency);
  std::uniform_real_distribution<double> phase(0.0, kTwoPi), amp(0.2, 1.0);
  ScalarField f(g);
  std::vector<int> k(d);
  for (int t = 0; t < terms; ++t) {
    bool zero = true;
    while (zero) {
      for (int a = 0; a < d; ++a) {
        k[a] = freq(rng);
        zero = zero && k[a] == 0;
      }
    }
    const double a0 = amp(rng), ph = phase(rng);
    for (Index p = 0; p < g.size(); ++p) {
      double arg = ph;
      for (int a = 0; a < d; ++a) arg += kTwoPi * k[a] * g.position(p, a);
      f.values[p] += a0 * std::cos(arg);
    }
  }
  f.values /= f.values.abs().maxCoeff();
  return f;
}

ScalarField random_cone_valid(const Differentiator& d, int m, std::mt19937_64& rng, double margin,
                              int max_frequency, int terms) {
  const TorusGrid& g = d.grid();
  ScalarField v = random_smooth(g, rng, max_frequency, terms);
  std::uniform_real_distribution<double> start(0.6, 1.0);
  double a = start(rng) / d.trace(v.values).abs().maxCoeff();
  for (int attempt = 0; attempt < 60; ++attempt, a *= 0.8) {
    ScalarField u(g, a * v.values);
    if (cone_margin(d, u, m).minCoeff() >= margin) return u;
  }
  throw NumericalError("random_cone_valid: no admissible amplitude found");
}

}  // namespace mhess
