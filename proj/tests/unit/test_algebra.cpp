#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "mhess/algebra.hpp"
#include "mhess/hessian_algebra.hpp"

using namespace mhess;

namespace {

constexpr double kPi = std::numbers::pi;

double subset_sum(const std::vector<double>& v, int k) {
  const int n = static_cast<int>(v.size());
  double total = 0.0;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (std::popcount(mask) != k) continue;
    double prod = 1.0;
    for (int i = 0; i < n; ++i)
      if (mask & (1u << i)) prod *= v[i];
    total += prod;
  }
  return total;
}

HermitianMatrix random_hermitian(int n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  HermitianMatrix a(n, n);
  for (int j = 0; j < n; ++j) {
    a(j, j) = g(rng);
    for (int k = j + 1; k < n; ++k) {
      a(j, k) = {g(rng), g(rng)};
      a(k, j) = std::conj(a(j, k));
    }
  }
  return a;
}

// Trigonometric closed form for the roots of a 3x3 Hermitian characteristic
// polynomial.
std::array<double, 3> cubic_roots(const HermitianMatrix& a) {
  const double q = a.trace().real() / 3.0;
  const double off = std::norm(a(0, 1)) + std::norm(a(0, 2)) + std::norm(a(1, 2));
  double p2 = 2.0 * off;
  for (int i = 0; i < 3; ++i) p2 += std::pow(a(i, i).real() - q, 2);
  const double p = std::sqrt(p2 / 6.0);
  const HermitianMatrix b = (a - q * HermitianMatrix::Identity(3, 3)) / p;
  const double r = std::clamp(b.determinant().real() / 2.0, -1.0, 1.0);
  const double phi = std::acos(r) / 3.0;
  const double e1 = q + 2 * p * std::cos(phi);
  const double e3 = q + 2 * p * std::cos(phi + 2 * kPi / 3);
  std::array<double, 3> e{e3, 3 * q - e1 - e3, e1};
  std::sort(e.begin(), e.end());
  return e;
}

template <class Fn>
ScalarField sample(const TorusGrid& g, Fn&& fn) {
  ScalarField f(g);
  std::array<double, 6> x{};
  for (Index p = 0; p < g.size(); ++p) {
    for (int a = 0; a < g.dims(); ++a) x[a] = g.position(p, a);
    f.values[p] = fn(x);
  }
  return f;
}

}  // namespace

TEST_CASE("elementary symmetric polynomials") {
  Eigen::Vector3d ones(1, 1, 1), v(2, -1, 3);
  CHECK(elementary_symmetric(ones, 2) == doctest::Approx(3));
  CHECK(elementary_symmetric(v, 2) == doctest::Approx(1));
  CHECK(elementary_symmetric(v, 0) == 1.0);
  CHECK(elementary_symmetric(v, 3) == doctest::Approx(-6));
  CHECK_THROWS_AS(elementary_symmetric(v, 4), ConfigError);
  CHECK_THROWS_AS(elementary_symmetric(v, -1), ConfigError);

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + trial % 3;
    Eigen::VectorXd x(n);
    std::vector<double> xs(n);
    for (int i = 0; i < n; ++i) xs[i] = x(i) = u(rng);
    for (int k = 0; k <= n; ++k)
      CHECK(elementary_symmetric(x, k) == doctest::Approx(subset_sum(xs, k)).epsilon(1e-13));
  }
}

TEST_CASE("eigenvalues of Hermitian matrices") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const HermitianMatrix a = random_hermitian(3, rng);
    const auto mu = sorted_eigenvalues(a);
    const auto oracle = cubic_roots(a);
    for (int i = 0; i < 3; ++i) CHECK(mu(i) == doctest::Approx(oracle[i]).epsilon(1e-10));
  }
  for (int trial = 0; trial < 100; ++trial) {
    const HermitianMatrix a = random_hermitian(2, rng);
    const auto mu = sorted_eigenvalues(a);
    for (int i = 0; i < 2; ++i) {
      const HermitianMatrix shifted = a - mu(i) * HermitianMatrix::Identity(2, 2);
      CHECK(std::abs(shifted.determinant()) < 1e-12);
    }
    CHECK(mu(0) <= mu(1));
  }
  HermitianMatrix bad = HermitianMatrix::Zero(2, 2);
  bad(0, 1) = 1.0;
  CHECK_THROWS_AS(sorted_eigenvalues(bad), NumericalError);
}

TEST_CASE("eigen field of zero and diagonal Hessians") {
  const TorusGrid g(2, 8);
  HermitianHessianField h(g);
  auto e = eigenvalues(h);
  CHECK((e.values - 1.0).abs().maxCoeff() == 0.0);
  h.packed.row(0).setConstant(0.5);
  h.packed.row(1).setConstant(-0.25);
  e = eigenvalues(h);
  CHECK((e.values.row(0) - 0.75).abs().maxCoeff() < 1e-15);
  CHECK((e.values.row(1) - 1.5).abs().maxCoeff() < 1e-15);
}

TEST_CASE("minor sums equal symmetric functions of eigenvalues") {
  std::mt19937_64 rng(3);
  for (int n = 1; n <= 3; ++n)
    for (int trial = 0; trial < 50; ++trial) {
      const HermitianMatrix h = random_hermitian(n, rng, 0.7);
      std::array<double, 9> packed{};
      pack_hermitian(h, packed.data());
      const auto s = shifted_minor_sums(n, packed.data());
      const auto mu = sorted_eigenvalues(h + HermitianMatrix::Identity(n, n));
      for (int k = 0; k <= n; ++k) CHECK(s[k] == doctest::Approx(elementary_symmetric(mu, k)).epsilon(1e-12));
    }
}

TEST_CASE("mixed discriminant by polarization") {
  std::mt19937_64 rng(5);
  for (int n = 1; n <= 3; ++n) {
    const HermitianMatrix a = random_hermitian(n, rng), b = random_hermitian(n, rng),
                          c = random_hermitian(n, rng);
    std::vector<HermitianMatrix> same(n, a);
    CHECK(mixed_discriminant(same) == doctest::Approx(a.determinant().real()).epsilon(1e-12));
    if (n == 3) {
      std::vector<HermitianMatrix> abc{a, b, c}, bca{b, c, a}, cab{c, a, b};
      const double d0 = mixed_discriminant(abc);
      CHECK(mixed_discriminant(bca) == doctest::Approx(d0).epsilon(1e-12));
      CHECK(mixed_discriminant(cab) == doctest::Approx(d0).epsilon(1e-12));
      // Multilinear in each slot.
      std::vector<HermitianMatrix> lin{2.0 * a - 0.5 * b, b, c}, s1{a, b, c}, s2{b, b, c};
      CHECK(mixed_discriminant(lin) ==
            doctest::Approx(2.0 * mixed_discriminant(s1) - 0.5 * mixed_discriminant(s2)).epsilon(1e-12));
    }
    if (n == 2) {
      // D(A, B) = (a11 b22 + a22 b11 - 2 Re(a12 conj(b12))) / 2.
      std::vector<HermitianMatrix> ab{a, b};
      const double expect = 0.5 * (a(0, 0).real() * b(1, 1).real() + a(1, 1).real() * b(0, 0).real() -
                                   2.0 * (a(0, 1) * std::conj(b(0, 1))).real());
      CHECK(mixed_discriminant(ab) == doctest::Approx(expect).epsilon(1e-12));
    }
  }
}

TEST_CASE("derivative tensor matches polarization and finite differences") {
  std::mt19937_64 rng(9);
  for (int n = 1; n <= 3; ++n)
    for (int m = 1; m <= n; ++m) {
      const HermitianMatrix h = random_hermitian(n, rng, 0.3), b = random_hermitian(n, rng);
      std::array<double, 9> ph{}, pb{}, t{};
      pack_hermitian(h, ph.data());
      pack_hermitian(b, pb.data());
      density_derivative_tensor(n, m, ph.data(), t.data());
      double contracted = 0.0;
      for (int r = 0; r < n * n; ++r) contracted += t[r] * pb[r];

      const HermitianMatrix a = h + HermitianMatrix::Identity(n, n);
      std::vector<HermitianMatrix> slots(n, HermitianMatrix::Identity(n, n));
      slots[0] = b;
      for (int i = 1; i < m; ++i) slots[i] = a;
      CHECK(contracted == doctest::Approx(m * mixed_discriminant(slots)).epsilon(1e-10));

      const double eps = 1e-5;
      std::array<double, 9> plus{}, minus{};
      for (int r = 0; r < n * n; ++r) {
        plus[r] = ph[r] + eps * pb[r];
        minus[r] = ph[r] - eps * pb[r];
      }
      const double fd = (shifted_densities(n, plus.data())[m] - shifted_densities(n, minus.data())[m]) / (2 * eps);
      CHECK(contracted == doctest::Approx(fd).epsilon(1e-7));
    }
}

TEST_CASE("hessian density of zero is one and mass is conserved") {
  for (int n = 1; n <= 3; ++n) {
    const TorusGrid g(n, 8);
    const Differentiator d(g, Backend::spectral);
    for (int k = 0; k <= n; ++k)
      CHECK((hessian_density(d, ScalarField(g), k).values - 1.0).abs().maxCoeff() < 1e-15);
    auto u = sample(g, [&](const auto& x) {
      double s = 0.04 * std::cos(2 * kPi * (x[0] + x[1]));
      if (n > 1) s += 0.03 * std::sin(2 * kPi * x[2]) * std::cos(2 * kPi * x[1]);
      if (n > 2) s += 0.02 * std::cos(2 * kPi * (x[4] - x[3])) * std::sin(2 * kPi * x[5]);
      return s;
    });
    for (int k = 1; k <= n; ++k) CHECK(std::abs(integrate(hessian_density(d, u, k)) - 1.0) < 1e-8);
  }
}

TEST_CASE("first density is an affine function of the trace") {
  const TorusGrid g(2, 16);
  const Differentiator d(g, Backend::spectral);
  auto u = sample(g, [](const auto& x) { return 0.1 * std::sin(2 * kPi * (x[0] + 2 * x[3])) * std::cos(2 * kPi * x[1]); });
  const Field t = d.trace(u.values);
  CHECK((hessian_density(d, u, 1).values - (1.0 + 0.5 * t)).abs().maxCoeff() < 1e-9);
}

TEST_CASE("cone membership") {
  const TorusGrid g(2, 16);
  const Differentiator d(g, Backend::spectral);
  const auto zero = cone_membership(d, ScalarField(g), 2);
  CHECK(zero.all_pass());
  CHECK(zero.violating_fraction == std::vector<double>{0.0, 0.0});
  CHECK_THROWS_AS(cone_membership(d, ScalarField(g), 3), ConfigError);
  CHECK_THROWS_AS(cone_membership(d, ScalarField(g), 0), ConfigError);

  // u = A cos(2 pi x1): eigenvalues of I + H are 1 - 2 pi A cos(2 pi x1) and 1,
  // so h_1 = 1 - pi A cos and h_2 = 1 - 2 pi A cos.
  const double amp = 0.5;
  auto u = sample(g, [&](const auto& x) { return amp * std::cos(2 * kPi * x[0]); });
  const auto r1 = cone_membership(d, u, 1);
  const auto r2 = cone_membership(d, u, 2);
  for (Index p = 0; p < g.size(); ++p) {
    const double c = std::cos(2 * kPi * g.position(p, 0));
    CHECK(r1.pass(0, p) == (1.0 - kPi * amp * c >= 0.0));
    CHECK(r2.pass(1, p) == (1.0 - 2.0 * kPi * amp * c >= 0.0));
    if (r2.point_pass()(p)) CHECK(r1.point_pass()(p));
  }
  CHECK(r2.violating_fraction[1] > r1.violating_fraction[0]);
  CHECK(r1.worst_margin[0] == doctest::Approx(1.0 - kPi * amp).epsilon(1e-12));
}

TEST_CASE("positive part") {
  const TorusGrid g(1, 16);
  CHECK((positive_part(DensityField(g, Field::Constant(g.size(), 1.0))).values == 1.0).all());
  CHECK((positive_part(DensityField(g, Field::Constant(g.size(), -3.0))).values == 0.0).all());
  auto c = sample(g, [](const auto& x) { return 0.3 + std::cos(2 * kPi * x[0]); });
  const double pos = positive_part(DensityField(g, c.values)).mass();
  CHECK(pos > 0.0);
  CHECK(pos < c.values.abs().mean());
  CHECK(pos == doctest::Approx(c.values.max(0.0).mean()));
}

TEST_CASE("mixed density") {
  const TorusGrid g(2, 16);
  const Differentiator d(g, Backend::spectral);
  auto u = sample(g, [](const auto& x) { return 0.05 * std::cos(2 * kPi * (x[0] - x[3])) + 0.03 * std::sin(2 * kPi * x[1]); });
  auto v = sample(g, [](const auto& x) { return 0.04 * std::sin(2 * kPi * (x[2] + x[1])); });
  const ScalarField zero(g);

  MixedFactor uu[] = {{&u, 2}};
  CHECK((mixed_density(d, uu).values - hessian_density(d, u, 2).values).abs().maxCoeff() < 1e-12);
  MixedFactor u1[] = {{&u, 1}};
  CHECK((mixed_density(d, u1).values - hessian_density(d, u, 1).values).abs().maxCoeff() < 1e-12);

  // n = 2: D(I + H, I) = (2 + trace H) / 2.
  MixedFactor u0[] = {{&u, 1}, {&zero, 1}};
  const Field t = d.trace(u.values);
  CHECK((mixed_density(d, u0).values - (1.0 + 0.5 * t)).abs().maxCoeff() < 1e-12);

  MixedFactor uv[] = {{&u, 1}, {&v, 1}}, vu[] = {{&v, 1}, {&u, 1}};
  CHECK((mixed_density(d, uv).values - mixed_density(d, vu).values).abs().maxCoeff() < 1e-15);

  // Diagonal fields H(a) = diag(p, 0), H(b) = diag(0, q).
  auto a = sample(g, [](const auto& x) { return 0.05 * std::cos(2 * kPi * x[0]); });
  auto b = sample(g, [](const auto& x) { return 0.05 * std::cos(2 * kPi * x[3]); });
  ScalarField ab(g, 2.0 * a.values - 0.5 * b.values);
  MixedFactor lin[] = {{&ab, 1}, {&b, 1}}, s1[] = {{&a, 1}, {&b, 1}}, s2[] = {{&b, 2}};
  MixedFactor s0[] = {{&zero, 1}, {&b, 1}};
  // Affine in the first slot: D(I + 2Ha - Hb/2, I + Hb) = 2 D(I+Ha, .) - D(I+Hb, .)/2 + D(I, .)/2.
  const Field expect = 2.0 * mixed_density(d, s1).values - 0.5 * mixed_density(d, s2).values -
                       0.5 * mixed_density(d, s0).values;
  CHECK((mixed_density(d, lin).values - expect).abs().maxCoeff() < 1e-12);

  MixedFactor too_many[] = {{&u, 3}};
  CHECK_THROWS_AS(mixed_density(d, too_many), ConfigError);
  MixedFactor nonpos[] = {{&u, 0}};
  CHECK_THROWS_AS(mixed_density(d, nonpos), ConfigError);
}
