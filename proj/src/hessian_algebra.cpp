#include "mhess/hessian_algebra.hpp"

#include <string>

namespace mhess {

namespace {

void check_degree(const TorusGrid& g, int k, int lo) {
  if (k < lo || k > g.n())
    throw ConfigError("Hessian degree " + std::to_string(k) + " out of range for n = " +
                      std::to_string(g.n()));
}

}  // namespace

Eigen::Array<bool, Eigen::Dynamic, 1> ConeReport::point_pass() const {
  return pass.colwise().all().transpose();
}

EigenField eigenvalues(const HermitianHessianField& h) {
  const int n = h.grid.n();
  EigenField out{h.grid, Eigen::ArrayXXd(n, h.grid.size())};
  const HermitianMatrix id = HermitianMatrix::Identity(n, n);
  for (Index p = 0; p < h.grid.size(); ++p) {
    const HermitianMatrix a = h.at(p) + id;
    out.values.col(p) = sorted_eigenvalues(a).array();
  }
  return out;
}

Eigen::ArrayXXd hessian_densities(const Differentiator& d, const ScalarField& u, int m) {
  check_degree(u.grid, m, 0);
  const int n = u.grid.n();
  Eigen::ArrayXXd out(m + 1, u.grid.size());
  d.for_each_hessian(u.values, [&](Index p, const double* h) {
    const auto s = shifted_densities(n, h);
    for (int k = 0; k <= m; ++k) out(k, p) = s[k];
  });
  return out;
}

DensityField hessian_density(const Differentiator& d, const ScalarField& u, int k) {
  check_degree(u.grid, k, 0);
  const int n = u.grid.n();
  Field v(u.grid.size());
  d.for_each_hessian(u.values, [&](Index p, const double* h) { v[p] = shifted_densities(n, h)[k]; });
  return DensityField(u.grid, std::move(v));
}

Field cone_margin(const Differentiator& d, const ScalarField& u, int m) {
  check_degree(u.grid, m, 1);
  const int n = u.grid.n();
  Field v(u.grid.size());
  d.for_each_hessian(u.values, [&](Index p, const double* h) {
    const auto s = shifted_densities(n, h);
    double lo = s[1];
    for (int k = 2; k <= m; ++k) lo = std::min(lo, s[k]);
    v[p] = lo;
  });
  return v;
}

ConeReport cone_membership(const Differentiator& d, const ScalarField& u, int m, double cone_tol) {
  check_degree(u.grid, m, 1);
  ConeReport r;
  r.m = m;
  r.cone_tol = cone_tol;
  const Eigen::ArrayXXd dens = hessian_densities(d, u, m);
  r.pass = dens.bottomRows(m) >= -cone_tol;
  for (int k = 1; k <= m; ++k) {
    const double failing = static_cast<double>((!r.pass.row(k - 1)).count());
    r.violating_fraction.push_back(failing / static_cast<double>(u.grid.size()));
    r.worst_margin.push_back(dens.row(k).minCoeff());
  }
  return r;
}

DensityField positive_part(const DensityField& signed_density) {
  return DensityField(signed_density.grid, signed_density.values.max(0.0));
}

DensityField mixed_density(const Differentiator& d, std::span<const MixedFactor> factors) {
  if (factors.empty()) throw ConfigError("mixed_density: no factors");
  const TorusGrid& g = factors.front().field->grid;
  const int n = g.n();
  int m = 0;
  for (const auto& f : factors) {
    if (f.multiplicity <= 0) throw ConfigError("mixed_density: multiplicities must be positive");
    if (f.field->grid != g) throw ConfigError("mixed_density: factors live on different grids");
    m += f.multiplicity;
  }
  if (m > n) throw ConfigError("mixed_density: total multiplicity exceeds n");

  std::vector<Eigen::ArrayXXd> hess(factors.size());
  for (std::size_t i = 0; i < factors.size(); ++i) d.hessian_packed(factors[i].field->values, hess[i]);

  const HermitianMatrix id = HermitianMatrix::Identity(n, n);
  std::vector<HermitianMatrix> slots(n, id);
  Field v(g.size());
  for (Index p = 0; p < g.size(); ++p) {
    int s = 0;
    for (std::size_t i = 0; i < factors.size(); ++i) {
      const HermitianMatrix a = unpack_hermitian(n, hess[i].col(p).data()) + id;
      for (int c = 0; c < factors[i].multiplicity; ++c) slots[s++] = a;
    }
    v[p] = mixed_discriminant(slots);
  }
  return DensityField(g, std::move(v));
}

}  // namespace mhess
