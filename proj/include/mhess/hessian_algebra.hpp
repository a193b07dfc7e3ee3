#pragma once

#include <span>
#include <vector>

#include "mhess/algebra.hpp"
#include "mhess/differentiation.hpp"
#include "mhess/grid.hpp"

namespace mhess {

inline constexpr double kDefaultConeTol = 1e-9;

/// Sorted eigenvalues of I + H at every point (n rows, ascending).
struct EigenField {
  TorusGrid grid;
  Eigen::ArrayXXd values;
};

/// Pointwise m-positivity of omega + dd^c u, tested as h_k(u) >= -tol for
/// k = 1..m.
struct ConeReport {
  int m = 1;
  double cone_tol = kDefaultConeTol;
  /// pass(k-1, p) for k = 1..m.
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> pass;
  std::vector<double> violating_fraction;
  std::vector<double> worst_margin;

  bool all_pass() const { return pass.all(); }
  /// Points passing every k <= m.
  Eigen::Array<bool, Eigen::Dynamic, 1> point_pass() const;
};

EigenField eigenvalues(const HermitianHessianField& h);

ConeReport cone_membership(const Differentiator& d, const ScalarField& u, int m,
                           double cone_tol = kDefaultConeTol);

/// Normalized density h_k(u) = S_k(eig(I + H(u))) / binom(n, k); raw values,
/// possibly negative outside the cone.
DensityField hessian_density(const Differentiator& d, const ScalarField& u, int k);

/// All densities h_0..h_m in one pass, one row per k.
Eigen::ArrayXXd hessian_densities(const Differentiator& d, const ScalarField& u, int m);

/// Smallest h_k over k = 1..m at each point; >= 0 iff the point is in the cone.
Field cone_margin(const Differentiator& d, const ScalarField& u, int m);

DensityField positive_part(const DensityField& signed_density);

struct MixedFactor {
  const ScalarField* field;
  int multiplicity;
};

/// Density of (omega+dd^c u_1)^{k_1} ^ ... ^ (omega+dd^c u_r)^{k_r} ^ omega^{n-m}
/// against omega^n, m = sum k_i. Equals hessian_density when all factors agree.
DensityField mixed_density(const Differentiator& d, std::span<const MixedFactor> factors);

}  // namespace mhess
