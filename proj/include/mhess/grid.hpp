#pragma once

#include <Eigen/Core>

#include <array>
#include <complex>
#include <cstdint>

#include "mhess/error.hpp"

namespace mhess {

using Index = Eigen::Index;
using Field = Eigen::ArrayXd;

/// Hermitian matrix of at most 3x3, stack allocated.
using HermitianMatrix =
    Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 3>;
using SmallVector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1>;

/// Uniform sampling of the flat torus C^n / (Z^n + iZ^n).
///
/// Points are stored row-major over the 2n real axes in the order
/// (x_1, y_1, ..., x_n, y_n); the last axis varies fastest. Every axis has
/// unit period and N samples, so the spacing is h = 1/N.
class TorusGrid {
 public:
  TorusGrid(int n, int N);

  int n() const { return n_; }
  int N() const { return N_; }
  int dims() const { return 2 * n_; }
  double h() const { return 1.0 / N_; }
  Index size() const { return size_; }
  Index stride(int axis) const { return strides_[axis]; }

  /// Lattice coordinate of point p along axis.
  int coord(Index p, int axis) const {
    return static_cast<int>((p / strides_[axis]) % N_);
  }
  /// Position in [0,1) of point p along axis.
  double position(Index p, int axis) const { return coord(p, axis) * h(); }
  Index index(const std::array<int, 6>& c) const;

  /// Number of packed real components of a Hermitian n x n matrix.
  int packed_size() const { return n_ * n_; }

  bool operator==(const TorusGrid& o) const { return n_ == o.n_ && N_ == o.N_; }
  bool operator!=(const TorusGrid& o) const { return !(*this == o); }

 private:
  int n_;
  int N_;
  Index size_;
  std::array<Index, 6> strides_{};
};

TorusGrid build_grid(int n, int N);

/// Grid sample of a real function on the torus.
struct ScalarField {
  TorusGrid grid;
  Field values;

  explicit ScalarField(const TorusGrid& g) : grid(g), values(Field::Zero(g.size())) {}
  ScalarField(const TorusGrid& g, Field v);
  static ScalarField constant(const TorusGrid& g, double c);
};

/// Density against the normalized volume form (total volume 1).
///
/// Raw values may be slightly negative (or genuinely signed when produced from
/// a field outside the cone); `clamped()` and serialization clip to zero.
struct DensityField {
  TorusGrid grid;
  Field values;

  static constexpr double kNegativeTolerance = 1e-10;

  explicit DensityField(const TorusGrid& g) : grid(g), values(Field::Zero(g.size())) {}
  DensityField(const TorusGrid& g, Field v);

  double mass() const { return values.mean(); }
  bool is_nonnegative(double tol = kNegativeTolerance) const {
    return values.minCoeff() >= -tol;
  }
  DensityField clamped() const;
};

/// Per-point Hermitian n x n matrices in packed real storage.
///
/// Row layout: the n real diagonal entries first, then (re, im) of every
/// strictly upper entry (j < k) in row-major order. Columns are grid points.
/// Packed storage makes the field Hermitian by construction.
struct HermitianHessianField {
  TorusGrid grid;
  Eigen::ArrayXXd packed;

  explicit HermitianHessianField(const TorusGrid& g)
      : grid(g), packed(Eigen::ArrayXXd::Zero(g.packed_size(), g.size())) {}

  HermitianMatrix at(Index p) const;
  void set(Index p, const HermitianMatrix& a);
};

/// Row of the packed real part of entry (j, k), j < k; the imaginary part
/// follows at the next row.
int packed_offdiag_row(int n, int j, int k);

HermitianMatrix unpack_hermitian(int n, const double* packed);
void pack_hermitian(const HermitianMatrix& a, double* packed);

/// Integral against the normalized volume form: the grid mean.
double integrate(const ScalarField& f);
double integrate(const DensityField& f);

/// Oscillation max - min of a field.
double oscillation(const ScalarField& f);

}  // namespace mhess
