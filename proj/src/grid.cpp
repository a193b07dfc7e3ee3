#include "mhess/grid.hpp"

#include <string>

namespace mhess {

TorusGrid::TorusGrid(int n, int N) : n_(n), N_(N) {
  if (n < 1 || n > 3)
    throw ConfigError("complex dimension must be 1, 2 or 3 (got " + std::to_string(n) + ")");
  if (N < 8 || N % 2 != 0)
    throw ConfigError("resolution must be even and >= 8 (got " + std::to_string(N) + ")");
  size_ = 1;
  for (int a = dims() - 1; a >= 0; --a) {
    strides_[a] = size_;
    size_ *= N_;
  }
}

Index TorusGrid::index(const std::array<int, 6>& c) const {
  Index p = 0;
  for (int a = 0; a < dims(); ++a) {
    int ca = ((c[a] % N_) + N_) % N_;
    p += ca * strides_[a];
  }
  return p;
}

TorusGrid build_grid(int n, int N) { return TorusGrid(n, N); }

ScalarField::ScalarField(const TorusGrid& g, Field v) : grid(g), values(std::move(v)) {
  if (values.size() != g.size()) throw ConfigError("field size does not match grid");
}

ScalarField ScalarField::constant(const TorusGrid& g, double c) {
  return ScalarField(g, Field::Constant(g.size(), c));
}

DensityField::DensityField(const TorusGrid& g, Field v) : grid(g), values(std::move(v)) {
  if (values.size() != g.size()) throw ConfigError("density size does not match grid");
}

DensityField DensityField::clamped() const {
  return DensityField(grid, values.max(0.0));
}

int packed_offdiag_row(int n, int j, int k) {
  int row = n;
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) {
      if (a == j && b == k) return row;
      row += 2;
    }
  return -1;
}

HermitianMatrix unpack_hermitian(int n, const double* packed) {
  HermitianMatrix a(n, n);
  for (int j = 0; j < n; ++j) a(j, j) = packed[j];
  int row = n;
  for (int j = 0; j < n; ++j)
    for (int k = j + 1; k < n; ++k) {
      a(j, k) = {packed[row], packed[row + 1]};
      a(k, j) = std::conj(a(j, k));
      row += 2;
    }
  return a;
}

void pack_hermitian(const HermitianMatrix& a, double* packed) {
  const int n = static_cast<int>(a.rows());
  for (int j = 0; j < n; ++j) packed[j] = a(j, j).real();
  int row = n;
  for (int j = 0; j < n; ++j)
    for (int k = j + 1; k < n; ++k) {
      packed[row] = a(j, k).real();
      packed[row + 1] = a(j, k).imag();
      row += 2;
    }
}

HermitianMatrix HermitianHessianField::at(Index p) const {
  return unpack_hermitian(grid.n(), packed.col(p).data());
}

void HermitianHessianField::set(Index p, const HermitianMatrix& a) {
  pack_hermitian(a, packed.col(p).data());
}

double integrate(const ScalarField& f) { return f.values.mean(); }
double integrate(const DensityField& f) { return f.values.mean(); }

double oscillation(const ScalarField& f) {
  return f.values.maxCoeff() - f.values.minCoeff();
}

}  // namespace mhess
