#pragma once

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "mhess/error.hpp"
#include "mhess/grid.hpp"

// Pointwise algebra of the m-Hessian operator for matrices of size n <= 3.

namespace mhess {

constexpr double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

/// k-th elementary symmetric polynomial of the entries of `lambda`.
template <typename Derived>
typename Derived::Scalar elementary_symmetric(const Eigen::MatrixBase<Derived>& lambda, int k) {
  using Scalar = typename Derived::Scalar;
  const int n = static_cast<int>(lambda.size());
  if (k < 0 || k > n) throw ConfigError("elementary_symmetric: degree out of range");
  // e[j] accumulates S_j of the prefix processed so far.
  std::array<Scalar, 8> e{};
  e[0] = Scalar(1);
  for (int i = 0; i < n; ++i)
    for (int j = std::min(i + 1, k); j >= 1; --j) e[j] += lambda(i) * e[j - 1];
  return e[k];
}

/// Coefficients S_0..S_n of the characteristic polynomial of the Hermitian
/// matrix I + H, i.e. the sums of principal minors of each order. `packed`
/// holds H in the layout of HermitianHessianField.
inline std::array<double, 4> shifted_minor_sums(int n, const double* packed) {
  std::array<double, 4> s{1.0, 0.0, 0.0, 0.0};
  if (n == 1) {
    s[1] = 1.0 + packed[0];
  } else if (n == 2) {
    const double a = 1.0 + packed[0], d = 1.0 + packed[1];
    const double b2 = packed[2] * packed[2] + packed[3] * packed[3];
    s[1] = a + d;
    s[2] = a * d - b2;
  } else {
    const double a11 = 1.0 + packed[0], a22 = 1.0 + packed[1], a33 = 1.0 + packed[2];
    const double r12 = packed[3], i12 = packed[4];
    const double r13 = packed[5], i13 = packed[6];
    const double r23 = packed[7], i23 = packed[8];
    const double m12 = r12 * r12 + i12 * i12;
    const double m13 = r13 * r13 + i13 * i13;
    const double m23 = r23 * r23 + i23 * i23;
    // Re(a12 a23 conj(a13))
    const double re_cycle = (r12 * r23 - i12 * i23) * r13 + (r12 * i23 + i12 * r23) * i13;
    s[1] = a11 + a22 + a33;
    s[2] = a11 * a22 + a11 * a33 + a22 * a33 - m12 - m13 - m23;
    s[3] = a11 * a22 * a33 + 2.0 * re_cycle - a11 * m23 - a22 * m13 - a33 * m12;
  }
  return s;
}

/// Normalized densities h_k = S_k(I + H) / binom(n, k) for k = 0..n, so that
/// (omega + dd^c u)^k ^ omega^(n-k) = h_k omega^n.
inline std::array<double, 4> shifted_densities(int n, const double* packed) {
  auto s = shifted_minor_sums(n, packed);
  for (int k = 1; k <= n; ++k) s[k] /= binomial(n, k);
  return s;
}

inline bool is_hermitian(const HermitianMatrix& a, double rel_tol = 1e-12) {
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  return (a - a.adjoint()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

/// Ascending eigenvalues of a Hermitian matrix: closed form for n <= 2,
/// Eigen's self-adjoint solver for n = 3.
inline SmallVector sorted_eigenvalues(const HermitianMatrix& a) {
  if (!is_hermitian(a)) throw NumericalError("eigenvalues: matrix is not Hermitian");
  const int n = static_cast<int>(a.rows());
  SmallVector mu(n);
  if (n == 1) {
    mu(0) = a(0, 0).real();
  } else if (n == 2) {
    const double mean = 0.5 * (a(0, 0).real() + a(1, 1).real());
    const double half = 0.5 * (a(0, 0).real() - a(1, 1).real());
    const double r = std::hypot(half, std::abs(a(0, 1)));
    mu(0) = mean - r;
    mu(1) = mean + r;
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3cd> es(Eigen::Matrix3cd(a), Eigen::EigenvaluesOnly);
    mu = es.eigenvalues();
  }
  return mu;
}

/// Mixed discriminant D(A_1, ..., A_n) by inclusion-exclusion polarization of
/// the determinant; D(A, ..., A) = det A.
inline double mixed_discriminant(std::span<const HermitianMatrix> slots) {
  const int n = static_cast<int>(slots.size());
  if (n == 0) return 1.0;
  double sum = 0.0;
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    HermitianMatrix s = HermitianMatrix::Zero(n, n);
    int count = 0;
    for (int i = 0; i < n; ++i)
      if (mask & (1u << i)) {
        s += slots[i];
        ++count;
      }
    const double sign = ((n - count) % 2 == 0) ? 1.0 : -1.0;
    sum += sign * s.determinant().real();
  }
  double factorial = 1.0;
  for (int i = 2; i <= n; ++i) factorial *= i;
  return sum / factorial;
}

/// Coefficient tensor of the derivative of h_m at I + H: writes T (packed,
/// off-diagonal entries doubled) such that
///   d/dt h_m(I + H + t B) |_{t=0} = sum_r T[r] * packed(B)[r].
/// T = N_{m-1}(A) / binom(n, m) with the Newton tensor
///   N_{m-1}(A) = sum_{j<m} (-1)^j S_{m-1-j}(A) A^j.
inline void density_derivative_tensor(int n, int m, const double* packed, double* out) {
  HermitianMatrix a = unpack_hermitian(n, packed);
  a += HermitianMatrix::Identity(n, n);
  const auto s = shifted_minor_sums(n, packed);
  HermitianMatrix power = HermitianMatrix::Identity(n, n);
  HermitianMatrix t = HermitianMatrix::Zero(n, n);
  double sign = 1.0;
  for (int j = 0; j < m; ++j) {
    t += (sign * s[m - 1 - j]) * power;
    power = power * a;
    sign = -sign;
  }
  t /= binomial(n, m);
  pack_hermitian(t, out);
  for (int r = n; r < n * n; ++r) out[r] *= 2.0;
}

}  // namespace mhess
