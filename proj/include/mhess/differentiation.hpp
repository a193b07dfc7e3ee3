#pragma once

#include <array>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "mhess/fft.hpp"
#include "mhess/grid.hpp"

namespace mhess {

/// Scale turning d_{z_j} d_{zbar_k} u into the matrix of dd^c u relative to
/// the flat form omega = sum dx_j ^ dy_j.
inline constexpr double kDdcUnit = 2.0 / std::numbers::pi;

enum class Backend { spectral, finite_difference };

Backend parse_backend(const std::string& name);
std::string to_string(Backend b);

/// Differential operators on one torus grid.
///
/// The spectral backend differentiates the trigonometric interpolant; the
/// finite-difference backend uses second-order central stencils. Both produce
/// the complex Hessian in omega-units:
///   H_jj = k/4 (u_{x_j x_j} + u_{y_j y_j})
///   H_jk = k/4 (u_{x_j x_k} + u_{y_j y_k}) + i k/4 (u_{x_j y_k} - u_{y_j x_k})
/// with k = kDdcUnit.
///
/// Holds FFT buffers, so an instance must not be shared between threads.
class Differentiator {
 public:
  Differentiator(const TorusGrid& grid, Backend backend);

  const TorusGrid& grid() const { return grid_; }
  Backend backend() const { return backend_; }

  /// Packed complex Hessian of u (n*n rows, one column per point).
  void hessian_packed(const Field& u, Eigen::ArrayXXd& out) const;

  /// Streams the packed complex Hessian: fn(p, const double* packed).
  template <class Fn>
  void for_each_hessian(const Field& u, Fn&& fn) const {
    if (backend_ == Backend::spectral) {
      hessian_packed(u, packed_cache_);
      for (Index p = 0; p < grid_.size(); ++p) fn(p, packed_cache_.col(p).data());
    } else {
      for_each_fd_hessian(u, fn);
    }
  }

  /// Trace of the complex Hessian.
  Field trace(const Field& u) const;

  /// Solves (a * trace - b) x = r. When b == 0 the constant mode of r is
  /// dropped and x has zero mean.
  Field solve_shifted_trace(const Field& r, double a, double b) const;

  /// Diagonal entry of the trace operator as a matrix on grid values.
  double trace_diagonal() const { return trace_diagonal_; }

  /// Fourier symbol of the trace operator at a mode (lattice indices).
  double trace_symbol(const std::array<int, 6>& modes) const;

  /// Mollification by the kernel (1 - |x|^2 / r^2)^2 supported in the ball
  /// of radius r = `radius`, normalized on the lattice.
  Field mollify(const Field& u, double radius) const;

  /// Euclidean norm of the real gradient.
  Field gradient_norm(const Field& u) const;

 private:
  template <class Fn>
  void for_each_fd_hessian(const Field& u, Fn&& fn) const;

  TorusGrid grid_;
  Backend backend_;
  std::unique_ptr<RealFFT> fft_;
  std::vector<double> axis_trace_symbol_;
  double trace_diagonal_ = 0.0;
  mutable Eigen::ArrayXXd packed_cache_;
};

/// Free-function form of the Hessian assembly.
HermitianHessianField complex_hessian(const Differentiator& d, const ScalarField& u);

// ---------------------------------------------------------------------------

template <class Fn>
void Differentiator::for_each_fd_hessian(const Field& u, Fn&& fn) const {
  const int n = grid_.n();
  const int d = grid_.dims();
  const int N = grid_.N();
  const double inv_h2 = static_cast<double>(N) * N;
  const double q = kDdcUnit / 4.0;
  const double* v = u.data();

  std::array<int, 6> c{};
  std::array<Index, 6> plus{}, minus{};
  std::array<double, 9> packed{};
  auto second = [&](Index p, int a, int b) {
    if (a == b) return (v[p + plus[a]] - 2.0 * v[p] + v[p + minus[a]]) * inv_h2;
    return (v[p + plus[a] + plus[b]] - v[p + plus[a] + minus[b]] -
            v[p + minus[a] + plus[b]] + v[p + minus[a] + minus[b]]) *
           (0.25 * inv_h2);
  };
  for (Index p = 0; p < grid_.size(); ++p) {
    for (int a = 0; a < d; ++a) {
      const Index s = grid_.stride(a);
      plus[a] = c[a] == N - 1 ? -(N - 1) * s : s;
      minus[a] = c[a] == 0 ? (N - 1) * s : -s;
    }
    for (int j = 0; j < n; ++j)
      packed[j] = q * (second(p, 2 * j, 2 * j) + second(p, 2 * j + 1, 2 * j + 1));
    int row = n;
    for (int j = 0; j < n; ++j)
      for (int k = j + 1; k < n; ++k) {
        packed[row] = q * (second(p, 2 * j, 2 * k) + second(p, 2 * j + 1, 2 * k + 1));
        packed[row + 1] = q * (second(p, 2 * j, 2 * k + 1) - second(p, 2 * j + 1, 2 * k));
        row += 2;
      }
    fn(p, packed.data());
    for (int a = d - 1; a >= 0; --a) {
      if (++c[a] < N) break;
      c[a] = 0;
    }
  }
}

}  // namespace mhess
