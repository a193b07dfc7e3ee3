#pragma once

// Independent reference solutions used by the unit and acceptance tests.

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "mhess/grid.hpp"

namespace oracle {

// Largest grid function u <= f with 1 + (2/pi)/(4 n h^2) * (5-point second
// differences summed over all real axes) >= 0: the discrete m = 1 obstacle
// problem for the stencil scheme. Projected Gauss-Seidel with
// over-relaxation, started from f.
inline mhess::Field obstacle_psor(const mhess::TorusGrid& g, const mhess::Field& f, double omega = 1.5,
                                  double tol = 1e-15, int max_sweeps = 200000) {
  const int dims = g.dims();
  const double h = g.h();
  const double a = (2.0 / std::numbers::pi) / (4.0 * g.n() * h * h);
  mhess::Field u = f;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double change = 0.0;
    for (mhess::Index p = 0; p < g.size(); ++p) {
      double nb = 0.0;
      for (int ax = 0; ax < dims; ++ax) {
        const int c = g.coord(p, ax);
        const mhess::Index s = g.stride(ax);
        const mhess::Index up = c + 1 == g.N() ? p - (g.N() - 1) * s : p + s;
        const mhess::Index dn = c == 0 ? p + (g.N() - 1) * s : p - s;
        nb += u[up] + u[dn];
      }
      const double gs = (nb + 1.0 / a) / (2.0 * dims);
      const double v = std::min(f[p], u[p] + omega * (gs - u[p]));
      change = std::max(change, std::abs(v - u[p]));
      u[p] = v;
    }
    if (change < tol) break;
  }
  return u;
}

// Same problem for an obstacle depending on x_1 only: the solution does too,
// and only the x_1 differences survive.
inline std::vector<double> obstacle_psor_1d(int n, const std::vector<double>& f, double omega = 1.5,
                                            double tol = 1e-15, int max_sweeps = 1000000) {
  const int N = static_cast<int>(f.size());
  const double h = 1.0 / N;
  const double a = (2.0 / std::numbers::pi) / (4.0 * n * h * h);
  std::vector<double> u = f;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double change = 0.0;
    for (int i = 0; i < N; ++i) {
      const double gs = (u[(i + 1) % N] + u[(i + N - 1) % N] + 1.0 / a) / 2.0;
      const double v = std::min(f[i], u[i] + omega * (gs - u[i]));
      change = std::max(change, std::abs(v - u[i]));
      u[i] = v;
    }
    if (change < tol) break;
  }
  return u;
}

// Mean-zero solution of (1/n) trace H(u) = rhs by a full complex DFT, with
// H_jj = (2/pi)/4 (d^2/dx_j^2 + d^2/dy_j^2). Built directly on FFTW, not on
// the library's transform wrapper. rhs must have zero mean.
inline mhess::Field linear_trace_solve(const mhess::TorusGrid& g, const mhess::Field& rhs) {
  const int dims = g.dims();
  const int N = g.N();
  const mhess::Index P = g.size();
  std::vector<int> shape(dims, N);
  auto* buf = reinterpret_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * P));
  fftw_plan fwd = fftw_plan_dft(dims, shape.data(), buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
  fftw_plan inv = fftw_plan_dft(dims, shape.data(), buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
  // Row-major layout with the last axis fastest, matching the lattice index.
  for (mhess::Index p = 0; p < P; ++p) {
    buf[p][0] = rhs[p];
    buf[p][1] = 0.0;
  }
  fftw_execute(fwd);
  const double scale = (2.0 / std::numbers::pi) / (4.0 * g.n()) * 4.0 * std::numbers::pi * std::numbers::pi;
  for (mhess::Index q = 0; q < P; ++q) {
    double k2 = 0.0;
    mhess::Index rest = q;
    for (int a = dims - 1; a >= 0; --a) {
      int i = static_cast<int>(rest % N);
      rest /= N;
      const int k = i <= N / 2 ? i : i - N;
      k2 += static_cast<double>(k) * k;
    }
    const double symbol = -scale * k2;
    if (k2 == 0.0) {
      buf[q][0] = buf[q][1] = 0.0;
    } else {
      buf[q][0] /= symbol * P;
      buf[q][1] /= symbol * P;
    }
  }
  fftw_execute(inv);
  mhess::Field u(P);
  for (mhess::Index p = 0; p < P; ++p) u[p] = buf[p][0];
  fftw_destroy_plan(fwd);
  fftw_destroy_plan(inv);
  fftw_free(buf);
  return u;
}

}  // namespace oracle
