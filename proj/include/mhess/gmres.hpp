#pragma once

#include <cmath>
#include <vector>

#include "mhess/grid.hpp"

namespace mhess {

struct GmresResult {
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
};

/// Restarted GMRES with right preconditioning for A x = b. `x` holds the
/// initial guess on entry (zero when its size does not match b). Stops when
/// ||b - A x|| <= abs_tol.
template <class Apply, class Precondition>
GmresResult gmres(Apply&& apply, Precondition&& precondition, const Field& b, Field& x,
                  double abs_tol, int restart, int max_iters) {
  const Index size = b.size();
  GmresResult out;
  Field r;
  if (x.size() != size) {
    x = Field::Zero(size);
    r = b;
  } else {
    r = b - apply(x);
  }
  double beta = r.matrix().norm();
  out.residual = beta;
  if (beta <= abs_tol) {
    out.converged = true;
    return out;
  }

  std::vector<Field> basis;
  Eigen::MatrixXd hess(restart + 1, restart);
  Eigen::VectorXd cs(restart), sn(restart), g(restart + 1);

  while (out.iterations < max_iters) {
    basis.assign(1, r / beta);
    hess.setZero();
    g.setZero();
    g(0) = beta;
    int j = 0;
    for (; j < restart && out.iterations < max_iters; ++j) {
      Field w = apply(precondition(basis[j]));
      ++out.iterations;
      for (int i = 0; i <= j; ++i) {
        hess(i, j) = (w * basis[i]).sum();
        w -= hess(i, j) * basis[i];
      }
      hess(j + 1, j) = w.matrix().norm();
      for (int i = 0; i < j; ++i) {
        const double t = cs(i) * hess(i, j) + sn(i) * hess(i + 1, j);
        hess(i + 1, j) = -sn(i) * hess(i, j) + cs(i) * hess(i + 1, j);
        hess(i, j) = t;
      }
      const double rho = std::hypot(hess(j, j), hess(j + 1, j));
      cs(j) = hess(j, j) / rho;
      sn(j) = hess(j + 1, j) / rho;
      hess(j, j) = rho;
      hess(j + 1, j) = 0.0;
      g(j + 1) = -sn(j) * g(j);
      g(j) = cs(j) * g(j);
      out.residual = std::abs(g(j + 1));
      const double next_norm = w.matrix().norm();
      if (out.residual <= abs_tol || next_norm == 0.0) {
        ++j;
        break;
      }
      basis.push_back(w / next_norm);
    }
    const Eigen::VectorXd y =
        hess.topLeftCorner(j, j).triangularView<Eigen::Upper>().solve(g.head(j));
    Field combined = Field::Zero(size);
    for (int i = 0; i < j; ++i) combined += y(i) * basis[i];
    x += precondition(combined);
    if (out.residual <= abs_tol) break;
    r = b - apply(x);
    beta = r.matrix().norm();
    out.residual = beta;
    if (beta <= abs_tol) break;
  }
  out.converged = out.residual <= abs_tol;
  return out;
}

}  // namespace mhess
