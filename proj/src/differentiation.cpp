#include "mhess/differentiation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

namespace mhess {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kFourPiSq = kTwoPi * kTwoPi;

}  // namespace

Backend parse_backend(const std::string& name) {
  if (name == "spectral") return Backend::spectral;
  if (name == "finite-difference" || name == "finite_difference" || name == "fd")
    return Backend::finite_difference;
  throw ConfigError("unknown differentiation backend '" + name + "'");
}

std::string to_string(Backend b) {
  return b == Backend::spectral ? "spectral" : "finite-difference";
}

Differentiator::Differentiator(const TorusGrid& grid, Backend backend)
    : grid_(grid), backend_(backend), fft_(std::make_unique<RealFFT>(grid)) {
  const int N = grid_.N();
  axis_trace_symbol_.resize(N);
  for (int i = 0; i < N; ++i) {
    const double k = fft_->wave_number(i);
    if (backend_ == Backend::spectral) {
      axis_trace_symbol_[i] = -kFourPiSq * k * k;
    } else {
      const double t = std::sin(std::numbers::pi * k / N);
      axis_trace_symbol_[i] = -4.0 * N * N * t * t;
    }
    axis_trace_symbol_[i] *= kDdcUnit / 4.0;
  }
  // Mean of the symbol over the full lattice.
  double axis_mean = 0.0;
  for (double s : axis_trace_symbol_) axis_mean += s;
  trace_diagonal_ = grid_.dims() * axis_mean / N;
}

void Differentiator::hessian_packed(const Field& u, Eigen::ArrayXXd& out) const {
  const int n = grid_.n();
  out.resize(grid_.packed_size(), grid_.size());
  if (backend_ == Backend::finite_difference) {
    auto store = [&](Index p, const double* h) {
      for (int r = 0; r < n * n; ++r) out(r, p) = h[r];
    };
    for_each_fd_hessian(u, store);
    return;
  }

  RealFFT& fft = *fft_;
  fft.forward(u);
  const std::complex<double>* spec = fft.spectrum();
  std::complex<double>* work = fft.scratch();
  const double q = -kFourPiSq * kDdcUnit / 4.0;
  Field component(grid_.size());

  // Second-derivative symbol xi_a xi_b; odd Nyquist components vanish.
  auto xx = [&](const std::array<int, 6>& c, int a, int b) -> double {
    if (a == b) {
      const double k = fft.wave_number(c[a]);
      return k * k;
    }
    if (fft.is_nyquist(c[a]) || fft.is_nyquist(c[b])) return 0.0;
    return static_cast<double>(fft.wave_number(c[a])) * fft.wave_number(c[b]);
  };
  auto emit = [&](int row, auto&& symbol) {
    fft.for_each_mode([&](Index m, const std::array<int, 6>& c) {
      work[m] = spec[m] * (q * symbol(c));
    });
    fft.inverse(work, component.data());
    out.row(row) = component.transpose();
  };

  for (int j = 0; j < n; ++j)
    emit(j, [&](const auto& c) { return xx(c, 2 * j, 2 * j) + xx(c, 2 * j + 1, 2 * j + 1); });
  int row = n;
  for (int j = 0; j < n; ++j)
    for (int k = j + 1; k < n; ++k) {
      emit(row, [&](const auto& c) { return xx(c, 2 * j, 2 * k) + xx(c, 2 * j + 1, 2 * k + 1); });
      emit(row + 1,
           [&](const auto& c) { return xx(c, 2 * j, 2 * k + 1) - xx(c, 2 * j + 1, 2 * k); });
      row += 2;
    }
}

double Differentiator::trace_symbol(const std::array<int, 6>& c) const {
  double s = 0.0;
  for (int a = 0; a < grid_.dims(); ++a) s += axis_trace_symbol_[c[a]];
  return s;
}

Field Differentiator::trace(const Field& u) const {
  if (backend_ == Backend::finite_difference) {
    Field out(grid_.size());
    const int n = grid_.n();
    for_each_fd_hessian(u, [&](Index p, const double* h) {
      double t = 0.0;
      for (int j = 0; j < n; ++j) t += h[j];
      out[p] = t;
    });
    return out;
  }
  RealFFT& fft = *fft_;
  fft.forward(u);
  std::complex<double>* spec = fft.spectrum();
  fft.for_each_mode([&](Index m, const std::array<int, 6>& c) { spec[m] *= trace_symbol(c); });
  Field out(grid_.size());
  fft.inverse(spec, out.data());
  return out;
}

Field Differentiator::solve_shifted_trace(const Field& r, double a, double b) const {
  RealFFT& fft = *fft_;
  fft.forward(r);
  std::complex<double>* spec = fft.spectrum();
  fft.for_each_mode([&](Index m, const std::array<int, 6>& c) {
    const double s = a * trace_symbol(c) - b;
    spec[m] = (s == 0.0) ? std::complex<double>(0.0) : spec[m] / s;
  });
  Field out(grid_.size());
  fft.inverse(spec, out.data());
  return out;
}

Field Differentiator::mollify(const Field& u, double radius) const {
  if (radius <= 0.0) return u;
  // Lattice kernel (1 - |x|^2 / r^2)^2 on the periodic ball, unit sum.
  const int d = grid_.dims();
  const int N = grid_.N();
  const int reach = std::min(static_cast<int>(std::ceil(radius * N)), N / 2);
  Field kernel = Field::Zero(grid_.size());
  double total = 0.0;
  std::array<int, 6> off{};
  for (int a = 0; a < d; ++a) off[a] = -reach;
  while (true) {
    double r2 = 0.0;
    for (int a = 0; a < d; ++a) r2 += static_cast<double>(off[a] * off[a]);
    const double q = r2 / (radius * radius * N * N);
    if (q < 1.0) {
      std::array<int, 6> c{};
      for (int a = 0; a < d; ++a) c[a] = (off[a] + N) % N;
      const double w = (1.0 - q) * (1.0 - q);
      kernel[grid_.index(c)] += w;
      total += w;
    }
    int a = d - 1;
    for (; a >= 0; --a) {
      if (++off[a] <= reach) break;
      off[a] = -reach;
    }
    if (a < 0) break;
  }
  kernel /= total;

  RealFFT& fft = *fft_;
  fft.forward(kernel);
  std::vector<double> weights(fft.spectrum_size());
  for (Index m = 0; m < fft.spectrum_size(); ++m) weights[m] = fft.spectrum()[m].real();
  fft.forward(u);
  std::complex<double>* spec = fft.spectrum();
  for (Index m = 0; m < fft.spectrum_size(); ++m) spec[m] *= weights[m];
  Field out(grid_.size());
  fft.inverse(spec, out.data());
  return out;
}

Field Differentiator::gradient_norm(const Field& u) const {
  const int d = grid_.dims();
  Field sq = Field::Zero(grid_.size());
  if (backend_ == Backend::finite_difference) {
    const int N = grid_.N();
    for (Index p = 0; p < grid_.size(); ++p) {
      for (int a = 0; a < d; ++a) {
        const Index s = grid_.stride(a);
        const int c = grid_.coord(p, a);
        const Index pp = p + (c == N - 1 ? -(N - 1) * s : s);
        const Index pm = p + (c == 0 ? (N - 1) * s : -s);
        const double g = (u[pp] - u[pm]) * 0.5 * N;
        sq[p] += g * g;
      }
    }
    return sq.sqrt();
  }
  RealFFT& fft = *fft_;
  fft.forward(u);
  const std::complex<double>* spec = fft.spectrum();
  std::complex<double>* work = fft.scratch();
  Field comp(grid_.size());
  for (int a = 0; a < d; ++a) {
    fft.for_each_mode([&](Index m, const std::array<int, 6>& c) {
      const double k = fft.is_nyquist(c[a]) ? 0.0 : fft.wave_number(c[a]);
      work[m] = spec[m] * std::complex<double>(0.0, kTwoPi * k);
    });
    fft.inverse(work, comp.data());
    sq += comp.square();
  }
  return sq.sqrt();
}

HermitianHessianField complex_hessian(const Differentiator& d, const ScalarField& u) {
  if (u.grid != d.grid()) throw ConfigError("field grid does not match differentiator");
  HermitianHessianField h(u.grid);
  d.hessian_packed(u.values, h.packed);
  return h;
}

}  // namespace mhess
