#pragma once

#include <fftw3.h>

#include <complex>
#include <memory>
#include <vector>

#include "mhess/grid.hpp"

namespace mhess {

/// Real-to-complex transform over all 2n axes of a torus grid.
///
/// The half spectrum keeps the last axis truncated to N/2 + 1 entries.
/// Transforms are unnormalized; `inverse` divides by the number of points.
class RealFFT {
 public:
  explicit RealFFT(const TorusGrid& grid);
  ~RealFFT();
  RealFFT(const RealFFT&) = delete;
  RealFFT& operator=(const RealFFT&) = delete;

  const TorusGrid& grid() const { return grid_; }
  Index spectrum_size() const { return spectrum_size_; }
  int half_last() const { return grid_.N() / 2 + 1; }

  /// Forward transform of `u` into the owned spectrum buffer.
  void forward(const Field& u);
  /// Inverse transform of `spectrum` (which is consumed) into `out`.
  void inverse(std::complex<double>* spectrum, double* out);

  std::complex<double>* spectrum() { return spectrum_; }
  std::complex<double>* scratch() { return scratch_; }

  /// Signed wave number of lattice index i; the Nyquist index maps to +N/2.
  int wave_number(int i) const { return i <= grid_.N() / 2 ? i : i - grid_.N(); }
  bool is_nyquist(int i) const { return i == grid_.N() / 2; }

  /// Calls fn(q, xi) for every spectral index q, with xi the wave-number
  /// indices (lattice indices, not signed numbers) along each axis.
  template <class Fn>
  void for_each_mode(Fn&& fn) const {
    const int d = grid_.dims();
    std::array<int, 6> c{};
    for (Index q = 0; q < spectrum_size_; ++q) {
      fn(q, c);
      for (int a = d - 1; a >= 0; --a) {
        const int extent = (a == d - 1) ? grid_.N() / 2 + 1 : grid_.N();
        if (++c[a] < extent) break;
        c[a] = 0;
      }
    }
  }

 private:
  TorusGrid grid_;
  Index spectrum_size_;
  double* real_ = nullptr;
  std::complex<double>* spectrum_ = nullptr;
  std::complex<double>* scratch_ = nullptr;
  fftw_plan forward_plan_ = nullptr;
  fftw_plan inverse_plan_ = nullptr;
};

}  // namespace mhess
