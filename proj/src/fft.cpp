#include "mhess/fft.hpp"

#include <algorithm>
#include <cstring>

namespace mhess {

RealFFT::RealFFT(const TorusGrid& grid) : grid_(grid) {
  const int d = grid_.dims();
  std::vector<int> extent(d, grid_.N());
  spectrum_size_ = grid_.size() / grid_.N() * (grid_.N() / 2 + 1);

  real_ = fftw_alloc_real(grid_.size());
  spectrum_ = reinterpret_cast<std::complex<double>*>(fftw_alloc_complex(spectrum_size_));
  scratch_ = reinterpret_cast<std::complex<double>*>(fftw_alloc_complex(spectrum_size_));
  if (!real_ || !spectrum_ || !scratch_) throw std::bad_alloc();

  forward_plan_ = fftw_plan_dft_r2c(d, extent.data(), real_,
                                    reinterpret_cast<fftw_complex*>(spectrum_),
                                    FFTW_ESTIMATE);
  inverse_plan_ = fftw_plan_dft_c2r(d, extent.data(),
                                    reinterpret_cast<fftw_complex*>(scratch_), real_,
                                    FFTW_ESTIMATE);
}

RealFFT::~RealFFT() {
  if (forward_plan_) fftw_destroy_plan(forward_plan_);
  if (inverse_plan_) fftw_destroy_plan(inverse_plan_);
  fftw_free(real_);
  fftw_free(spectrum_);
  fftw_free(scratch_);
}

void RealFFT::forward(const Field& u) {
  std::memcpy(real_, u.data(), sizeof(double) * grid_.size());
  fftw_execute(forward_plan_);
}

void RealFFT::inverse(std::complex<double>* spectrum, double* out) {
  if (spectrum != scratch_) std::copy(spectrum, spectrum + spectrum_size_, scratch_);
  fftw_execute(inverse_plan_);
  const double scale = 1.0 / static_cast<double>(grid_.size());
  for (Index p = 0; p < grid_.size(); ++p) out[p] = real_[p] * scale;
}

}  // namespace mhess
