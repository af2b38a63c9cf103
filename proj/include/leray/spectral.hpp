#pragma once

#include <complex>
#include <memory>
#include <vector>

#include "leray/grid_fields.hpp"

namespace leray {

using cplx = std::complex<double>;

/// Real-to-complex FFT of an n^dim block. Plans use FFTW_ESTIMATE so the
/// chosen algorithm, and with it every output bit, is reproducible.
class RealFFT {
 public:
  RealFFT(int dim, int n);
  ~RealFFT();
  RealFFT(const RealFFT&) = delete;
  RealFFT& operator=(const RealFFT&) = delete;

  int dim() const { return dim_; }
  int n() const { return n_; }
  std::size_t real_size() const { return real_size_; }
  std::size_t complex_size() const { return complex_size_; }

  void forward(const double* in, cplx* out);
  /// Unnormalized inverse.
  void inverse(const cplx* in, double* out);

  /// Signed integer frequency of complex-array index `idx` along `axis`.
  int frequency(std::size_t idx, int axis) const;

 private:
  int dim_;
  int n_;
  std::size_t real_size_;
  std::size_t complex_size_;
  double* rbuf_;
  void* cbuf_;
  void* fwd_;
  void* inv_;
};

/// Spectral operators on the periodic box [-L, L)^dim.
class TorusSpectral {
 public:
  explicit TorusSpectral(const Grid& g);

  const Grid& grid() const { return grid_; }
  std::vector<cplx> forward(const Field& f);
  Field inverse(const std::vector<cplx>& c);
  /// Wavenumber k_axis of a complex coefficient.
  double wavenumber(std::size_t idx, int axis) const;
  double k2(std::size_t idx) const;
  std::size_t complex_size() const { return fft_->complex_size(); }

  /// Solves (1 - c*Laplacian) u = rhs.
  Field helmholtz(const Field& rhs, double c);

 private:
  Grid grid_;
  std::unique_ptr<RealFFT> fft_;
  std::vector<double> k2_;
};

/// Dirichlet sine transform (RODFT00) on the truncated box; the field
/// vanishes one spacing outside the sampled nodes.
class SineSpectral {
 public:
  explicit SineSpectral(const Grid& g);
  ~SineSpectral();
  SineSpectral(const SineSpectral&) = delete;
  SineSpectral& operator=(const SineSpectral&) = delete;

  Field helmholtz(const Field& rhs, double c);

 private:
  Grid grid_;
  double* buf_;
  void* plan_;
  std::vector<double> k2_;
};

/// Linear convolution on the truncated box by zero padding to 2N per axis.
class PaddedConvolver {
 public:
  /// `kernel_offsets` holds k(m*h) for m in [-N, N)^dim in wrap-around order.
  PaddedConvolver(const Grid& g, const std::vector<double>& kernel_offsets);

  Field apply(const Field& f);

 private:
  Grid grid_;
  std::unique_ptr<RealFFT> fft_;
  std::vector<cplx> khat_;
  std::vector<double> work_;
  std::vector<cplx> cwork_;
};

}  // namespace leray
