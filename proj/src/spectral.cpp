#include "leray/spectral.hpp"

#include <cstring>
#include <numbers>

#include <fftw3.h>

namespace leray {

RealFFT::RealFFT(int dim, int n) : dim_(dim), n_(n) {
  real_size_ = 1;
  for (int a = 0; a < dim; ++a) real_size_ *= static_cast<std::size_t>(n);
  complex_size_ = real_size_ / static_cast<std::size_t>(n) * static_cast<std::size_t>(n / 2 + 1);
  rbuf_ = fftw_alloc_real(real_size_);
  auto* c = fftw_alloc_complex(complex_size_);
  cbuf_ = c;
  int dims[3] = {n, n, n};
  fwd_ = fftw_plan_dft_r2c(dim, dims, rbuf_, c, FFTW_ESTIMATE);
  inv_ = fftw_plan_dft_c2r(dim, dims, c, rbuf_, FFTW_ESTIMATE);
}

RealFFT::~RealFFT() {
  fftw_destroy_plan(static_cast<fftw_plan>(fwd_));
  fftw_destroy_plan(static_cast<fftw_plan>(inv_));
  fftw_free(rbuf_);
  fftw_free(cbuf_);
}

void RealFFT::forward(const double* in, cplx* out) {
  std::memcpy(rbuf_, in, real_size_ * sizeof(double));
  fftw_execute(static_cast<fftw_plan>(fwd_));
  std::memcpy(static_cast<void*>(out), cbuf_, complex_size_ * sizeof(fftw_complex));
}

void RealFFT::inverse(const cplx* in, double* out) {
  std::memcpy(cbuf_, static_cast<const void*>(in), complex_size_ * sizeof(fftw_complex));
  fftw_execute(static_cast<fftw_plan>(inv_));
  std::memcpy(out, rbuf_, real_size_ * sizeof(double));
}

int RealFFT::frequency(std::size_t idx, int axis) const {
  const std::size_t nh = static_cast<std::size_t>(n_ / 2 + 1);
  if (axis == dim_ - 1) return static_cast<int>(idx % nh);
  std::size_t rest = idx / nh;
  for (int a = dim_ - 2; a > axis; --a) rest /= static_cast<std::size_t>(n_);
  const int c = static_cast<int>(rest % static_cast<std::size_t>(n_));
  return c <= n_ / 2 ? c : c - n_;
}

TorusSpectral::TorusSpectral(const Grid& g) : grid_(g), fft_(std::make_unique<RealFFT>(g.dim, g.points)) {
  if (g.topology != Topology::torus) throw Error(ErrorKind::TopologyMismatch, "TorusSpectral needs a torus grid");
  k2_.resize(fft_->complex_size());
  for (std::size_t i = 0; i < k2_.size(); ++i) {
    double s = 0.0;
    for (int a = 0; a < g.dim; ++a) s += wavenumber(i, a) * wavenumber(i, a);
    k2_[i] = s;
  }
}

std::vector<cplx> TorusSpectral::forward(const Field& f) {
  std::vector<cplx> c(fft_->complex_size());
  fft_->forward(f.values().data(), c.data());
  return c;
}

Field TorusSpectral::inverse(const std::vector<cplx>& c) {
  Field f(grid_);
  fft_->inverse(c.data(), f.values().data());
  f.values() /= static_cast<double>(grid_.size());
  return f;
}

double TorusSpectral::wavenumber(std::size_t idx, int axis) const {
  return std::numbers::pi * fft_->frequency(idx, axis) / grid_.extent;
}

double TorusSpectral::k2(std::size_t idx) const { return k2_[idx]; }

Field TorusSpectral::helmholtz(const Field& rhs, double c) {
  auto h = forward(rhs);
  for (std::size_t i = 0; i < h.size(); ++i) h[i] /= (1.0 + c * k2_[i]);
  return inverse(h);
}

SineSpectral::SineSpectral(const Grid& g) : grid_(g) {
  if (g.topology != Topology::free_space) throw Error(ErrorKind::TopologyMismatch, "SineSpectral needs a free-space grid");
  buf_ = fftw_alloc_real(g.size());
  int dims[3] = {g.points, g.points, g.points};
  fftw_r2r_kind kinds[3] = {FFTW_RODFT00, FFTW_RODFT00, FFTW_RODFT00};
  plan_ = fftw_plan_r2r(g.dim, dims, buf_, buf_, kinds, FFTW_ESTIMATE);
  const double len = (g.points + 1) * g.spacing();
  k2_.resize(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto ijk = g.unravel(i);
    double s = 0.0;
    for (int a = 0; a < g.dim; ++a) {
      const double k = std::numbers::pi * (ijk[a] + 1) / len;
      s += k * k;
    }
    k2_[i] = s;
  }
}

SineSpectral::~SineSpectral() {
  fftw_destroy_plan(static_cast<fftw_plan>(plan_));
  fftw_free(buf_);
}

Field SineSpectral::helmholtz(const Field& rhs, double c) {
  const std::size_t n = grid_.size();
  std::memcpy(buf_, rhs.values().data(), n * sizeof(double));
  fftw_execute(static_cast<fftw_plan>(plan_));
  for (std::size_t i = 0; i < n; ++i) buf_[i] /= (1.0 + c * k2_[i]);
  fftw_execute(static_cast<fftw_plan>(plan_));
  Field out(grid_);
  const double norm = std::pow(2.0 * (grid_.points + 1), grid_.dim);
  for (std::size_t i = 0; i < n; ++i) out[i] = buf_[i] / norm;
  return out;
}

PaddedConvolver::PaddedConvolver(const Grid& g, const std::vector<double>& kernel_offsets)
    : grid_(g), fft_(std::make_unique<RealFFT>(g.dim, 2 * g.points)) {
  if (kernel_offsets.size() != fft_->real_size())
    throw Error(ErrorKind::ShapeMismatch, "padded kernel has wrong size");
  khat_.resize(fft_->complex_size());
  fft_->forward(kernel_offsets.data(), khat_.data());
  work_.assign(fft_->real_size(), 0.0);
  cwork_.resize(fft_->complex_size());
}

Field PaddedConvolver::apply(const Field& f) {
  const int n = grid_.points;
  const int m = 2 * n;
  std::fill(work_.begin(), work_.end(), 0.0);
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    auto ijk = grid_.unravel(i);
    std::size_t j = 0;
    for (int a = 0; a < grid_.dim; ++a) j = j * m + static_cast<std::size_t>(ijk[a]);
    work_[j] = f[i];
  }
  fft_->forward(work_.data(), cwork_.data());
  for (std::size_t i = 0; i < cwork_.size(); ++i) cwork_[i] *= khat_[i];
  fft_->inverse(cwork_.data(), work_.data());
  const double scale = grid_.cell_volume() / static_cast<double>(fft_->real_size());
  Field out(grid_);
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    auto ijk = grid_.unravel(i);
    std::size_t j = 0;
    for (int a = 0; a < grid_.dim; ++a) j = j * m + static_cast<std::size_t>(ijk[a]);
    out[i] = work_[j] * scale;
  }
  return out;
}

}  // namespace leray
