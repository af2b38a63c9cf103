#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "leray/grid_fields.hpp"
#include "leray/spectral.hpp"

namespace leray {

/// Surface area of the unit sphere in R^n (2 for n = 1).
double omega_n(int n);

/// K_n(x): (1/2pi) log|x| for n = 2, |x|^{2-n} / ((2-n) omega_n) otherwise.
double poisson_kernel(int n, const Point& x);

/// grad K_n(x) = x / (omega_n |x|^n). Throws SingularPoint at x = 0.
Point poisson_kernel_grad(int n, const Point& x);

/// Mean of K_n over the cube [-h/2, h/2]^n.
double poisson_kernel_cell_average(int n, double h);

struct GaussianKernelSpec {
  int dim = 1;
  double diffusion = 1.0;
  double elapsed = 1.0;
};

double heat_kernel(const GaussianKernelSpec& spec, const Point& x, const Point& y);

/// Kernel sampled on grid offsets. Torus: N^dim minimal-image offsets.
/// Free space: (2N)^dim offsets m in [-N, N). Both in wrap-around order.
struct SampledKernel {
  Grid grid;
  int side = 0;
  std::vector<double> values;
};

SampledKernel sample_kernel(const Grid& g, const std::function<double(const Point&)>& k,
                            std::optional<double> origin = std::nullopt);

enum class Engine { direct, fast };

/// (k * f)(x) = sum_y k(x - y) f(y) h^n.
Field convolve(const Field& f, const SampledKernel& k, Engine engine);

/// Runs both engines and returns the sup discrepancy; throws EngineMismatch
/// above `tol`.
double engine_self_test(const Field& f, const SampledKernel& k, double tol);

/// Pressure and Leray terms on one grid, with FFT plans and kernel spectra
/// cached.
class LerayOperator {
 public:
  explicit LerayOperator(const Grid& g);
  ~LerayOperator();

  const Grid& grid() const { return grid_; }

  /// sum_{j,k} a_{k,j} b_{j,k}, central differences.
  Field bilinear_source(const VField& a, const VField& b) const;
  Field source(const VField& v) const { return bilinear_source(v, v); }

  /// K_n * q, mean pinned to zero.
  Field newtonian(const Field& q);
  /// int d_i K_n(x - y) q(y) dy for every i.
  VField grad_newtonian(const Field& q);

  Field pressure(const VField& v) { return -1.0 * newtonian(source(v)); }
  VField rhs(const VField& v) { return grad_newtonian(source(v)); }
  VField rhs_bilinear(const VField& a, const VField& b) { return grad_newtonian(bilinear_source(a, b)); }

 private:
  Grid grid_;
  std::unique_ptr<TorusSpectral> torus_;
  std::unique_ptr<PaddedConvolver> pot_;
  std::vector<std::unique_ptr<PaddedConvolver>> grad_;
};

Field leray_pressure(const VField& v);
VField leray_rhs(const VField& v);

/// sup | sum v_{j,i} v_{i,j} - Laplacian(K_n * sum v_{k,j} v_{j,k}) |, with the
/// Laplacian by central differences. On the torus the source mean is removed
/// first since only mean-free sources have periodic potentials.
double pressure_identity_residual(const VField& v);

/// int |q(z)| |log|z|| dz, reported for n = 2 sources.
double log_moment(const Field& q);

}  // namespace leray
