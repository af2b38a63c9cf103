#pragma once

#include <functional>
#include <vector>

#include "leray/grid_fields.hpp"

namespace leray {

/// Coefficients b(t, x) of  u_t = D Laplacian(u) + b . grad(u).
struct DriftSpec {
  int dim = 1;
  std::function<Point(double, const Point&)> b;
  double bound = 0.0;
  bool constant = false;
};

DriftSpec zero_drift(int dim);
DriftSpec constant_drift(int dim, const Point& b);
/// Tensor Catmull-Rom interpolation of a sampled field, times `scale`.
/// Periodic on the torus, zero outside a truncated box.
DriftSpec field_drift(const VField& b, double scale);

/// Fundamental solution of  u_t = D Laplacian(u) + b . grad(u)  for constant
/// b: N(t - s, x + b (t - s) - y).
double constant_drift_gamma(int dim, double diffusion, const Point& b, double t, const Point& x, double s,
                            const Point& y);

struct LevySeries {
  DriftSpec drift;
  double diffusion = 1.0;
  int M = 2;
  int time_nodes = 8;
  int hermite_nodes = 6;
};

struct LevyResult {
  double value = 0.0;
  std::vector<double> terms;
  bool truncation_warning = false;
};

/// Gamma = sum_{m <= M} Gamma_m with Gamma_0 = N and
/// Gamma_m = int int N(t - sigma, x - z) b(sigma, z) . grad_z Gamma_{m-1}(sigma, z; s, y).
/// The Gaussian chain of each term is integrated exactly as a Brownian bridge
/// from x to y by nested Gauss-Hermite rules; the time simplex by nested
/// Gauss-Legendre.
LevyResult levy_gamma(const LevySeries& series, double t, const Point& x, double s, const Point& y);

struct DkExpansion {
  DriftSpec drift;
  double diffusion = 1.0;
  int order = 2;
  int max_order = 4;
  int line_nodes = 8;
  double fd_grad = 1e-4;
  double fd_lap = 2e-3;
  double scale = 1.0;
};

/// Coefficients d_0..d_K with Gamma(t, x, y) = N(t, x - y) sum_k d_k t^k.
/// With c = log(Gamma / N) = sum c_k t^k (drift frozen at t = 0):
///   c_0(x) = -1/2 int_0^1 b(y + s(x - y)) . (x - y) ds
///   c_k(x) = int_0^1 s^{k-1} R_{k-1}(y + s(x - y)) ds
///   R_{k-1} = sum_r grad c_r . grad c_{k-1-r} + Laplacian c_{k-1} + b . grad c_{k-1}
/// and d = exp(c) by d_m = sum_k (k/m) c_k d_{m-k}.
std::vector<double> dk_coefficients(const DkExpansion& e, const Point& x, const Point& y);

struct ParamResult {
  double value = 0.0;
  bool validity_warning = false;
};

ParamResult param_fundamental(const DkExpansion& e, double t, const Point& x, const Point& y);

/// 1.25 * sup_tau int_0^tau int (|Gamma| + |d_i Gamma|) dy ds over constant
/// drifts of magnitude <= drift_bound along each axis, both signs.
double estimate_gamma_constant(double drift_bound, double diffusion, double horizon);

}  // namespace leray
