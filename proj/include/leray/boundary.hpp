#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "leray/grid_fields.hpp"

namespace leray {

enum class BoundaryShape { interval, disk };

/// Bounded domain with uniform boundary nodes. An interval [a, b] has two
/// point nodes; a disk of radius R has nodes at equal angles, each owning an
/// arc panel of length 2 pi R / nodes.
struct BoundaryDomain {
  BoundaryShape shape = BoundaryShape::interval;
  double a = 0.0, b = 1.0;
  double radius = 1.0;
  std::vector<Point> nodes;
  std::vector<Point> normals;

  int dim() const { return shape == BoundaryShape::interval ? 1 : 2; }
  std::size_t size() const { return nodes.size(); }
  double panel() const;
  bool contains(const Point& x) const;
  /// Smooth-across-the-boundary extension used for volume potentials: even
  /// reflection at the interval ends, inversion in the circle for the disk.
  Point reflect(const Point& y) const;
};

BoundaryDomain make_interval(double a, double b);
BoundaryDomain make_disk(double radius, int nodes);

/// Gamma(tau, x; s, y) for u_tau = D Lap u + b.grad u: the Gaussian of
/// variance 2 D u centred at x + b u - y, u = tau - s.
struct HeatKernel {
  int dim = 1;
  double D = 1.0;
  Point drift{0.0, 0.0, 0.0};

  double value(double u, const Point& x, const Point& y) const;
  /// Gradient in x.
  Point grad_x(double u, const Point& x, const Point& y) const;
};

using SpaceTimeFn = std::function<double(double t, const Point& x)>;
using SpaceFn = std::function<double(const Point& x)>;

/// d_nu v + alpha v = g on the boundary, nu the outward normal.
struct RobinData {
  SpaceTimeFn alpha;
  SpaceTimeFn g;
};

RobinData constant_robin(double alpha, double g);

/// K_Gamma = d_nu Gamma + alpha(tau, x) Gamma with the derivative in x along `normal`.
double k_gamma(const HeatKernel& k, const RobinData& robin, double tau, const Point& x, const Point& normal, double s,
               const Point& y);

struct DensityOptions {
  int time_steps = 64;
  /// Neumann-series depth M.
  int depth = 8;
  double tol = 1e-6;
};

/// Density on the time nodes x boundary nodes, with the series diagnostics.
struct BoundaryDensity {
  std::vector<double> tau;
  Eigen::MatrixXd phi;
  /// sup of each Neumann-series term, m = 0, 1, ...
  std::vector<double> terms;
  /// terms[m + 1] / terms[m].
  std::vector<double> ratios;
  /// sup of 1/2 phi - K phi - f on all nodes.
  double residual = 0.0;
};

/// One linear step on a bounded domain: u_tau = D Lap u + b.grad u + F in the
/// domain, Robin data on the boundary, u(0) = u0. The solution is
/// u = P[u0] + P[F] + single layer of phi, with P the free-space potentials of
/// the reflected data, and the density solves 1/2 phi = K phi + f with
/// K = -D K_Gamma and f = D (g - (d_nu + alpha)(P[u0] + P[F])).
/// Densities are piecewise linear in time; time integrals use u = v^2 to
/// remove the 1/sqrt(u) self-interaction singularity.
class BoundaryProblem {
 public:
  BoundaryProblem(BoundaryDomain domain, HeatKernel kernel, RobinData robin, double horizon, DensityOptions opt = {});

  const BoundaryDomain& domain() const { return domain_; }
  const HeatKernel& kernel() const { return kernel_; }
  const DensityOptions& options() const { return opt_; }
  double horizon() const { return horizon_; }
  double dt() const { return horizon_ / opt_.time_steps; }

  /// P[u0](tau, x) + P[F](tau, x).
  double volume_potential(const SpaceFn& u0, const SpaceTimeFn& source, double tau, const Point& x) const;
  /// f on the time nodes x boundary nodes.
  Eigen::MatrixXd data_term(const SpaceFn& u0, const SpaceTimeFn& source) const;
  /// (K phi) on the time nodes x boundary nodes.
  Eigen::MatrixXd apply(const Eigen::MatrixXd& phi) const;
  /// Single-layer potential of phi at time node i and point x.
  double single_layer(const Eigen::MatrixXd& phi, int i, const Point& x) const;

 private:
  struct Weights {
    // [lag][pair class]
    std::vector<std::vector<double>> left_g, right_g, left_d, right_d;
  };
  std::size_t pair_class(std::size_t k, std::size_t j) const;
  double panel_integral(double u, const Point& x, std::size_t j, const Point* normal) const;
  double time_weight(int lag, bool left, const Point& x, std::size_t j, const Point* normal) const;

  BoundaryDomain domain_;
  HeatKernel kernel_;
  RobinData robin_;
  double horizon_;
  DensityOptions opt_;
  bool invariant_;
  Weights w_;
};

/// phi = 2 sum_{m <= M} (2K)^m f. Stops early once a term drops below
/// 1e-3 tol. Throws SeriesDiverging when the first two ratios are both >= 1.
BoundaryDensity solve_density(const BoundaryProblem& p, const Eigen::MatrixXd& f);

struct BoundaryStepResult {
  BoundaryDensity density;
  std::vector<Point> points;
  std::vector<double> values;
};

/// Solves the density and evaluates u at `points` at the end of the step.
BoundaryStepResult boundary_step(const BoundaryProblem& p, const SpaceFn& u0, const SpaceTimeFn& source,
                                 const std::vector<Point>& points);

/// Second-order finite differences on [a, b] with ghost-point Robin ends and
/// Crank-Nicolson in time after four half-size backward Euler steps.
/// Returns u(T) on the nodes a + i (b - a) / cells.
std::vector<double> robin_fd_reference(double a, double b, double D, double drift, const RobinData& robin,
                                       const SpaceFn& u0, double T, int cells, int steps);

struct RobinBenchReport {
  double linf = 0.0;
  double residual = 0.0;
  double max_ratio_past_1 = 0.0;
  double mass_drift = 0.0;
  std::vector<double> terms;
  std::vector<double> x, u, reference;
};

/// The 1D benchmark: [0, pi], D = 0.1, alpha = 1, g = 0, u0 = sin x, T = 1,
/// against the finite-difference reference; plus the insulated mass check
/// with u0 = 1 + x^2.
RobinBenchReport robin_benchmark(int time_steps = 64, int depth = 16);

}  // namespace leray
