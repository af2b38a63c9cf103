#include "leray/boundary.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "leray/error.hpp"
#include "leray/quadrature.hpp"

namespace leray {

using std::numbers::pi;

namespace {

const QuadratureRule& gl8() {
  static const QuadratureRule r = gauss_legendre(8, 0.0, 1.0);
  return r;
}

const QuadratureRule& gl16() {
  static const QuadratureRule r = gauss_legendre(16, 0.0, 1.0);
  return r;
}

// Integral of f over [lo, hi] split into `pieces` equal parts.
template <class F>
double composite(const QuadratureRule& q, double lo, double hi, int pieces, F&& f) {
  const double len = (hi - lo) / pieces;
  double s = 0.0;
  for (int p = 0; p < pieces; ++p) {
    const double a = lo + p * len;
    for (std::size_t i = 0; i < q.nodes.size(); ++i) s += q.weights[i] * len * f(a + q.nodes[i] * len);
  }
  return s;
}

double norm2(const Point& p) { return p[0] * p[0] + p[1] * p[1] + p[2] * p[2]; }

double dot(const Point& a, const Point& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

}  // namespace

double BoundaryDomain::panel() const { return shape == BoundaryShape::interval ? 1.0 : 2.0 * pi * radius / size(); }

bool BoundaryDomain::contains(const Point& x) const {
  return shape == BoundaryShape::interval ? x[0] >= a && x[0] <= b : norm2(x) <= radius * radius;
}

Point BoundaryDomain::reflect(const Point& y) const {
  if (shape == BoundaryShape::interval) {
    const double len = b - a;
    double t = std::fmod(y[0] - a, 2.0 * len);
    if (t < 0.0) t += 2.0 * len;
    if (t > len) t = 2.0 * len - t;
    return {a + t, 0.0, 0.0};
  }
  const double r2 = norm2(y);
  if (r2 <= radius * radius) return y;
  const double s = radius * radius / r2;
  return {s * y[0], s * y[1], 0.0};
}

BoundaryDomain make_interval(double a, double b) {
  if (!(b > a)) throw Error(ErrorKind::InvalidGrid, "interval needs a < b");
  BoundaryDomain d;
  d.shape = BoundaryShape::interval;
  d.a = a;
  d.b = b;
  d.nodes = {{a, 0, 0}, {b, 0, 0}};
  d.normals = {{-1, 0, 0}, {1, 0, 0}};
  return d;
}

BoundaryDomain make_disk(double radius, int nodes) {
  if (!(radius > 0.0) || nodes < 8) throw Error(ErrorKind::InvalidGrid, "disk needs radius > 0 and at least 8 nodes");
  BoundaryDomain d;
  d.shape = BoundaryShape::disk;
  d.radius = radius;
  for (int k = 0; k < nodes; ++k) {
    const double t = 2.0 * pi * k / nodes;
    d.nodes.push_back({radius * std::cos(t), radius * std::sin(t), 0.0});
    d.normals.push_back({std::cos(t), std::sin(t), 0.0});
  }
  return d;
}

double HeatKernel::value(double u, const Point& x, const Point& y) const {
  if (!(u > 0.0)) throw Error(ErrorKind::ZeroTime, "heat kernel needs tau > s");
  Point z;
  for (int i = 0; i < 3; ++i) z[i] = i < dim ? x[i] + drift[i] * u - y[i] : 0.0;
  return std::exp(-norm2(z) / (4.0 * D * u)) / std::pow(4.0 * pi * D * u, 0.5 * dim);
}

Point HeatKernel::grad_x(double u, const Point& x, const Point& y) const {
  const double v = value(u, x, y);
  Point g{0, 0, 0};
  for (int i = 0; i < dim; ++i) g[i] = -(x[i] + drift[i] * u - y[i]) / (2.0 * D * u) * v;
  return g;
}

RobinData constant_robin(double alpha, double g) {
  return {[alpha](double, const Point&) { return alpha; }, [g](double, const Point&) { return g; }};
}

double k_gamma(const HeatKernel& k, const RobinData& robin, double tau, const Point& x, const Point& normal, double s,
               const Point& y) {
  const double u = tau - s;
  return dot(k.grad_x(u, x, y), normal) + robin.alpha(tau, x) * k.value(u, x, y);
}

BoundaryProblem::BoundaryProblem(BoundaryDomain domain, HeatKernel kernel, RobinData robin, double horizon,
                                 DensityOptions opt)
    : domain_(std::move(domain)), kernel_(kernel), robin_(std::move(robin)), horizon_(horizon), opt_(opt) {
  if (kernel_.dim != domain_.dim()) throw Error(ErrorKind::ShapeMismatch, "kernel and domain dimensions differ");
  if (!(horizon_ > 0.0) || opt_.time_steps < 1 || opt_.depth < 1 || !(opt_.tol > 0.0))
    throw Error(ErrorKind::ValidationError, "boundary problem needs a positive horizon, steps, depth and tolerance");
  invariant_ = domain_.shape == BoundaryShape::disk && norm2(kernel_.drift) == 0.0;

  const std::size_t nb = domain_.size();
  const std::size_t classes = invariant_ ? nb : nb * nb;
  const int nt = opt_.time_steps;
  for (auto* w : {&w_.left_g, &w_.right_g, &w_.left_d, &w_.right_d}) w->assign(nt + 1, std::vector<double>(classes, 0.0));
  for (std::size_t c = 0; c < classes; ++c) {
    const std::size_t k = invariant_ ? 0 : c / nb;
    const std::size_t j = invariant_ ? c : c % nb;
    const Point& x = domain_.nodes[k];
    const Point& nu = domain_.normals[k];
    for (int lag = 0; lag <= nt; ++lag) {
      w_.left_g[lag][c] = time_weight(lag, true, x, j, nullptr);
      w_.left_d[lag][c] = time_weight(lag, true, x, j, &nu);
      if (lag >= 1) {
        w_.right_g[lag][c] = time_weight(lag, false, x, j, nullptr);
        w_.right_d[lag][c] = time_weight(lag, false, x, j, &nu);
      }
    }
  }
}

std::size_t BoundaryProblem::pair_class(std::size_t k, std::size_t j) const {
  const std::size_t nb = domain_.size();
  return invariant_ ? (j + nb - k) % nb : k * nb + j;
}

double BoundaryProblem::panel_integral(double u, const Point& x, std::size_t j, const Point* normal) const {
  auto integrand = [&](const Point& y) {
    return normal ? dot(kernel_.grad_x(u, x, y), *normal) : kernel_.value(u, x, y);
  };
  if (domain_.shape == BoundaryShape::interval) return integrand(domain_.nodes[j]);

  // Arc panel: keep the part within 7 Gaussian widths of the centre.
  const double R = domain_.radius;
  const double w = std::sqrt(4.0 * kernel_.D * u);
  const Point c{x[0] + kernel_.drift[0] * u, x[1] + kernel_.drift[1] * u, 0.0};
  const double rc = std::sqrt(norm2(c));
  const double half = pi / domain_.size();
  const double tj = 2.0 * pi * j / domain_.size();
  double lo = tj - half, hi = tj + half;
  if (rc > 1e-14 * R) {
    const double kappa = (rc * rc + R * R - 49.0 * w * w) / (2.0 * R * rc);
    if (kappa >= 1.0) return 0.0;
    if (kappa > -1.0) {
      const double delta = std::acos(kappa);
      double tc = std::atan2(c[1], c[0]);
      tc += 2.0 * pi * std::round((tj - tc) / (2.0 * pi));
      lo = std::max(lo, tc - delta);
      hi = std::min(hi, tc + delta);
      if (hi <= lo) return 0.0;
    }
  } else if (R > 7.0 * w) {
    return 0.0;
  }
  const int pieces = std::clamp(static_cast<int>(std::ceil(R * (hi - lo) / (0.5 * w))), 1, 64);
  return R * composite(gl8(), lo, hi, pieces, [&](double t) {
           return integrand({R * std::cos(t), R * std::sin(t), 0.0});
         });
}

double BoundaryProblem::time_weight(int lag, bool left, const Point& x, std::size_t j, const Point* normal) const {
  const double dt = this->dt();
  const double u0 = left ? lag * dt : (lag - 1) * dt;
  const double u1 = u0 + dt;
  auto shape = [&](double u) { return left ? 1.0 - (u - u0) / dt : (u - u0) / dt; };
  const int pieces = lag <= 1 ? 4 : 1;
  return composite(gl16(), std::sqrt(u0), std::sqrt(u1), pieces, [&](double v) {
    const double u = v * v;
    return 2.0 * v * shape(u) * panel_integral(u, x, j, normal);
  });
}

namespace {

// Free-space Gaussian smoothing of fn extended by the domain reflection.
double smooth(const BoundaryDomain& d, const HeatKernel& k, const SpaceFn& fn, double u, const Point& x) {
  const Point c{x[0] + k.drift[0] * u, x[1] + k.drift[1] * u, 0.0};
  if (u <= 0.0) return fn(d.reflect(c));
  const double sigma = std::sqrt(2.0 * k.D * u);
  if (d.shape == BoundaryShape::interval) {
    const double lo = c[0] - 9.0 * sigma, hi = c[0] + 9.0 * sigma, len = d.b - d.a;
    std::vector<double> cuts{lo};
    for (double m = std::ceil((lo - d.a) / len); d.a + m * len < hi; m += 1.0) cuts.push_back(d.a + m * len);
    cuts.push_back(hi);
    double s = 0.0;
    for (std::size_t p = 0; p + 1 < cuts.size(); ++p) {
      const double a = cuts[p], b = cuts[p + 1];
      if (b <= a) continue;
      const int pieces = std::max(1, static_cast<int>(std::ceil((b - a) / sigma)));
      s += composite(gl16(), a, b, pieces, [&](double y) {
        const double z = (c[0] - y) / sigma;
        return std::exp(-0.5 * z * z) * fn(d.reflect({y, 0, 0}));
      });
    }
    return s / (std::sqrt(2.0 * pi) * sigma);
  }
  constexpr int angles = 64;
  double s = 0.0;
  for (int seg = 0; seg < 3; ++seg) {
    s += composite(gl16(), 3.0 * seg, 3.0 * seg + 3.0, 1, [&](double q) {
      double ring = 0.0;
      for (int a = 0; a < angles; ++a) {
        const double t = 2.0 * pi * a / angles;
        ring += fn(d.reflect({c[0] + sigma * q * std::cos(t), c[1] + sigma * q * std::sin(t), 0.0}));
      }
      return q * std::exp(-0.5 * q * q) * ring / angles;
    });
  }
  return s;
}

}  // namespace

double BoundaryProblem::volume_potential(const SpaceFn& u0, const SpaceTimeFn& source, double tau,
                                         const Point& x) const {
  double v = u0 ? smooth(domain_, kernel_, u0, tau, x) : 0.0;
  if (source && tau > 0.0) {
    v += composite(gl16(), 0.0, std::sqrt(tau), 1, [&](double q) {
      const double u = q * q;
      const double s = tau - u;
      return 2.0 * q * smooth(domain_, kernel_, [&](const Point& y) { return source(s, y); }, u, x);
    });
  }
  return v;
}

Eigen::MatrixXd BoundaryProblem::data_term(const SpaceFn& u0, const SpaceTimeFn& source) const {
  const int nt = opt_.time_steps;
  Eigen::MatrixXd f(nt + 1, domain_.size());
  for (int i = 0; i <= nt; ++i) {
    const double tau = i * dt();
    const double eps = 1e-5 * std::max(std::sqrt(2.0 * kernel_.D * tau), 1e-3);
    for (std::size_t k = 0; k < domain_.size(); ++k) {
      const Point& x = domain_.nodes[k];
      const Point& nu = domain_.normals[k];
      Point xp = x, xm = x;
      for (int a = 0; a < 3; ++a) {
        xp[a] += eps * nu[a];
        xm[a] -= eps * nu[a];
      }
      const double p = volume_potential(u0, source, tau, x);
      const double dn = (volume_potential(u0, source, tau, xp) - volume_potential(u0, source, tau, xm)) / (2.0 * eps);
      f(i, k) = kernel_.D * (robin_.g(tau, x) - dn - robin_.alpha(tau, x) * p);
    }
  }
  return f;
}

Eigen::MatrixXd BoundaryProblem::apply(const Eigen::MatrixXd& phi) const {
  const int nt = opt_.time_steps;
  const std::size_t nb = domain_.size();
  if (phi.rows() != nt + 1 || phi.cols() != static_cast<Eigen::Index>(nb))
    throw Error(ErrorKind::ShapeMismatch, "density shape does not match the problem");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(nt + 1, nb);
  for (int i = 1; i <= nt; ++i) {
    const double tau = i * dt();
    for (std::size_t k = 0; k < nb; ++k) {
      const double alpha = robin_.alpha(tau, domain_.nodes[k]);
      double s = 0.0;
      for (int n = 0; n <= i; ++n) {
        const int lag = i - n;
        for (std::size_t j = 0; j < nb; ++j) {
          const std::size_t c = pair_class(k, j);
          double w = 0.0;
          if (n >= 1) w += w_.left_d[lag][c] + alpha * w_.left_g[lag][c];
          if (n <= i - 1) w += w_.right_d[lag][c] + alpha * w_.right_g[lag][c];
          s += w * phi(n, j);
        }
      }
      out(i, k) = -kernel_.D * s;
    }
  }
  return out;
}

double BoundaryProblem::single_layer(const Eigen::MatrixXd& phi, int i, const Point& x) const {
  double s = 0.0;
  for (int n = 0; n <= i; ++n) {
    const int lag = i - n;
    for (std::size_t j = 0; j < domain_.size(); ++j) {
      if (phi(n, j) == 0.0) continue;
      double w = 0.0;
      if (n >= 1) w += time_weight(lag, true, x, j, nullptr);
      if (n <= i - 1) w += time_weight(lag, false, x, j, nullptr);
      s += w * phi(n, j);
    }
  }
  return s;
}

BoundaryDensity solve_density(const BoundaryProblem& p, const Eigen::MatrixXd& f) {
  BoundaryDensity d;
  for (int i = 0; i <= p.options().time_steps; ++i) d.tau.push_back(i * p.dt());
  Eigen::MatrixXd term = 2.0 * f;
  d.phi = term;
  d.terms.push_back(term.cwiseAbs().maxCoeff());
  for (int m = 1; m <= p.options().depth && d.terms.back() > 1e-3 * p.options().tol; ++m) {
    term = 2.0 * p.apply(term);
    const double t = term.cwiseAbs().maxCoeff();
    d.ratios.push_back(t / d.terms.back());
    d.terms.push_back(t);
    if (m == 2 && d.ratios[0] >= 1.0 && d.ratios[1] >= 1.0)
      throw Error(ErrorKind::SeriesDiverging, "Neumann-series ratios " + std::to_string(d.ratios[0]) + ", " +
                                                  std::to_string(d.ratios[1]));
    d.phi += term;
  }
  d.residual = (0.5 * d.phi - p.apply(d.phi) - f).cwiseAbs().maxCoeff();
  return d;
}

BoundaryStepResult boundary_step(const BoundaryProblem& p, const SpaceFn& u0, const SpaceTimeFn& source,
                                 const std::vector<Point>& points) {
  BoundaryStepResult r;
  r.density = solve_density(p, p.data_term(u0, source));
  r.points = points;
  const int nt = p.options().time_steps;
  for (const Point& x : points) {
    if (!p.domain().contains(x)) throw Error(ErrorKind::ValidationError, "evaluation point outside the domain");
    r.values.push_back(p.volume_potential(u0, source, p.horizon(), x) + p.single_layer(r.density.phi, nt, x));
  }
  return r;
}

std::vector<double> robin_fd_reference(double a, double b, double D, double drift, const RobinData& robin,
                                       const SpaceFn& u0, double T, int cells, int steps) {
  if (cells < 4 || steps < 4 || !(T > 0.0)) throw Error(ErrorKind::ValidationError, "reference needs cells, steps >= 4");
  const int n = cells + 1;
  const double h = (b - a) / cells;
  Eigen::VectorXd u(n);
  for (int i = 0; i < n; ++i) u[i] = u0({a + i * h, 0, 0});

  // u' = M(t) u + c(t), with ghost values eliminated through the Robin ends.
  auto assemble = [&](double t, Eigen::SparseMatrix<double>& M, Eigen::VectorXd& c) {
    const double cd = D / (h * h), ca = drift / (2.0 * h);
    std::vector<Eigen::Triplet<double>> trip;
    c.setZero(n);
    for (int i = 0; i < n; ++i) {
      trip.emplace_back(i, i, -2.0 * cd);
      if (i > 0) trip.emplace_back(i, i - 1, cd - ca);
      if (i < n - 1) trip.emplace_back(i, i + 1, cd + ca);
    }
    // Left: u_{-1} = u_1 - 2h (alpha u_0 - g).
    const double al = robin.alpha(t, {a, 0, 0}), gl = robin.g(t, {a, 0, 0});
    trip.emplace_back(0, 1, cd - ca);
    trip.emplace_back(0, 0, -(cd - ca) * 2.0 * h * al);
    c[0] += (cd - ca) * 2.0 * h * gl;
    // Right: u_{N+1} = u_{N-1} - 2h (alpha u_N - g).
    const double ar = robin.alpha(t, {b, 0, 0}), gr = robin.g(t, {b, 0, 0});
    trip.emplace_back(n - 1, n - 2, cd + ca);
    trip.emplace_back(n - 1, n - 1, -(cd + ca) * 2.0 * h * ar);
    c[n - 1] += (cd + ca) * 2.0 * h * gr;
    M.resize(n, n);
    M.setFromTriplets(trip.begin(), trip.end());
  };

  Eigen::SparseMatrix<double> I(n, n);
  I.setIdentity();
  auto step = [&](double t, double dt, double theta) {
    Eigen::SparseMatrix<double> M0, M1;
    Eigen::VectorXd c0, c1;
    assemble(t, M0, c0);
    assemble(t + dt, M1, c1);
    Eigen::SparseMatrix<double> A = I - theta * dt * M1;
    Eigen::VectorXd rhs = u + (1.0 - theta) * dt * (M0 * u + c0) + theta * dt * c1;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(A);
    u = lu.solve(rhs);
  };
  const double dt = T / steps;
  double t = 0.0;
  for (int s = 0; s < 4; ++s, t += 0.5 * dt) step(t, 0.5 * dt, 1.0);
  for (int s = 2; s < steps; ++s, t += dt) step(t, dt, 0.5);
  return {u.data(), u.data() + n};
}

RobinBenchReport robin_benchmark(int time_steps, int depth) {
  RobinBenchReport rep;
  const double D = 0.1, T = 1.0;
  const DensityOptions opt{time_steps, depth, 1e-6};
  const RobinData robin = constant_robin(1.0, 0.0);
  auto u0 = [](const Point& x) { return std::sin(x[0]); };
  BoundaryProblem p(make_interval(0.0, pi), HeatKernel{1, D, {0, 0, 0}}, robin, T, opt);

  constexpr int cells = 1024, stride = 16;
  const auto ref = robin_fd_reference(0.0, pi, D, 0.0, robin, u0, T, cells, 2000);
  std::vector<Point> pts;
  for (int i = 0; i <= cells; i += stride) {
    pts.push_back({pi * i / cells, 0, 0});
    rep.reference.push_back(ref[i]);
  }
  auto step = boundary_step(p, u0, nullptr, pts);
  rep.terms = step.density.terms;
  rep.residual = step.density.residual;
  for (std::size_t m = 1; m < step.density.ratios.size(); ++m)
    if (step.density.terms[m] > 1e-300) rep.max_ratio_past_1 = std::max(rep.max_ratio_past_1, step.density.ratios[m]);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    rep.x.push_back(pts[i][0]);
    rep.u.push_back(step.values[i]);
    rep.linf = std::max(rep.linf, std::abs(step.values[i] - rep.reference[i]));
  }

  // Insulated ends conserve mass.
  BoundaryProblem q(make_interval(0.0, pi), HeatKernel{1, D, {0, 0, 0}}, constant_robin(0.0, 0.0), T, opt);
  auto w0 = [](const Point& x) { return 1.0 + x[0] * x[0]; };
  const QuadratureRule gl = gauss_legendre(48, 0.0, pi);
  std::vector<Point> nodes;
  for (double y : gl.nodes) nodes.push_back({y, 0, 0});
  auto mass = boundary_step(q, w0, nullptr, nodes);
  double m1 = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) m1 += gl.weights[i] * mass.values[i];
  const double m0 = pi + pi * pi * pi / 3.0;
  rep.mass_drift = std::abs(m1 - m0) / m0;
  return rep;
}

}  // namespace leray
