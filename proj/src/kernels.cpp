#include "leray/kernels.hpp"

#include <cmath>
#include <numbers>

#include "leray/quadrature.hpp"

namespace leray {

double omega_n(int n) {
  if (n < 1) throw Error(ErrorKind::ValidationError, "omega_n needs n >= 1");
  // 2 pi^{n/2} / Gamma(n/2)
  return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
}

namespace {

double norm_of(int n, const Point& x) {
  double s = 0.0;
  for (int a = 0; a < n; ++a) s += x[a] * x[a];
  return std::sqrt(s);
}

}  // namespace

double poisson_kernel(int n, const Point& x) {
  const double r = norm_of(n, x);
  if (r == 0.0) throw Error(ErrorKind::SingularPoint, "poisson_kernel at x = 0");
  if (n == 2) return std::log(r) / (2.0 * std::numbers::pi);
  return std::pow(r, 2.0 - n) / ((2.0 - n) * omega_n(n));
}

Point poisson_kernel_grad(int n, const Point& x) {
  const double r = norm_of(n, x);
  if (r == 0.0) throw Error(ErrorKind::SingularPoint, "poisson_kernel_grad at x = 0");
  const double c = 1.0 / (omega_n(n) * std::pow(r, n));
  Point g{0.0, 0.0, 0.0};
  for (int a = 0; a < n; ++a) g[a] = c * x[a];
  return g;
}

double poisson_kernel_cell_average(int n, double h) {
  const double b = 0.5 * h;
  const double volume = std::pow(h, n);
  if (n == 1) return b / 4.0;
  // Divergence theorem: div(x r^{2-n}) = 2 r^{2-n}, div(x log r) = 2 log r + 1,
  // and x.nu = b on every face of the cube.
  const auto rule = gauss_legendre(24, -b, b);
  if (n == 2) {
    double edge = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i)
      edge += rule.weights[i] * 0.5 * std::log(b * b + rule.nodes[i] * rule.nodes[i]);
    const double integral = 0.5 * (4.0 * b * edge - volume);
    return integral / (2.0 * std::numbers::pi * volume);
  }
  if (n == 3) {
    double face = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i)
      for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
        const double r2 = b * b + rule.nodes[i] * rule.nodes[i] + rule.nodes[j] * rule.nodes[j];
        face += rule.weights[i] * rule.weights[j] * std::pow(r2, 0.5 * (2.0 - n));
      }
    const double integral = 0.5 * 2.0 * n * b * face;
    return integral / ((2.0 - n) * omega_n(n) * volume);
  }
  throw Error(ErrorKind::ValidationError, "cell average implemented for n <= 3");
}

double heat_kernel(const GaussianKernelSpec& spec, const Point& x, const Point& y) {
  if (!(spec.elapsed > 0.0)) throw Error(ErrorKind::ZeroTime, "heat_kernel needs elapsed > 0");
  double d2 = 0.0;
  for (int a = 0; a < spec.dim; ++a) d2 += (x[a] - y[a]) * (x[a] - y[a]);
  const double s = 4.0 * spec.diffusion * spec.elapsed;
  const double e = d2 / s;
  if (e > 700.0) return 0.0;
  return std::pow(std::numbers::pi * s, -0.5 * spec.dim) * std::exp(-e);
}

SampledKernel sample_kernel(const Grid& g, const std::function<double(const Point&)>& k,
                            std::optional<double> origin) {
  SampledKernel out;
  out.grid = g;
  const bool torus = g.topology == Topology::torus;
  out.side = torus ? g.points : 2 * g.points;
  std::size_t total = 1;
  for (int a = 0; a < g.dim; ++a) total *= static_cast<std::size_t>(out.side);
  out.values.resize(total);
  const double h = g.spacing();
  for (std::size_t i = 0; i < total; ++i) {
    std::size_t rest = i;
    Point p{0.0, 0.0, 0.0};
    bool zero = true;
    for (int a = g.dim - 1; a >= 0; --a) {
      int c = static_cast<int>(rest % static_cast<std::size_t>(out.side));
      rest /= static_cast<std::size_t>(out.side);
      if (c >= out.side / 2) c -= out.side;
      p[a] = c * h;
      zero = zero && c == 0;
    }
    out.values[i] = zero && origin ? *origin : k(p);
  }
  return out;
}

namespace {

std::size_t offset_index(const SampledKernel& k, const std::array<int, 3>& x, const std::array<int, 3>& y) {
  std::size_t j = 0;
  for (int a = 0; a < k.grid.dim; ++a) {
    int m = x[a] - y[a];
    if (m < 0) m += k.side;
    j = j * static_cast<std::size_t>(k.side) + static_cast<std::size_t>(m);
  }
  return j;
}

}  // namespace

Field convolve(const Field& f, const SampledKernel& k, Engine engine) {
  const Grid& g = f.grid();
  if (!(g == k.grid)) throw Error(ErrorKind::ShapeMismatch, "kernel sampled on a different grid");
  if (engine == Engine::direct) {
    Field out(g);
    std::vector<std::array<int, 3>> ijk(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) ijk[i] = g.unravel(i);
    for (std::size_t x = 0; x < g.size(); ++x) {
      double s = 0.0;
      for (std::size_t y = 0; y < g.size(); ++y) s += k.values[offset_index(k, ijk[x], ijk[y])] * f[y];
      out[x] = s * g.cell_volume();
    }
    return out;
  }
  if (g.topology == Topology::torus) {
    RealFFT fft(g.dim, g.points);
    std::vector<cplx> fh(fft.complex_size()), kh(fft.complex_size());
    fft.forward(f.values().data(), fh.data());
    fft.forward(k.values.data(), kh.data());
    for (std::size_t i = 0; i < fh.size(); ++i) fh[i] *= kh[i];
    Field out(g);
    fft.inverse(fh.data(), out.values().data());
    out.values() *= g.cell_volume() / static_cast<double>(g.size());
    return out;
  }
  PaddedConvolver conv(g, k.values);
  return conv.apply(f);
}

double engine_self_test(const Field& f, const SampledKernel& k, double tol) {
  const Field a = convolve(f, k, Engine::direct);
  const Field b = convolve(f, k, Engine::fast);
  const double d = (a.values() - b.values()).abs().maxCoeff();
  if (!(d <= tol)) throw Error(ErrorKind::EngineMismatch, "direct and fast convolution differ by " + std::to_string(d));
  return d;
}

LerayOperator::LerayOperator(const Grid& g) : grid_(g) {
  if (g.topology == Topology::torus) {
    torus_ = std::make_unique<TorusSpectral>(g);
    return;
  }
  const int n = g.dim;
  auto pot = sample_kernel(g, [n](const Point& x) { return poisson_kernel(n, x); },
                           poisson_kernel_cell_average(n, g.spacing()));
  pot_ = std::make_unique<PaddedConvolver>(g, pot.values);
  for (int i = 0; i < n; ++i) {
    auto gk = sample_kernel(g, [n, i](const Point& x) { return poisson_kernel_grad(n, x)[i]; }, 0.0);
    grad_.push_back(std::make_unique<PaddedConvolver>(g, gk.values));
  }
}

LerayOperator::~LerayOperator() = default;

Field LerayOperator::bilinear_source(const VField& a, const VField& b) const {
  const int n = grid_.dim;
  std::vector<std::vector<Field>> da(n), db(n);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j) {
      da[k].push_back(derivative(a[k], j));
      db[k].push_back(derivative(b[k], j));
    }
  Field q(grid_);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) q.values() += da[k][j].values() * db[j][k].values();
  return q;
}

Field LerayOperator::newtonian(const Field& q) {
  Field out(grid_);
  if (torus_) {
    auto h = torus_->forward(q);
    for (std::size_t i = 0; i < h.size(); ++i) {
      const double k2 = torus_->k2(i);
      h[i] = k2 > 0.0 ? -h[i] / k2 : cplx(0.0, 0.0);
    }
    out = torus_->inverse(h);
  } else {
    out = pot_->apply(q);
  }
  out.values() -= out.values().mean();
  return out;
}

VField LerayOperator::grad_newtonian(const Field& q) {
  VField out(grid_);
  if (torus_) {
    auto h = torus_->forward(q);
    const int half = grid_.points / 2;
    for (int a = 0; a < grid_.dim; ++a) {
      std::vector<cplx> g(h.size());
      for (std::size_t i = 0; i < h.size(); ++i) {
        const double k2 = torus_->k2(i);
        const double ka = torus_->wavenumber(i, a);
        const bool nyquist = std::abs(std::lround(ka * grid_.extent / std::numbers::pi)) == half;
        g[i] = (k2 > 0.0 && !nyquist) ? cplx(0.0, ka) * (-h[i] / k2) : cplx(0.0, 0.0);
      }
      out[a] = torus_->inverse(g);
    }
    return out;
  }
  for (int a = 0; a < grid_.dim; ++a) out[a] = grad_[a]->apply(q);
  return out;
}

Field leray_pressure(const VField& v) {
  LerayOperator op(v.grid());
  return op.pressure(v);
}

VField leray_rhs(const VField& v) {
  LerayOperator op(v.grid());
  return op.rhs(v);
}

double pressure_identity_residual(const VField& v) {
  LerayOperator op(v.grid());
  Field q = op.source(v);
  if (v.grid().topology == Topology::torus) q.values() -= q.values().mean();
  const Field lap = laplacian(op.newtonian(q));
  return (q.values() - lap.values()).abs().maxCoeff();
}

double log_moment(const Field& q) {
  const Grid& g = q.grid();
  double s = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Point p = g.point(i);
    double r2 = 0.0;
    for (int a = 0; a < g.dim; ++a) r2 += p[a] * p[a];
    if (r2 > 0.0) s += std::abs(q[i]) * std::abs(0.5 * std::log(r2));
  }
  return s * g.cell_volume();
}

}  // namespace leray
