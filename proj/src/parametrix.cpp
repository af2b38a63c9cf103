#include "leray/parametrix.hpp"

#include <cmath>
#include <numbers>

#include "leray/kernels.hpp"
#include "leray/quadrature.hpp"

namespace leray {

DriftSpec zero_drift(int dim) { return constant_drift(dim, {0.0, 0.0, 0.0}); }

DriftSpec constant_drift(int dim, const Point& b) {
  DriftSpec d;
  d.dim = dim;
  d.constant = true;
  double s = 0.0;
  for (int a = 0; a < dim; ++a) s += b[a] * b[a];
  d.bound = std::sqrt(s);
  d.b = [b](double, const Point&) { return b; };
  return d;
}

namespace {

double catmull_rom(double p0, double p1, double p2, double p3, double t) {
  return 0.5 * (2.0 * p1 + (-p0 + p2) * t + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t * t +
                (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * t * t * t);
}

}  // namespace

DriftSpec field_drift(const VField& b, double scale) {
  DriftSpec d;
  const Grid g = b.grid();
  d.dim = g.dim;
  d.bound = std::abs(scale) * sup(b);
  d.b = [b, g, scale](double, const Point& x) {
    const double h = g.spacing();
    const int n = g.points;
    std::array<int, 3> base{0, 0, 0};
    std::array<double, 3> frac{0.0, 0.0, 0.0};
    for (int a = 0; a < g.dim; ++a) {
      const double u = (x[a] + g.extent) / h;
      base[a] = static_cast<int>(std::floor(u));
      frac[a] = u - base[a];
    }
    auto value = [&](int comp, const std::array<int, 3>& ijk) {
      std::array<int, 3> w = ijk;
      for (int a = 0; a < g.dim; ++a) {
        if (g.topology == Topology::torus) w[a] = ((w[a] % n) + n) % n;
        else if (w[a] < 0 || w[a] >= n) return 0.0;
      }
      return b[comp][g.ravel(w)];
    };
    Point out{0.0, 0.0, 0.0};
    for (int c = 0; c < g.dim; ++c) {
      // Interpolate axis by axis over the 4^dim stencil.
      std::function<double(int, std::array<int, 3>)> interp = [&](int axis, std::array<int, 3> ijk) -> double {
        if (axis == g.dim) return value(c, ijk);
        double p[4];
        for (int o = -1; o <= 2; ++o) {
          ijk[axis] = base[axis] + o;
          p[o + 1] = interp(axis + 1, ijk);
        }
        return catmull_rom(p[0], p[1], p[2], p[3], frac[axis]);
      };
      out[c] = scale * interp(0, {0, 0, 0});
    }
    return out;
  };
  return d;
}

double constant_drift_gamma(int dim, double diffusion, const Point& b, double t, const Point& x, double s,
                            const Point& y) {
  const double u = t - s;
  Point xs{0.0, 0.0, 0.0};
  for (int a = 0; a < dim; ++a) xs[a] = x[a] + b[a] * u;
  return heat_kernel({dim, diffusion, u}, xs, y);
}

LevyResult levy_gamma(const LevySeries& series, double t, const Point& x, double s, const Point& y) {
  if (!(t > s)) throw Error(ErrorKind::ZeroTime, "levy_gamma needs t > s");
  if (series.M < 0 || series.M > 6) throw Error(ErrorKind::DepthExceeded, "levy_gamma truncation must be in [0, 6]");
  const int n = series.drift.dim;
  const double D = series.diffusion;
  const double T = t - s;
  const double n0 = heat_kernel({n, D, T}, x, y);
  LevyResult res;
  res.terms.push_back(n0);
  res.value = n0;
  if (series.M == 0) return res;

  const auto gl = gauss_legendre(series.time_nodes, 0.0, 1.0);
  const auto gh = gauss_hermite(series.hermite_nodes);
  const double gh_norm = std::pow(std::numbers::pi, -0.5);

  for (int m = 1; m <= series.M; ++m) {
    double total = 0.0;
    std::vector<double> sigma(m + 2);
    std::vector<Point> z(m + 2);
    sigma[0] = t;
    sigma[m + 1] = s;
    z[0] = x;
    z[m + 1] = y;

    // Expectation over the bridge of prod_k b(z_k) . (-(z_k - z_{k+1}) / (2 D g_k)).
    // Positions are drawn level by level; factor k needs z_{k+1}, so it is
    // applied once the next position is known.
    std::function<double(int)> bridge = [&](int k) -> double {
      if (k == m + 1) {
        double prod = 1.0;
        for (int j = 1; j <= m; ++j) {
          const Point bj = series.drift.b(sigma[j], z[j]);
          const double g = sigma[j] - sigma[j + 1];
          double dot = 0.0;
          for (int a = 0; a < n; ++a) dot += bj[a] * (z[j][a] - z[j + 1][a]);
          prod *= -dot / (2.0 * D * g);
        }
        return prod;
      }
      const double g = sigma[k - 1] - sigma[k];
      const double R = sigma[k - 1] - s;
      const double frac = g / R;
      const double sd = std::sqrt(2.0 * D * g * (R - g) / R);
      Point mean{0.0, 0.0, 0.0};
      for (int a = 0; a < n; ++a) mean[a] = z[k - 1][a] + (y[a] - z[k - 1][a]) * frac;
      // Tensor Gauss-Hermite over the n coordinates of z_k.
      double acc = 0.0;
      std::vector<int> idx(n, 0);
      const int q = static_cast<int>(gh.nodes.size());
      while (true) {
        double w = 1.0;
        for (int a = 0; a < n; ++a) {
          z[k][a] = mean[a] + std::sqrt(2.0) * sd * gh.nodes[idx[a]];
          w *= gh.weights[idx[a]] * gh_norm;
        }
        acc += w * bridge(k + 1);
        int a = 0;
        while (a < n && ++idx[a] == q) idx[a++] = 0;
        if (a == n) break;
      }
      return acc;
    };

    // Nested Gauss-Legendre over s < sigma_m < ... < sigma_1 < t.
    std::function<void(int, double)> times = [&](int k, double jac) {
      if (k == m + 1) {
        total += jac * bridge(1);
        return;
      }
      const double len = sigma[k - 1] - s;
      for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
        sigma[k] = s + len * gl.nodes[i];
        times(k + 1, jac * len * gl.weights[i]);
      }
    };
    times(1, 1.0);
    const double term = n0 * total;
    res.terms.push_back(term);
    res.value += term;
  }
  const double first = std::abs(res.terms[1]);
  const double last = std::abs(res.terms.back());
  res.truncation_warning = series.M >= 2 && first > 0.0 && last / first > 0.1;
  return res;
}

namespace {

struct DkEvaluator {
  const DkExpansion& e;
  const Point& y;
  int n;
  QuadratureRule line;
  double D;

  Point drift(const Point& z) const {
    Point b = e.drift.b(0.0, z);
    for (int a = 0; a < n; ++a) b[a] /= D;
    return b;
  }

  double c(int k, const Point& x) const {
    double acc = 0.0;
    for (std::size_t q = 0; q < line.nodes.size(); ++q) {
      const double s = line.nodes[q];
      Point z{0.0, 0.0, 0.0};
      for (int a = 0; a < n; ++a) z[a] = y[a] + s * (x[a] - y[a]);
      if (k == 0) {
        const Point b = drift(z);
        double dot = 0.0;
        for (int a = 0; a < n; ++a) dot += b[a] * (x[a] - y[a]);
        acc += line.weights[q] * (-0.5 * dot);
      } else {
        acc += line.weights[q] * std::pow(s, k - 1) * R(k - 1, z);
      }
    }
    return acc;
  }

  Point grad(int k, const Point& z) const {
    const double h = e.fd_grad * e.scale;
    Point g{0.0, 0.0, 0.0};
    for (int a = 0; a < n; ++a) {
      Point p = z, m = z;
      p[a] += h;
      m[a] -= h;
      g[a] = (c(k, p) - c(k, m)) / (2.0 * h);
    }
    return g;
  }

  double lap(int k, const Point& z) const {
    const double h = e.fd_lap * e.scale;
    const double c0 = c(k, z);
    double l = 0.0;
    for (int a = 0; a < n; ++a) {
      Point p = z, m = z;
      p[a] += h;
      m[a] -= h;
      l += (c(k, p) - 2.0 * c0 + c(k, m)) / (h * h);
    }
    return l;
  }

  double R(int k, const Point& z) const {
    std::vector<Point> g(k + 1);
    for (int r = 0; r <= k; ++r) g[r] = grad(r, z);
    double acc = lap(k, z);
    for (int r = 0; r <= k; ++r)
      for (int a = 0; a < n; ++a) acc += g[r][a] * g[k - r][a];
    const Point b = drift(z);
    for (int a = 0; a < n; ++a) acc += b[a] * g[k][a];
    return acc;
  }
};

}  // namespace

std::vector<double> dk_coefficients(const DkExpansion& e, const Point& x, const Point& y) {
  if (e.order < 0 || e.order > e.max_order) throw Error(ErrorKind::DepthExceeded, "d_k order beyond configured max");
  const int K = e.order;
  std::vector<double> cks(K + 1, 0.0);
  if (e.drift.constant && e.drift.bound == 0.0) {
    std::vector<double> d(K + 1, 0.0);
    d[0] = 1.0;
    return d;
  }
  DkEvaluator ev{e, y, e.drift.dim, gauss_legendre(e.line_nodes, 0.0, 1.0), e.diffusion};
  for (int k = 0; k <= K; ++k) cks[k] = ev.c(k, x);
  std::vector<double> d(K + 1, 0.0);
  d[0] = std::exp(cks[0]);
  for (int m = 1; m <= K; ++m) {
    double acc = 0.0;
    for (int k = 1; k <= m; ++k) acc += (static_cast<double>(k) / m) * cks[k] * d[m - k];
    d[m] = acc;
  }
  // Undo the time scaling t' = D t.
  for (int m = 1; m <= K; ++m) d[m] *= std::pow(e.diffusion, m);
  return d;
}

ParamResult param_fundamental(const DkExpansion& e, double t, const Point& x, const Point& y) {
  const auto d = dk_coefficients(e, x, y);
  ParamResult r;
  double sum = 0.0, prev = 0.0, tk = 1.0;
  for (std::size_t k = 0; k < d.size(); ++k) {
    const double term = d[k] * tk;
    sum += term;
    if (k >= 1 && k + 1 == d.size() && std::abs(term) >= std::abs(prev) && std::abs(term) > 0.0) r.validity_warning = true;
    prev = term;
    tk *= t;
  }
  r.value = heat_kernel({e.drift.dim, e.diffusion, t}, x, y) * sum;
  return r;
}

double estimate_gamma_constant(double drift_bound, double diffusion, double horizon) {
  // Per-axis integrals of the constant-drift family; the n-dimensional
  // integrals factor into this one-dimensional one.
  const auto wq = gauss_legendre(24, 0.0, std::sqrt(horizon));
  double best = 0.0;
  for (double b : {-drift_bound, 0.0, drift_bound}) {
    double total = 0.0;
    // s = horizon - w^2, ds = 2 w dw removes the u^{-1/2} singularity.
    for (std::size_t i = 0; i < wq.nodes.size(); ++i) {
      const double w = wq.nodes[i];
      const double u = w * w;
      if (u <= 0.0) continue;
      const double sd = std::sqrt(2.0 * diffusion * u);
      const double centre = b * u;
      double mass = 0.0, dmass = 0.0;
      // Split at the centre where |d Gamma| has its kink.
      for (double side : {-1.0, 1.0}) {
        const auto yq = gauss_legendre(48, std::min(centre, centre + side * 10.0 * sd),
                                       std::max(centre, centre + side * 10.0 * sd));
        for (std::size_t j = 0; j < yq.nodes.size(); ++j) {
          const double g = constant_drift_gamma(1, diffusion, {b, 0, 0}, u, {0, 0, 0}, 0.0, {yq.nodes[j], 0, 0});
          const double dx = -(b * u - yq.nodes[j]) / (2.0 * diffusion * u);
          mass += yq.weights[j] * g;
          dmass += yq.weights[j] * std::abs(dx * g);
        }
      }
      total += wq.weights[i] * 2.0 * w * (mass + dmass);
    }
    best = std::max(best, total);
  }
  return 1.25 * best;
}

}  // namespace leray
