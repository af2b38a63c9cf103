#include "leray/grid_fields.hpp"

#include "rows.hpp"

#include <algorithm>
#include <array>
#include <string>

namespace leray {

Grid make_grid(int dim, double extent, int points, Topology topology) {
  if (dim < 1 || dim > 3) throw Error(ErrorKind::InvalidGrid, "dim must be 1, 2 or 3, got " + std::to_string(dim));
  if (!(extent > 0.0) || !std::isfinite(extent)) throw Error(ErrorKind::InvalidGrid, "extent must be positive");
  if (points < 8) throw Error(ErrorKind::InvalidGrid, "points_per_axis must be >= 8");
  if (points % 2 != 0) throw Error(ErrorKind::InvalidGrid, "points_per_axis must be even");
  return Grid{dim, extent, points, topology};
}

Field sample(const Grid& g, const std::function<double(const Point&)>& f) {
  Field out(g);
  for (std::size_t i = 0; i < g.size(); ++i) out[i] = f(g.point(i));
  return out;
}

VField sample(const Grid& g, int ncomp, const std::function<double(int, const Point&)>& f) {
  VField out(g, ncomp);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Point p = g.point(i);
    for (int c = 0; c < ncomp; ++c) out[c][i] = f(c, p);
  }
  return out;
}

Field derivative(const Field& f, int axis) {
  const Grid& g = f.grid();
  const double inv2h = 1.0 / (2.0 * g.spacing());
  const bool torus = g.topology == Topology::torus;
  Field out(g);
  const double* u = f.values().data();
  double* d = out.values().data();
  detail::sweep_axis(
      g, axis, 1, u,
      [&](std::ptrdiff_t b, std::ptrdiff_t e, std::ptrdiff_t st) {
        for (std::ptrdiff_t i = b; i < e; ++i) d[i] = (u[i + st] - u[i - st]) * inv2h;
      },
      [&](std::ptrdiff_t i, int c, const auto& at) {
        if (torus) d[i] = (at(1) - at(-1)) * inv2h;
        else if (c == 0) d[i] = (-3.0 * at(0) + 4.0 * at(1) - at(2)) * inv2h;
        else d[i] = (3.0 * at(0) - 4.0 * at(-1) + at(-2)) * inv2h;
      });
  return out;
}

namespace {

Field second_same_axis(const Field& f, int axis) {
  const Grid& g = f.grid();
  const double ih2 = 1.0 / (g.spacing() * g.spacing());
  const bool torus = g.topology == Topology::torus;
  Field out(g);
  const double* u = f.values().data();
  double* d = out.values().data();
  detail::sweep_axis(
      g, axis, 1, u,
      [&](std::ptrdiff_t b, std::ptrdiff_t e, std::ptrdiff_t st) {
        for (std::ptrdiff_t i = b; i < e; ++i) d[i] = (u[i + st] - 2.0 * u[i] + u[i - st]) * ih2;
      },
      [&](std::ptrdiff_t i, int c, const auto& at) {
        if (torus) d[i] = (at(1) - 2.0 * at(0) + at(-1)) * ih2;
        else if (c == 0) d[i] = (2.0 * at(0) - 5.0 * at(1) + 4.0 * at(2) - at(3)) * ih2;
        else d[i] = (2.0 * at(0) - 5.0 * at(-1) + 4.0 * at(-2) - at(-3)) * ih2;
      });
  return out;
}

}  // namespace

Field second_derivative(const Field& f, int a, int b) {
  if (a == b) return second_same_axis(f, a);
  return derivative(derivative(f, a), b);
}

Field laplacian(const Field& f) {
  Field out(f.grid());
  for (int a = 0; a < f.grid().dim; ++a) out += second_same_axis(f, a);
  return out;
}

VField gradient(const Field& f) {
  VField out(f.grid());
  for (int a = 0; a < f.grid().dim; ++a) out[a] = derivative(f, a);
  return out;
}

Field divergence(const VField& v) {
  if (v.ncomp() != v.grid().dim) throw Error(ErrorKind::ShapeMismatch, "divergence needs dim components");
  Field out(v.grid());
  for (int a = 0; a < v.grid().dim; ++a) out += derivative(v[a], a);
  return out;
}

Field directional(const VField& a, const Field& f) {
  Field out(f.grid());
  for (int j = 0; j < f.grid().dim; ++j) out.values() += a[j].values() * derivative(f, j).values();
  return out;
}

double integrate(const Field& f) { return f.values().sum() * f.grid().cell_volume(); }

double sup(const Field& f) { return f.size() == 0 ? 0.0 : f.values().abs().maxCoeff(); }

double sup(const VField& v) {
  double s = 0.0;
  for (int i = 0; i < v.ncomp(); ++i) s = std::max(s, sup(v[i]));
  return s;
}

void require_finite(const Field& f, const char* what) {
  if (!f.values().allFinite()) throw Error(ErrorKind::NonFinite, std::string(what) + " has non-finite samples");
}

void require_finite(const VField& v, const char* what) {
  for (int i = 0; i < v.ncomp(); ++i) require_finite(v[i], what);
}

double integral_magnitude(const VField& v) {
  const Grid& g = v.grid();
  const int n = std::min(g.dim, v.ncomp());
  std::vector<std::vector<Field>> d(n);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j) d[k].push_back(derivative(v[k], j));
  Eigen::ArrayXd acc = Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(g.size()));
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) acc += (d[k][j].values() * d[j][k].values()).abs();
  return acc.sum() * g.cell_volume();
}

NormReport norms(const VField& v) {
  require_finite(v, "field");
  const Grid& g = v.grid();
  NormReport r;
  double l2sq = 0.0, h1sq = 0.0, h2sq = 0.0, s1 = 0.0, s2 = 0.0;
  for (int i = 0; i < v.ncomp(); ++i) {
    r.sup0 += sup(v[i]);
    l2sq += v[i].values().square().sum();
    for (int a = 0; a < g.dim; ++a) {
      Field da = derivative(v[i], a);
      s1 += sup(da);
      h1sq += da.values().square().sum();
      for (int b = 0; b < g.dim; ++b) {
        Field dab = a == b ? second_same_axis(v[i], a) : derivative(da, b);
        s2 += sup(dab);
        h2sq += dab.values().square().sum();
      }
    }
  }
  const double w = g.cell_volume();
  r.sup01 = r.sup0 + s1;
  r.sup12 = r.sup01 + s2;
  r.l2 = std::sqrt(l2sq * w);
  r.h1 = std::sqrt((l2sq + h1sq) * w);
  r.h2 = std::sqrt((l2sq + h1sq + h2sq) * w);
  r.integral_magnitude = integral_magnitude(v);
  return r;
}

NormReport norms(const Field& f) {
  return norms(VField(f.grid(), std::vector<Field>{f}));
}

DecayResult decay_check(const VField& v, int k) {
  const Grid& g = v.grid();
  if (g.topology != Topology::free_space)
    throw Error(ErrorKind::TopologyMismatch, "decay_check needs a free-space grid");
  std::vector<Field> probes;
  for (int i = 0; i < v.ncomp(); ++i) {
    probes.push_back(v[i]);
    for (int a = 0; a < g.dim; ++a) {
      Field da = derivative(v[i], a);
      for (int b = a; b < g.dim; ++b) probes.push_back(a == b ? second_same_axis(v[i], a) : derivative(da, b));
      probes.push_back(std::move(da));
    }
  }
  double inner = 0.0, outer = 0.0;
  const double shell = 0.75 * g.extent;
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    const Point p = g.point(idx);
    double r2 = 0.0, linf = 0.0;
    for (int a = 0; a < g.dim; ++a) {
      r2 += p[a] * p[a];
      linf = std::max(linf, std::abs(p[a]));
    }
    const double w = std::pow(1.0 + std::sqrt(r2), k);
    double m = 0.0;
    for (const auto& f : probes) m = std::max(m, std::abs(f[idx]) * w);
    if (linf >= shell) outer = std::max(outer, m);
    else inner = std::max(inner, m);
  }
  DecayResult res;
  res.worst = std::max(inner, outer);
  res.passes = outer <= inner;
  return res;
}

}  // namespace leray
