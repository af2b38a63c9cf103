#include "leray/linparab.hpp"

#include <algorithm>
#include <cmath>

#include "leray/parametrix.hpp"
#include "leray/spectral.hpp"
#include "rows.hpp"

namespace leray {

struct ImexSolver::Impl {
  std::unique_ptr<TorusSpectral> torus;
  std::unique_ptr<SineSpectral> sine;
};

ImexSolver::ImexSolver(const Grid& g) : grid_(g), impl_(std::make_unique<Impl>()) {
  if (g.topology == Topology::torus) impl_->torus = std::make_unique<TorusSpectral>(g);
  else impl_->sine = std::make_unique<SineSpectral>(g);
}

ImexSolver::~ImexSolver() = default;

Field ImexSolver::implicit_diffusion(const Field& rhs, double c) {
  return impl_->torus ? impl_->torus->helmholtz(rhs, c) : impl_->sine->helmholtz(rhs, c);
}

Field ImexSolver::advect(const Field& u, const VField& b, Advection adv) const {
  const Grid& g = grid_;
  const double h = g.spacing();
  const double* uv = u.values().data();
  Field out(g);
  double* o = out.values().data();
  for (int axis = 0; axis < g.dim; ++axis) {
    const double* bv = b[axis].values().data();
    auto stencil = [&](double c, const auto& at) {
      if (adv == Advection::upwind1) return c > 0.0 ? (at(1) - at(0)) / h : (at(0) - at(-1)) / h;
      if (c > 0.0) return (-at(2) + 6.0 * at(1) - 3.0 * at(0) - 2.0 * at(-1)) / (6.0 * h);
      return (2.0 * at(1) + 3.0 * at(0) - 6.0 * at(-1) + at(-2)) / (6.0 * h);
    };
    detail::sweep_axis(
        g, axis, 2, uv,
        [&](std::ptrdiff_t lo, std::ptrdiff_t hi, std::ptrdiff_t st) {
          for (std::ptrdiff_t i = lo; i < hi; ++i) {
            if (bv[i] == 0.0) continue;
            o[i] += bv[i] * stencil(bv[i], [&](std::ptrdiff_t k) { return uv[i + k * st]; });
          }
        },
        [&](std::ptrdiff_t i, int, const auto& at) {
          if (bv[i] != 0.0) o[i] += bv[i] * stencil(bv[i], at);
        });
  }
  return out;
}

double cfl_number(const VField& b, double dt) {
  const Grid& g = b.grid();
  double worst = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    double s = 0.0;
    for (int a = 0; a < b.ncomp(); ++a) s += std::abs(b[a][i]);
    worst = std::max(worst, s);
  }
  return worst * dt / g.spacing();
}

namespace {

void check_problem(const LinearProblem& p, const Backend& b) {
  if (!(p.diffusion > 0.0)) throw Error(ErrorKind::InvalidGrid, "diffusion must be positive");
  if (b.substeps < 4) throw Error(ErrorKind::InvalidGrid, "substeps must be at least 4");
  if (p.drift.empty()) throw Error(ErrorKind::ShapeMismatch, "drift missing");
  const auto bad = [&](std::size_t n) { return n != 1 && n != static_cast<std::size_t>(b.substeps); };
  if (bad(p.drift.size())) throw Error(ErrorKind::ShapeMismatch, "drift count must be 1 or substeps");
  if (!p.source.empty() && bad(p.source.size())) throw Error(ErrorKind::ShapeMismatch, "source count must be 1 or substeps");
  const Grid& g = p.initial.grid();
  for (const auto& d : p.drift)
    if (!(d.grid() == g) || d.ncomp() != g.dim) throw Error(ErrorKind::ShapeMismatch, "drift and initial grids differ");
  for (const auto& s : p.source)
    if (!(s.grid() == g) || s.ncomp() != p.initial.ncomp())
      throw Error(ErrorKind::ShapeMismatch, "source and initial shapes differ");
}

const VField& pick(const std::vector<VField>& v, int n) { return v.size() == 1 ? v[0] : v[static_cast<std::size_t>(n)]; }

}  // namespace

Trajectory ImexSolver::solve(const LinearProblem& p, const Backend& b) {
  check_problem(p, b);
  if (!(p.initial.grid() == grid_)) throw Error(ErrorKind::ShapeMismatch, "problem grid differs from solver grid");
  const int m = b.substeps;
  const double dt = p.horizon / m;
  for (const auto& d : p.drift) {
    const double c = cfl_number(d, dt);
    if (c > 0.5) throw Error(ErrorKind::CFLViolation, "advective CFL " + std::to_string(c) + " exceeds 0.5");
  }
  Trajectory tr;
  tr.tau.reserve(m + 1);
  tr.values.reserve(m + 1);
  tr.tau.push_back(0.0);
  tr.values.push_back(p.initial);
  VField u = p.initial;
  for (int n = 0; n < m; ++n) {
    const VField& drift = pick(p.drift, n);
    for (int c = 0; c < u.ncomp(); ++c) {
      Field rhs = u[c];
      rhs += dt * advect(u[c], drift, b.advection);
      if (!p.source.empty()) rhs += dt * pick(p.source, n)[c];
      u[c] = implicit_diffusion(rhs, dt * p.diffusion);
    }
    require_finite(u, "linear solve");
    tr.tau.push_back((n + 1) * dt);
    tr.values.push_back(u);
  }
  return tr;
}

namespace {

bool uniform(const VField& v, Point& value) {
  value = {0.0, 0.0, 0.0};
  for (int a = 0; a < v.ncomp(); ++a) {
    const auto& x = v[a].values();
    if (x.size() == 0) continue;
    if (x.maxCoeff() != x.minCoeff()) return false;
    value[a] = x[0];
  }
  return true;
}

/// Row-normalized sampled Gamma over one kernel step, sparse by row.
struct KernelMatrix {
  std::vector<std::vector<std::pair<std::size_t, double>>> rows;

  Field apply(const Field& f) const {
    Field out(f.grid());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      double s = 0.0;
      for (const auto& [j, w] : rows[i]) s += w * f[j];
      out[i] = s;
    }
    return out;
  }
};

KernelMatrix assemble(const Grid& g, const VField& drift, double D, double dt, int order) {
  DkExpansion e;
  Point cb;
  e.drift = uniform(drift, cb) ? constant_drift(g.dim, cb) : field_drift(drift, 1.0);
  e.diffusion = D;
  e.order = order;
  e.scale = std::max(1.0, std::sqrt(D * dt) / g.spacing()) * g.spacing();
  const double h = g.spacing();
  const int n = g.points;
  const int R = static_cast<int>(std::ceil(7.0 * std::sqrt(2.0 * D * dt) / h));
  const int lo = g.topology == Topology::torus ? std::max(-R, -n / 2) : -R;
  const int hi = g.topology == Topology::torus ? std::min(R, n / 2 - 1) : R;
  const double cell = g.cell_volume();
  const bool exact = e.drift.constant;
  KernelMatrix km;
  km.rows.resize(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto ijk = g.unravel(i);
    const Point x = g.point(i);
    double mass = 0.0;
    auto& row = km.rows[i];
    std::array<int, 3> o{lo, lo, lo};
    for (int a = g.dim; a < 3; ++a) o[a] = 0;
    while (true) {
      Point y = x;
      std::array<int, 3> t = ijk;
      bool inside = true;
      for (int a = 0; a < g.dim; ++a) {
        y[a] += o[a] * h;
        t[a] += o[a];
        if (g.topology == Topology::torus) t[a] = ((t[a] % n) + n) % n;
        else if (t[a] < 0 || t[a] >= n) inside = false;
      }
      const double w = (exact ? constant_drift_gamma(g.dim, D, cb, dt, x, 0.0, y) : param_fundamental(e, dt, x, y).value) * cell;
      mass += w;
      if (inside && w != 0.0) row.emplace_back(g.ravel(t), w);
      int a = g.dim - 1;
      while (a >= 0 && o[a] == hi) o[a--] = lo;
      if (a < 0) break;
      ++o[a];
    }
    // Constants solve the equation, so the continuous kernel has unit mass.
    if (mass > 0.0)
      for (auto& entry : row) entry.second /= mass;
  }
  return km;
}

Trajectory duhamel(const LinearProblem& p, const Backend& b) {
  check_problem(p, b);
  const Grid& g = p.initial.grid();
  const double h = g.spacing();
  const double T = p.horizon;
  // Resolve each step's Gaussian by at least 1.5 spacings.
  const int fit = static_cast<int>(std::floor(2.0 * p.diffusion * T / (2.25 * h * h)));
  const int m = std::clamp(fit, 1, b.substeps);
  const double dt = T / m;
  Trajectory tr;
  tr.tau.push_back(0.0);
  tr.values.push_back(p.initial);
  VField u = p.initial;
  std::size_t cached = static_cast<std::size_t>(-1);
  KernelMatrix km;
  for (int n = 0; n < m; ++n) {
    const int sub = std::min(b.substeps - 1, static_cast<int>(std::floor((n + 0.5) * b.substeps / m)));
    const std::size_t di = p.drift.size() == 1 ? 0 : static_cast<std::size_t>(sub);
    if (di != cached) {
      km = assemble(g, p.drift[di], p.diffusion, dt, b.param_order);
      cached = di;
    }
    for (int c = 0; c < u.ncomp(); ++c) {
      if (p.source.empty()) {
        u[c] = km.apply(u[c]);
        continue;
      }
      const Field& s = pick(p.source, sub)[c];
      // Trapezoid in the Duhamel time integral.
      Field next = km.apply(u[c] + (0.5 * dt) * s);
      next += (0.5 * dt) * s;
      u[c] = next;
    }
    require_finite(u, "Duhamel solve");
    tr.tau.push_back((n + 1) * dt);
    tr.values.push_back(u);
  }
  return tr;
}

}  // namespace

Trajectory solve_cauchy(const LinearProblem& p, const Backend& b) {
  if (b.kind == BackendKind::duhamel_parametrix) return duhamel(p, b);
  ImexSolver s(p.initial.grid());
  return s.solve(p, b);
}

double cross_validate(const LinearProblem& p, double tol, int substeps) {
  if (p.initial.grid().points > 48) throw Error(ErrorKind::InvalidGrid, "cross_validate is limited to 48 points per axis");
  Backend imex{BackendKind::reference_imex, substeps};
  Backend param{BackendKind::duhamel_parametrix, substeps};
  const VField a = solve_cauchy(p, imex).final();
  const VField b = solve_cauchy(p, param).final();
  const double gap = sup(a - b);
  if (tol > 0.0 && gap > tol)
    throw Error(ErrorKind::BackendDisagreement, "backends differ by " + std::to_string(gap));
  return gap;
}

}  // namespace leray
