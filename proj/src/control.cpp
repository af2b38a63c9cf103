#include "leray/control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>

#include "leray/parametrix.hpp"
#include "leray/quadrature.hpp"

namespace leray {

namespace {

double mollifier(double y) { return std::abs(y) < 1.0 ? std::exp(-1.0 / (1.0 - y * y)) : 0.0; }

/// Normalized 1D weights of the (at most two) cells covering coordinate u.
struct AxisWeights {
  int q[2];
  double w[2];
  int count = 0;
};

AxisWeights axis_weights(double u, double mu, int period) {
  AxisWeights a;
  const int q0 = static_cast<int>(std::floor(u / mu));
  double total = 0.0;
  for (int o = 0; o < 2; ++o) {
    const int q = q0 + o;
    const double y = (u - q * mu) / mu;
    if (std::abs(y) >= 1.0) continue;
    const double w = mollifier(y);
    a.q[a.count] = period > 0 ? ((q % period) + period) % period : q;
    a.w[a.count] = w;
    total += w;
    ++a.count;
  }
  for (int i = 0; i < a.count; ++i) a.w[i] /= total;
  return a;
}

template <typename Visit>
void covering_cells(const BumpPartition& p, const Point& x, Visit&& visit) {
  const Grid& g = p.grid;
  std::array<AxisWeights, 3> ax;
  for (int a = 0; a < g.dim; ++a) ax[a] = axis_weights(x[a] + g.extent, p.mu, p.cells_per_axis);
  std::array<int, 3> pick{0, 0, 0};
  while (true) {
    Cell c{0, 0, 0};
    double w = 1.0;
    for (int a = 0; a < g.dim; ++a) {
      c[a] = ax[a].q[pick[a]];
      w *= ax[a].w[pick[a]];
    }
    visit(c, w);
    int a = g.dim - 1;
    while (a >= 0 && pick[a] + 1 >= ax[a].count) pick[a--] = 0;
    if (a < 0) break;
    ++pick[a];
  }
}

bool contains(const std::vector<Cell>& cells, const Cell& c) { return std::binary_search(cells.begin(), cells.end(), c); }

double norm02_of(const Field& f) {
  const Grid& g = f.grid();
  double n = sup(f);
  for (int a = 0; a < g.dim; ++a) n += sup(derivative(f, a));
  for (int a = 0; a < g.dim; ++a)
    for (int b = 0; b < g.dim; ++b) n += sup(second_derivative(f, a, b));
  return n;
}

}  // namespace

double BumpPartition::sum(const Point& x) const {
  double s = 0.0;
  covering_cells(*this, x, [&](const Cell&, double w) { s += w; });
  return s;
}

std::pair<double, double> BumpPartition::weights(const Point& x) const {
  double a = 0.0, b = 0.0;
  covering_cells(*this, x, [&](const Cell& c, double w) {
    if (contains(cells_a, c)) a += w;
    else if (contains(cells_b, c)) b += w;
  });
  return {a, b};
}

double set_distance(const Grid& g, const IndexSet& a, const IndexSet& b) {
  if (a.empty() || b.empty()) return std::numeric_limits<double>::infinity();
  const double h = g.spacing();
  const int n = g.points;
  long best = std::numeric_limits<long>::max();
  for (std::size_t i : a) {
    const auto pa = g.unravel(i);
    for (std::size_t j : b) {
      const auto pb = g.unravel(j);
      long d2 = 0;
      for (int ax = 0; ax < g.dim; ++ax) {
        long d = std::abs(pa[ax] - pb[ax]);
        if (g.topology == Topology::torus) d = std::min<long>(d, n - d);
        d2 += d * d;
      }
      best = std::min(best, d2);
    }
  }
  return std::sqrt(static_cast<double>(best)) * h;
}

PartitionResult build_partition(const IndexSet& a, const IndexSet& b, const Grid& g) {
  PartitionResult res;
  res.delta = set_distance(g, a, b);
  if (res.delta == 0.0) throw Error(ErrorKind::EmptyDistance, "threshold sets touch");
  BumpPartition& p = res.partition;
  p.grid = g;
  p.mu = std::isfinite(res.delta) ? res.delta / (2.0 * std::sqrt(static_cast<double>(g.dim))) : 2.0 * g.spacing();
  if (g.topology == Topology::torus) {
    p.cells_per_axis = static_cast<int>(std::ceil(2.0 * g.extent / p.mu - 1e-12));
    p.mu = 2.0 * g.extent / p.cells_per_axis;
  }
  // A cell belongs to P_A when its open support contains a point of A.
  auto collect = [&](const IndexSet& s) {
    std::set<Cell> cells;
    for (std::size_t i : s) covering_cells(p, g.point(i), [&](const Cell& c, double) { cells.insert(c); });
    return std::vector<Cell>(cells.begin(), cells.end());
  };
  p.cells_a = collect(a);
  p.cells_b = collect(b);
  for (const Cell& c : p.cells_a)
    if (contains(p.cells_b, c)) throw Error(ErrorKind::EmptyDistance, "a partition cell meets both sets");
  res.f = sample(g, [&](const Point& x) { return p.f(x); });
  res.norm02 = norm02_of(res.f);
  return res;
}

namespace {

IndexSet band(const Field& f, double lo, double hi) {
  IndexSet s;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (f[i] >= lo && f[i] <= hi) s.push_back(i);
  return s;
}

IndexSet erode(const Grid& g, const IndexSet& s) {
  std::vector<char> in(g.size(), 0);
  for (std::size_t i : s) in[i] = 1;
  IndexSet out;
  const int n = g.points;
  for (std::size_t i : s) {
    const auto ijk = g.unravel(i);
    bool interior = true;
    for (int a = 0; a < g.dim && interior; ++a)
      for (int o : {-1, 1}) {
        auto nb = ijk;
        nb[a] += o;
        if (g.topology == Topology::torus) nb[a] = ((nb[a] % n) + n) % n;
        else if (nb[a] < 0 || nb[a] >= n) {
          interior = false;
          break;
        }
        if (!in[g.ravel(nb)]) {
          interior = false;
          break;
        }
      }
    if (interior) out.push_back(i);
  }
  return out;
}

void separate(const Grid& g, IndexSet& plus, IndexSet& minus, double& delta, int& erosions, const std::string& tag,
              std::vector<std::string>& log) {
  delta = set_distance(g, plus, minus);
  while (delta < 2.0 * g.spacing() && !plus.empty() && !minus.empty()) {
    plus = erode(g, plus);
    minus = erode(g, minus);
    ++erosions;
    delta = set_distance(g, plus, minus);
    log.push_back(tag + ": sets closer than 2h, eroded one layer");
  }
}

}  // namespace

ThresholdSets build_threshold_sets(const VField& v_prev, const VField& r_prev, double C) {
  if (!(C > 0.0)) throw Error(ErrorKind::LedgerViolation, "threshold level must be positive");
  const double s = sup(v_prev);
  if (s > C) throw Error(ErrorKind::LedgerViolation, "sup|v_prev| = " + std::to_string(s) + " exceeds level " + std::to_string(C));
  const Grid& g = v_prev.grid();
  const int nc = v_prev.ncomp();
  ThresholdSets t;
  t.level = C;
  t.v_plus.resize(nc);
  t.v_minus.resize(nc);
  t.r_plus.resize(nc);
  t.r_minus.resize(nc);
  t.delta_v.assign(nc, 0.0);
  t.delta_r.assign(nc, 0.0);
  t.erosions_v.assign(nc, 0);
  t.erosions_r.assign(nc, 0);
  for (int i = 0; i < nc; ++i) {
    t.v_plus[i] = band(v_prev[i], 0.5 * C, C);
    t.v_minus[i] = band(v_prev[i], -C, -0.5 * C);
    separate(g, t.v_plus[i], t.v_minus[i], t.delta_v[i], t.erosions_v[i], "v component " + std::to_string(i), t.log);
    std::vector<char> taken(g.size(), 0);
    for (std::size_t k : band(v_prev[i], 0.5 * C, C)) taken[k] = 1;
    for (std::size_t k : band(v_prev[i], -C, -0.5 * C)) taken[k] = 1;
    auto without_v = [&](IndexSet s) {
      s.erase(std::remove_if(s.begin(), s.end(), [&](std::size_t k) { return taken[k] != 0; }), s.end());
      return s;
    };
    if (i < r_prev.ncomp()) {
      t.r_plus[i] = without_v(band(r_prev[i], 0.5 * C, C));
      t.r_minus[i] = without_v(band(r_prev[i], -C, -0.5 * C));
    }
    separate(g, t.r_plus[i], t.r_minus[i], t.delta_r[i], t.erosions_r[i], "r component " + std::to_string(i), t.log);
  }
  return t;
}

VField ConsumptionField::at(double s) const {
  VField t = total();
  if (modulation == PhiModulation::sin2) {
    const double m = std::sin(std::numbers::pi * s);
    t *= m * m;
  }
  return t;
}

namespace {

/// -1 on the plus set, +1 on the minus set, the clamped fill elsewhere.
Field consumption_component(const Field& data, const IndexSet& plus, const IndexSet& minus, double C, double& norm02) {
  const Grid& g = data.grid();
  const PartitionResult pr = build_partition(plus, minus, g);
  Field phi(g);
  const bool any = !plus.empty() || !minus.empty();
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double fill = std::clamp(-(2.0 / C) * data[i], -1.0, 1.0);
    if (!any) {
      phi[i] = fill;
      continue;
    }
    auto [wa, wb] = pr.partition.weights(g.point(i));
    phi[i] = -wa + wb + (1.0 - wa - wb) * fill;
  }
  norm02 = std::max(norm02, pr.norm02);
  return phi;
}

}  // namespace

ConsumptionField build_phi(const VField& v_prev, const VField& r_prev, double C, const ThresholdSets& sets,
                           PhiModulation mod) {
  const Grid& g = v_prev.grid();
  ConsumptionField cf;
  cf.modulation = mod;
  cf.phi_v = VField(g, v_prev.ncomp());
  cf.phi_r = VField(g, v_prev.ncomp());
  for (int i = 0; i < v_prev.ncomp(); ++i) {
    cf.phi_v[i] = consumption_component(v_prev[i], sets.v_plus[i], sets.v_minus[i], C, cf.norm02);
    if (i < r_prev.ncomp()) cf.phi_r[i] = consumption_component(r_prev[i], sets.r_plus[i], sets.r_minus[i], C, cf.norm02);
  }
  return cf;
}

ConsumptionField build_phi(const VField& v_prev, const VField& r_prev, double C, PhiModulation mod) {
  return build_phi(v_prev, r_prev, C, build_threshold_sets(v_prev, r_prev, C), mod);
}

namespace {

bool is_zero(const VField& v) {
  for (int i = 0; i < v.ncomp(); ++i)
    if (v[i].values().size() > 0 && v[i].values().abs().maxCoeff() != 0.0) return false;
  return true;
}

}  // namespace

VField control_operator(LerayOperator& op, const VField& r, const VField& w, double rho, double nu) {
  const Grid& g = r.grid();
  VField out(g, r.ncomp());
  if (is_zero(r)) return out;
  for (int i = 0; i < r.ncomp(); ++i) {
    out[i] = (-rho * nu) * laplacian(r[i]);
    out[i] -= rho * directional(r, r[i]);
    out[i] += rho * directional(r, w[i]);
    out[i] += rho * directional(w, r[i]);
  }
  out += (-2.0 * rho) * op.rhs_bilinear(r, w);
  out += rho * op.rhs(r);
  return out;
}

VField r_source(LerayOperator& op, const VField& v_prev, const VField& r_prev, double rho) {
  VField s = (-rho) * op.rhs(v_prev);
  if (is_zero(r_prev)) return s;
  s += (-rho) * op.rhs(r_prev);
  for (int i = 0; i < s.ncomp(); ++i) {
    s[i] -= rho * directional(r_prev, v_prev[i]);
    s[i] -= rho * directional(v_prev, r_prev[i]);
  }
  s += (2.0 * rho) * op.rhs_bilinear(r_prev, v_prev);
  return s;
}

double norm01(const VField& v) { return norms(v).sup01; }

double h2_norm(const VField& v) { return norms(v).h2; }

double c12_constant(const VField& h) {
  const Grid& g = h.grid();
  const NormReport nr = norms(h);
  Field d1(g), d2(g);
  for (int k = 0; k < h.ncomp(); ++k)
    for (int j = 0; j < g.dim; ++j) {
      Field dj = derivative(h[k], j);
      d1.values() += dj.values().abs();
      for (int p = 0; p < g.dim; ++p) d2.values() += derivative(dj, p).values().abs();
    }
  const double quad = (d1.values() * d1.values()).sum() * g.cell_volume();
  const double mixed = (d2.values() * d1.values()).sum() * g.cell_volume();
  return 2.0 + 2.0 * nr.sup12 + quad + mixed;
}

double BoundsLedger::cap(int l) const {
  const double c = c12 + c_r;
  return 1.0 / (c_star * (c + l * c) * 4.0 * c_gamma * c_gamma);
}

double BoundsLedger::substep_rho(int l) const {
  const double c0 = c12;
  const double inner = 2.0 * c_k * (2.0 * c0 + l * 2.0 * c0 + 2.0 * c_r + l * 2.0 * c_r) + 4.0 * dim * c0 * c_r;
  return 1.0 / (4.0 * inner);
}

namespace {

void fit_gamma(BoundsLedger& L) {
  // C_Gamma enters its own step size; a few passes reach the fixed point.
  for (int it = 0; it < 20; ++it) {
    const double next = std::max(1.0, estimate_gamma_constant(L.c12, L.nu, L.cap(1)));
    if (std::abs(next - L.c_gamma) <= 1e-12 * next) {
      L.c_gamma = next;
      break;
    }
    L.c_gamma = next;
  }
}

}  // namespace

BoundsLedger make_ledger(const VField& h, double nu) {
  if (!(nu > 0.0)) throw Error(ErrorKind::ValidationError, "viscosity must be positive");
  BoundsLedger L;
  L.dim = h.grid().dim;
  L.nu = nu;
  L.c12 = c12_constant(h);
  L.c_r = L.c12;
  fit_gamma(L);
  return L;
}

void calibrate_c_star(BoundsLedger& L, double h2, int l) {
  const double base = L.c12 * (1.0 + l);
  L.c_star = h2 > 0.0 ? std::exp2(std::ceil(std::log2(h2 / base))) : 1.0;
  L.c_k = L.c_star;
  fit_gamma(L);
}

Trajectory solve_r(ImexSolver& solver, LerayOperator& op, const VField& v_prev, const VField& r_prev,
                   const ConsumptionField& phi, double rho, double nu, int l, const BoundsLedger& ledger,
                   const Backend& backend) {
  const VField S = r_source(op, v_prev, r_prev, rho);
  LinearProblem p;
  p.diffusion = rho * nu;
  p.drift = {rho * r_prev};
  p.initial = r_prev;
  if (phi.modulation == PhiModulation::constant) {
    p.source = {S + phi.total()};
  } else {
    for (int n = 0; n < backend.substeps; ++n) p.source.push_back(S + phi.at((n + 0.5) / backend.substeps));
  }
  Trajectory tr = solver.solve(p, backend);
  const double budget = ledger.h2_budget(l);
  for (std::size_t n = 0; n < tr.values.size(); ++n) {
    const double s = sup(tr.values[n]);
    const double h2 = h2_norm(tr.values[n]);
    if (s > ledger.c_r || h2 > budget)
      throw Error(ErrorKind::LedgerBreach, "step " + std::to_string(l) + " tau " + std::to_string(tr.tau[n]) +
                                               ": sup|r| = " + std::to_string(s) + " (C_r " + std::to_string(ledger.c_r) +
                                               "), H2(r) = " + std::to_string(h2) + " (budget " + std::to_string(budget) + ")");
  }
  return tr;
}

namespace {

/// Cell masses along one axis of a Gaussian centred `c` cells from the node.
std::vector<double> cell_masses(double c, double sd, double h, int R) {
  std::vector<double> m(2 * R + 1);
  for (int o = -R; o <= R; ++o) {
    const double a = ((o - 0.5) * h - c) / (sd * std::numbers::sqrt2);
    const double b = ((o + 0.5) * h - c) / (sd * std::numbers::sqrt2);
    m[o + R] = 0.5 * (std::erf(b) - std::erf(a));
  }
  return m;
}

}  // namespace

DominanceReport consumption_dominance(const ConsumptionField& phi, const ThresholdSets& sets, const VField& S,
                                      const VField& r_prev, double rho, double nu, double dtau) {
  const Grid& g = S.grid();
  const double h = g.spacing();
  const double D = rho * nu;
  const int n = g.points;
  const auto q = gauss_legendre(16, 0.0, dtau);
  DominanceReport rep;

  // Average of f against Gamma_r over elapsed time, per target point.
  auto average = [&](const std::function<const Field&(double)>& field_at, std::size_t x) {
    const auto ijk = g.unravel(x);
    Point b{0.0, 0.0, 0.0};
    for (int a = 0; a < g.dim && a < r_prev.ncomp(); ++a) b[a] = rho * r_prev[a][x];
    double total = 0.0;
    for (std::size_t k = 0; k < q.nodes.size(); ++k) {
      const double s = q.nodes[k];
      const double sd = std::sqrt(2.0 * D * s);
      double shift = 0.0;
      for (int a = 0; a < g.dim; ++a) shift = std::max(shift, std::abs(b[a]) * s);
      const int R = static_cast<int>(std::ceil((8.0 * sd + shift) / h)) + 1;
      std::array<std::vector<double>, 3> m;
      for (int a = 0; a < g.dim; ++a) m[a] = cell_masses(-b[a] * s, sd, h, R);
      const Field& f = field_at(dtau - s);
      double acc = 0.0;
      std::array<int, 3> o{-R, -R, -R};
      for (int a = g.dim; a < 3; ++a) o[a] = 0;
      while (true) {
        double w = 1.0;
        std::array<int, 3> t = ijk;
        bool inside = true;
        for (int a = 0; a < g.dim; ++a) {
          w *= m[a][o[a] + R];
          t[a] += o[a];
          if (g.topology == Topology::torus) t[a] = ((t[a] % n) + n) % n;
          else if (t[a] < 0 || t[a] >= n) inside = false;
        }
        if (inside && w != 0.0) acc += w * f[g.ravel(t)];
        int a = g.dim - 1;
        while (a >= 0 && o[a] == R) o[a--] = -R;
        if (a < 0) break;
        ++o[a];
      }
      total += q.weights[k] * acc;
    }
    return total / dtau;
  };

  bool seen_plus = false, seen_minus = false;
  for (int i = 0; i < S.ncomp(); ++i) {
    // phi is time-constant unless modulated, so it is sampled per quadrature node.
    std::vector<std::pair<double, Field>> phi_nodes;
    for (std::size_t k = 0; k < q.nodes.size(); ++k) phi_nodes.emplace_back(dtau - q.nodes[k], phi.at(dtau - q.nodes[k])[i]);
    auto phi_at = [&](double s) -> const Field& {
      for (const auto& [key, f] : phi_nodes)
        if (key == s) return f;
      return phi_nodes.front().second;
    };
    auto s_at = [&](double) -> const Field& { return S[i]; };
    for (const IndexSet* set : {&sets.v_plus[i], &sets.r_plus[i]})
      for (std::size_t x : *set) {
        const double v = average(phi_at, x);
        rep.worst_plus = seen_plus ? std::max(rep.worst_plus, v) : v;
        seen_plus = true;
        ++rep.points;
      }
    for (const IndexSet* set : {&sets.v_minus[i], &sets.r_minus[i]})
      for (std::size_t x : *set) {
        const double v = average(phi_at, x);
        rep.worst_minus = seen_minus ? std::min(rep.worst_minus, v) : v;
        seen_minus = true;
        ++rep.points;
      }
    for (std::size_t x = 0; x < g.size(); ++x) rep.s_term = std::max(rep.s_term, std::abs(average(s_at, x)));
  }
  return rep;
}

}  // namespace leray
