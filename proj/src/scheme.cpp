#include "leray/scheme.hpp"

#include <algorithm>
#include <cmath>

namespace leray {

double rho_schedule(int l, const BoundsLedger& ledger, const StepSchedule& s) {
  if (l < 1) throw Error(ErrorKind::ValidationError, "step numbers start at 1");
  const double cap = ledger.cap(l);
  if (!(cap >= 1e-8)) throw Error(ErrorKind::CapCollapse, "step cap " + std::to_string(cap) + " at step " + std::to_string(l));
  if (s.mode == ScheduleMode::decreasing_paper) return std::min(s.C / l, cap);
  return s.rho > 0.0 ? s.rho : ledger.cap(1);
}

double harmonic_sum(long n) {
  // Summed from the small end for accuracy.
  double s = 0.0;
  for (long l = n; l >= 1; --l) s += 1.0 / static_cast<double>(l);
  return s;
}

double IterationState::sum_delta() const {
  double s = 0.0;
  for (double d : delta12) s += d;
  return s;
}

double IterationState::max_ratio() const {
  double m = 0.0;
  for (double r : ratios) m = std::max(m, r);
  return m;
}

double trajectory_norm12(const Trajectory& u) {
  double space = 0.0, time = 0.0;
  for (std::size_t n = 0; n < u.values.size(); ++n) {
    space = std::max(space, norms(u.values[n]).sup12);
    if (n == 0) continue;
    const double dt = u.tau[n] - u.tau[n - 1];
    double s = 0.0;
    for (int i = 0; i < u.values[n].ncomp(); ++i) s += sup(u.values[n][i] - u.values[n - 1][i]) / dt;
    time = std::max(time, s);
  }
  return space + time;
}

SchemeContext::SchemeContext(const Grid& g, double nu, bool leray)
    : grid_(g), nu_(nu), solver_(std::make_unique<ImexSolver>(g)) {
  if (leray) op_ = std::make_unique<LerayOperator>(g);
}

SchemeContext::~SchemeContext() = default;

LerayOperator& SchemeContext::op() {
  if (!op_) op_ = std::make_unique<LerayOperator>(grid_);
  return *op_;
}

namespace {

bool all_zero(const Trajectory& r) {
  for (const auto& v : r.values)
    if (sup(v) != 0.0) return false;
  return true;
}

Trajectory difference(const Trajectory& a, const Trajectory& b) {
  Trajectory d;
  d.tau = a.tau;
  for (std::size_t n = 0; n < a.values.size(); ++n) d.values.push_back(a.values[n] - b.values[n]);
  return d;
}

}  // namespace

LocalResult local_fixed_point(SchemeContext& ctx, const VField& w_init, const Trajectory& r, double rho,
                              const IterationOptions& opt, double c12) {
  const int m = opt.backend.substeps;
  const double dt = 1.0 / m;
  const double tol = opt.tol > 0.0 ? opt.tol : 1e-8 * c12;
  const bool has_r = !r.values.empty() && !all_zero(r);
  if (has_r && static_cast<int>(r.values.size()) != m + 1)
    throw Error(ErrorKind::ShapeMismatch, "control trajectory must have substeps + 1 samples");
  const bool leray = opt.leray;
  const double nu = ctx.nu();
  const Grid& g = ctx.grid();

  auto source_for = [&](const VField& w, int n) {
    VField s(g, w.ncomp());
    if (leray) s += rho * ctx.op().rhs(w);
    if (has_r) {
      s += control_operator(ctx.op(), r.values[n], w, rho, nu);
      s += (1.0 / dt) * (r.values[n + 1] - r.values[n]);
    }
    return s;
  };

  LinearProblem p;
  p.diffusion = rho * nu;
  p.initial = w_init;
  p.drift = {(-rho) * w_init};
  if (has_r)
    for (int n = 0; n < m; ++n) p.source.push_back(source_for(w_init, n));
  else if (leray)
    p.source = {source_for(w_init, 0)};

  LocalResult res;
  Trajectory prev = ctx.solver().solve(p, opt.backend);
  {
    // A trajectory that never leaves w_init reproduces itself at k = 1.
    Trajectory frozen;
    frozen.tau = prev.tau;
    frozen.values.assign(prev.values.size(), w_init);
    if (trajectory_norm12(difference(prev, frozen)) <= tol) {
      res.w = std::move(prev);
      res.state.converged = true;
      return res;
    }
  }

  int above = 0;
  for (int k = 1; k <= opt.kmax; ++k) {
    p.drift.clear();
    p.source.clear();
    for (int n = 0; n < m; ++n) {
      p.drift.push_back((-rho) * prev.values[n]);
      if (leray || has_r) p.source.push_back(source_for(prev.values[n], n));
    }
    Trajectory w = ctx.solver().solve(p, opt.backend);
    const Trajectory d = difference(w, prev);
    const double d12 = trajectory_norm12(d);
    double dh2 = 0.0;
    for (const auto& v : d.values) dh2 = std::max(dh2, norms(v).h2);
    res.state.k = k;
    res.state.delta12.push_back(d12);
    res.state.delta_h2.push_back(dh2);
    if (k >= 2) {
      const double prev12 = res.state.delta12[k - 2];
      const double ratio = prev12 > 0.0 ? d12 / prev12 : 0.0;
      res.state.ratios.push_back(ratio);
      above = ratio > 1.0 ? above + 1 : 0;
      if (above >= 3) throw Error(ErrorKind::NoContraction, "ratio above 1 on three consecutive iterations");
    }
    prev = std::move(w);
    if (d12 <= tol) {
      res.state.converged = true;
      break;
    }
  }
  res.w = std::move(prev);
  return res;
}

double psi_gap_diagnostic(LerayOperator& op, const Trajectory& r, const VField& r_prev, const VField& w_prev,
                          double rho) {
  if (all_zero(r) && sup(r_prev) == 0.0) return 0.0;
  const VField lr0 = op.rhs(r_prev);
  double gap = 0.0;
  for (const VField& rn : r.values) {
    const VField dr = rn - r_prev;
    VField t = rho * (op.rhs(rn) - lr0);
    for (int i = 0; i < t.ncomp(); ++i) {
      t[i] -= rho * directional(dr, rn[i]);
      t[i] += rho * directional(dr, w_prev[i]);
      t[i] += rho * directional(w_prev, dr[i]);
    }
    t += (-2.0 * rho) * op.rhs_bilinear(dr, w_prev);
    gap = std::max(gap, norm01(t));
  }
  return gap;
}

double psi_gap_assembled(LerayOperator& op, const Trajectory& r, const VField& r_prev, const VField& w_prev,
                         const ConsumptionField& phi, double rho, double nu) {
  const VField S = r_source(op, w_prev, r_prev, rho);
  const VField lw = rho * op.rhs(w_prev);
  double gap = 0.0;
  for (std::size_t n = 0; n < r.values.size(); ++n) {
    const VField& rn = r.values[n];
    const VField ph = phi.at(r.tau[n]);
    VField psi = S + ph + lw + control_operator(op, rn, w_prev, rho, nu);
    for (int i = 0; i < psi.ncomp(); ++i) {
      psi[i] += (rho * nu) * laplacian(rn[i]);
      psi[i] += rho * directional(r_prev, rn[i]);
    }
    gap = std::max(gap, norm01(psi - ph));
  }
  return gap;
}

double divergence_reference(const VField& h) {
  const Grid& g = h.grid();
  double third = 0.0;
  for (int i = 0; i < g.dim && i < h.ncomp(); ++i) third += sup(derivative(derivative(derivative(h[i], i), i), i));
  const double sp = g.spacing();
  return std::max(sup(divergence(h)), sp * sp / 6.0 * third);
}

double cole_hopf_sine(double nu, double t, double x) {
  const double a = 1.0 / (2.0 * nu);
  const double i0 = std::cyl_bessel_i(0.0, a);
  double phi = i0, dphi = 0.0;
  for (int n = 1; n < 400; ++n) {
    const double c = 2.0 * std::cyl_bessel_i(static_cast<double>(n), a) * std::exp(-nu * n * n * t);
    phi += c * std::cos(n * x);
    dphi -= c * n * std::sin(n * x);
    if (c < 1e-18 * i0) break;
  }
  return -2.0 * nu * dphi / phi;
}

VField taylor_green_2d(const Grid& g, double nu, double t) {
  const double d = std::exp(-2.0 * nu * t);
  return sample(g, 2, [d](int c, const Point& p) {
    return d * (c == 0 ? std::sin(p[0]) * std::cos(p[1]) : -std::cos(p[0]) * std::sin(p[1]));
  });
}

namespace {

Trajectory zero_trajectory(const Grid& g, int ncomp, int m) {
  Trajectory z;
  for (int n = 0; n <= m; ++n) {
    z.tau.push_back(static_cast<double>(n) / m);
    z.values.emplace_back(g, ncomp);
  }
  return z;
}

struct StepOutcome {
  LocalResult local;
  Trajectory r;
  ThresholdSets sets;
  ConsumptionField phi;
  VField S;
  double rho = 0.0;
  int retries = 0;
};

}  // namespace

MarchResult global_march(const VField& h, double nu, const MarchOptions& opt) {
  require_finite(h, "initial data");
  const Grid& g = h.grid();
  const int nc = h.ncomp();
  const int m = opt.iteration.backend.substeps;
  SchemeContext ctx(g, nu, opt.leray || opt.controls);
  MarchResult res;
  res.ledger = make_ledger(h, nu);
  BoundsLedger& L = res.ledger;
  calibrate_c_star(L, h2_norm(h), 1);

  StepSchedule schedule = opt.schedule;
  auto fix_uniform = [&] {
    if (schedule.mode != ScheduleMode::uniform_section4) return;
    if (opt.schedule.rho > 0.0) {
      if (opt.schedule.rho > L.cap(1))
        throw Error(ErrorKind::ValidationError, "uniform step " + std::to_string(opt.schedule.rho) + " exceeds the cap " +
                                                    std::to_string(L.cap(1)));
      schedule.rho = opt.schedule.rho;
    } else {
      schedule.rho = opt.T / std::ceil(opt.T / L.cap(1) - 1e-12);
    }
  };
  fix_uniform();

  VField w_prev = h, r_prev(g, nc);
  double t = 0.0;
  double sup_prev = sup(h);

  auto attempt = [&](int l, double rho) {
    StepOutcome out;
    out.rho = rho;
    while (true) {
      try {
        if (opt.controls) {
          out.sets = build_threshold_sets(w_prev, r_prev, L.c12);
          for (const auto& msg : out.sets.log) res.log.push_back("step " + std::to_string(l) + ": " + msg);
          out.phi = build_phi(w_prev, r_prev, L.c12, out.sets, opt.modulation);
          out.S = r_source(ctx.op(), w_prev, r_prev, out.rho);
          if (l == 1 && opt.paper_faithful)
            out.r = zero_trajectory(g, nc, m);
          else
            out.r = solve_r(ctx.solver(), ctx.op(), w_prev, r_prev, out.phi, out.rho, nu, l, L, opt.iteration.backend);
        }
        IterationOptions it = opt.iteration;
        it.leray = opt.leray;
        out.local = local_fixed_point(ctx, w_prev, out.r, out.rho, it, L.c12);
        return out;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::NoContraction || out.retries >= opt.max_retries) throw;
        out.rho *= 0.5;
        ++out.retries;
        res.log.push_back("step " + std::to_string(l) + ": no contraction, rho halved to " + std::to_string(out.rho));
      }
    }
  };

  auto trajectory_max = [](const Trajectory& tr, auto&& f) {
    double v = 0.0;
    for (const auto& x : tr.values) v = std::max(v, f(x));
    return v;
  };

  for (int l = 1; t < opt.T * (1.0 - 1e-12) && l <= opt.max_steps; ++l) {
    double rho = rho_schedule(l, L, schedule);
    if (schedule.mode == ScheduleMode::decreasing_paper) rho = std::min(rho, opt.T - t);
    StepOutcome out = attempt(l, rho);

    if (l == 1) {
      // Freeze C*_n on the first step: raise it until the step's own H^2 fits.
      double h2 = std::max(trajectory_max(out.local.w, h2_norm), out.r.values.empty() ? 0.0 : trajectory_max(out.r, h2_norm));
      for (int pass = 0; pass < 4 && h2 > L.h2_budget(1); ++pass) {
        calibrate_c_star(L, h2, 1);
        fix_uniform();
        res.log.push_back("C*_n raised to " + std::to_string(L.c_star) + " after the first step");
        out = attempt(1, rho_schedule(1, L, schedule));
        h2 = std::max(trajectory_max(out.local.w, h2_norm), out.r.values.empty() ? 0.0 : trajectory_max(out.r, h2_norm));
      }
    }

    const Trajectory& w = out.local.w;
    const VField r_now = out.r.values.empty() ? VField(g, nc) : out.r.final();
    const VField v = w.final() - r_now;

    StepReport rep;
    rep.l = l;
    rep.rho = out.rho;
    rep.t = t + out.rho;
    rep.iterations = out.local.state.k;
    rep.retries = out.retries;
    rep.final_ratio = out.local.state.final_ratio();
    rep.max_ratio = out.local.state.max_ratio();
    rep.sum_delta = out.local.state.sum_delta();
    rep.sup_vr = trajectory_max(w, [](const VField& x) { return sup(x); });
    rep.h2_vr = trajectory_max(w, h2_norm);
    if (!out.r.values.empty()) {
      rep.sup_r = trajectory_max(out.r, [](const VField& x) { return sup(x); });
      rep.h2_r = trajectory_max(out.r, h2_norm);
    }
    rep.sup_v = sup(v);
    const NormReport nv = norms(v);
    rep.h2_v = nv.h2;
    rep.integral_magnitude = nv.integral_magnitude;
    rep.div_v = g.dim >= 2 && nc == g.dim ? sup(divergence(v)) : 0.0;
    if (opt.controls) {
      rep.psi_gap = psi_gap_diagnostic(ctx.op(), out.r, r_prev, w_prev, out.rho);
      rep.s01 = norm01(out.S);
      rep.dominance = consumption_dominance(out.phi, out.sets, out.S, r_prev, out.rho, nu);
    }
    rep.contraction_ok = out.local.state.converged && rep.max_ratio <= 0.25 + 0.02;
    rep.sum_ok = rep.sum_delta <= 0.25;

    LedgerRow row;
    row.l = l;
    row.rho = out.rho;
    row.t = rep.t;
    row.c12_step = trajectory_norm12(w);
    row.h2_budget = L.h2_budget(l);
    row.h2_vr = rep.h2_vr;
    row.h2_r = rep.h2_r;
    row.sup_vr = rep.sup_vr;
    row.sup_v = rep.sup_v;
    row.sup_r = rep.sup_r;
    row.breach_sup_vr = rep.sup_vr > L.c12;
    row.breach_sup_v = rep.sup_v > (g.dim + 1) * L.c12;
    row.breach_sup_r = rep.sup_r > L.c_r;
    row.breach_h2 = rep.h2_vr > row.h2_budget || rep.h2_r > row.h2_budget;
    L.rows.push_back(row);
    rep.ledger_ok = !row.any_breach();
    if (opt.controls && row.any_breach())
      throw Error(ErrorKind::LedgerBreach, "step " + std::to_string(l) + ": sup|v^r| " + std::to_string(rep.sup_vr) +
                                               ", sup|r| " + std::to_string(rep.sup_r) + ", H2 " +
                                               std::to_string(std::max(rep.h2_vr, rep.h2_r)) + " against C_{1,2} " +
                                               std::to_string(L.c12) + " and budget " + std::to_string(row.h2_budget));

    if (opt.max_principle) {
      const double s = trajectory_max(w, [](const VField& x) { return sup(x); });
      rep.max_principle_ok = s <= sup_prev + opt.max_principle_eps;
      if (!rep.max_principle_ok)
        throw Error(ErrorKind::MaxPrincipleViolation, "step " + std::to_string(l) + ": sup " + std::to_string(s) +
                                                          " exceeds " + std::to_string(sup_prev));
      sup_prev = sup(w.final());
    }

    t = rep.t;
    w_prev = w.final();
    r_prev = r_now;
    res.reports.push_back(rep);
    if (opt.on_step) opt.on_step(rep, v, row);
  }
  res.v = w_prev - r_prev;
  res.t = t;
  return res;
}

MarchResult burgers_march(const VField& h, double nu, MarchOptions opt) {
  opt.leray = false;
  opt.controls = false;
  opt.max_principle = true;
  if (opt.max_principle_eps <= 0.0) {
    const double sp = h.grid().spacing();
    opt.max_principle_eps = 1e-6 + sp * sp;
  }
  return global_march(h, nu, opt);
}

}  // namespace leray
