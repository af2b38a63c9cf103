#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <ostream>
#include <random>

#include "leray/boundary.hpp"
#include "leray/cli_io.hpp"
#include "leray/parametrix.hpp"
#include "leray/quadrature.hpp"

namespace leray {

namespace {

using std::numbers::pi;

struct Suite {
  std::string name;
  std::ostream& out;
  std::vector<CheckResult>& results;

  /// Records value <= threshold (or >= when `at_least`).
  void check(const std::string& check, double value, double threshold, bool at_least = false) {
    CheckResult r{name, check, value, threshold, at_least ? value >= threshold : value <= threshold, ""};
    if (!std::isfinite(value)) r.pass = false;
    emit(r);
  }
  void fail(const std::string& check, const std::string& error) {
    emit(CheckResult{name, check, 0.0, 0.0, false, error});
  }
  /// Runs `body`; an escaping Error becomes one failed check.
  void guard(const std::string& check, const std::function<void()>& body) {
    try {
      body();
    } catch (const Error& e) {
      fail(check, e.what());
    }
  }
  void emit(const CheckResult& r) {
    out << r.suite << "\t" << r.name << "\t" << format_double(r.value) << "\t" << format_double(r.threshold) << "\t"
        << (r.pass ? "PASS" : "FAIL");
    if (!r.error.empty()) out << "\t" << r.error;
    out << "\n";
    out.flush();
    results.push_back(r);
  }
};

VField tg(const Grid& g) { return taylor_green_2d(g, 0.1, 0.0); }

VField bump(const Grid& g) {
  return sample(g, g.dim, [](int c, const Point& p) {
    const double r2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
    return std::exp(-r2) * (c == 0 ? p[1] + 0.3 : -p[0] + 0.1 * c);
  });
}

void grid_fields_suite(Suite& s) {
  s.check("div_taylor_green_zero", sup(divergence(tg(make_grid(2, pi, 32, Topology::torus)))), 1e-12);
  // v = (sin x cos 2y, cos x sin y): div = cos x cos 2y + cos x cos y.
  auto err = [](int n) {
    Grid g = make_grid(2, pi, n, Topology::torus);
    VField v = sample(g, 2, [](int c, const Point& x) {
      return c == 0 ? std::sin(x[0]) * std::cos(2 * x[1]) : std::cos(x[0]) * std::sin(x[1]);
    });
    Field exact = sample(g, [](const Point& x) { return std::cos(x[0]) * (std::cos(2 * x[1]) + std::cos(x[1])); });
    return sup(divergence(v) - exact);
  };
  s.check("div_order", std::log2(err(32) / err(64)), 1.9, true);
  const auto n = norms(VField(make_grid(2, pi, 16, Topology::torus)));
  s.check("zero_norms", n.sup0 + n.sup12 + n.h2, 0.0);
  Grid g = make_grid(1, pi, 64, Topology::torus);
  Field f = sample(g, [](const Point& x) { return std::sin(x[0]); });
  s.check("l2_sine", std::abs(norms(f).l2 - std::sqrt(pi)), 1e-12);
}

/// Both engines on one kernel; with `fault` the fast engine sees a perturbed copy.
double engine_pair(const Field& f, const SampledKernel& k, bool fault, double tol) {
  SampledKernel kf = k;
  if (fault) kf.values[1] *= 1.0 + 1e-3;
  const double d = sup(convolve(f, k, Engine::direct) - convolve(f, kf, Engine::fast));
  if (d > tol) throw Error(ErrorKind::EngineMismatch, "engines differ by " + format_double(d));
  return d;
}

void kernels_suite(Suite& s, const ValidateOptions& opt) {
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::uniform_real_distribution<double> rad(1.0, 4.0);
  for (int n : {2, 3}) {
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
      Point d{nd(rng), nd(rng), n == 3 ? nd(rng) : 0.0};
      const double len = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]), r = rad(rng);
      Point x{d[0] * r / len, d[1] * r / len, d[2] * r / len};
      const Point gk = poisson_kernel_grad(n, x);
      worst = std::max(worst, std::sqrt(gk[0] * gk[0] + gk[1] * gk[1] + gk[2] * gk[2]));
    }
    s.check("grad_bound_n" + std::to_string(n), worst * omega_n(n), 1.0);
  }

  {
    GaussianKernelSpec spec{2, 0.3, 0.5};
    Grid g = make_grid(2, 6.0 * std::sqrt(0.3 * 0.5) + 1.0, 64, Topology::free_space);
    Field k = sample(g, [&](const Point& p) { return heat_kernel(spec, p, {0.0, 0.0, 0.0}); });
    s.check("heat_mass", std::abs(integrate(k) - 1.0), 1e-6);
  }

  s.guard("engine_torus_heat", [&] {
    Grid t = make_grid(2, pi, 32, Topology::torus);
    GaussianKernelSpec spec{2, 0.1, 0.3};
    auto k = sample_kernel(t, [&](const Point& p) { return heat_kernel(spec, p, {0, 0, 0}); });
    s.check("engine_torus_heat", engine_pair(tg(t)[0], k, opt.inject_fault, 1e-10), 1e-10);
  });
  s.guard("engine_free_poisson_grad", [&] {
    Grid f = make_grid(2, 3.0, 32, Topology::free_space);
    auto k = sample_kernel(f, [](const Point& p) { return poisson_kernel_grad(2, p)[0]; }, 0.0);
    s.check("engine_free_poisson_grad", engine_pair(bump(f)[0], k, false, 1e-10), 1e-10);
  });

  auto gap = [](const Grid& g, const VField& v) {
    LerayOperator op(g);
    VField r = op.rhs(v);
    Field p = op.pressure(v);
    double d = 0.0;
    for (int i = 0; i < g.dim; ++i) d = std::max(d, sup(r[i] + derivative(p, i)));
    return d / std::max(sup(r), 1e-300);
  };
  // Grid tolerance 5 h^2 relative to sup|rhs|.
  Grid f64 = make_grid(2, 5.0, 64, Topology::free_space);
  s.check("rhs_minus_grad_pressure_free", gap(f64, bump(f64)), 5.0 * f64.spacing() * f64.spacing());
  Grid t64 = make_grid(2, pi, 64, Topology::torus);
  VField mixed = sample(t64, 2, [](int i, const Point& p) {
    return i == 0 ? std::sin(p[0] + 0.3) * std::cos(2 * p[1]) : std::cos(p[0] - 2 * p[1] + 0.7);
  });
  s.check("rhs_minus_grad_pressure_torus", gap(t64, mixed), 5.0 * t64.spacing() * t64.spacing());

  auto res = [](int n) { return pressure_identity_residual(tg(make_grid(2, pi, n, Topology::torus))); };
  const double r32 = res(32), r64 = res(64), r128 = res(128);
  const double p1 = std::log2(r32 / r64), p2 = std::log2(r64 / r128);
  s.check("pressure_identity_order_32_64", p1, 1.9, true);
  s.check("pressure_identity_order_64_128", p2, 1.9, true);
  // r = C h^2 (1 + a h^2) makes the observed order approach 2 with a gap that
  // shrinks fourfold per refinement; extrapolate the limit.
  s.check("pressure_identity_order_limit", p2 + (p2 - p1) / 3.0, 1.99, true);
}

void parametrix_suite(Suite& s) {
  const Point b{0.4, -0.3, 0.0};
  const double D = 1.0, T = 0.1, sd = std::sqrt(2.0 * D * T);
  double err = 0.0, peak = 0.0;
  LevySeries lv{constant_drift(2, b), D, 2, 8, 6};
  for (int i = -4; i <= 4; ++i)
    for (int j = -4; j <= 4; ++j) {
      Point x{0.75 * i * sd, 0.75 * j * sd, 0.0};
      const double exact = constant_drift_gamma(2, D, b, T, x, 0.0, {0, 0, 0});
      err = std::max(err, std::abs(levy_gamma(lv, T, x, 0.0, {0, 0, 0}).value - exact));
      peak = std::max(peak, exact);
    }
  s.check("levy_M2_rel_linf", err / peak, 1e-3);

  const Point bd{0.5, -0.3, 0.0};
  const double Dd = 0.5, t = 0.05, sdd = std::sqrt(2 * Dd * t);
  DkExpansion e{constant_drift(2, bd), Dd, 2};
  err = peak = 0.0;
  for (int i = -3; i <= 3; ++i)
    for (int j = -3; j <= 3; ++j) {
      Point x{i * sdd, j * sdd, 0};
      const double exact = constant_drift_gamma(2, Dd, bd, t, x, 0.0, {0, 0, 0});
      err = std::max(err, std::abs(param_fundamental(e, t, x, {0, 0, 0}).value - exact));
      peak = std::max(peak, exact);
    }
  s.check("dk_K2_rel_linf", err / peak, 1e-4);

  LevySeries z{zero_drift(2), 0.7, 3, 6, 4};
  DkExpansion zd{zero_drift(2), 0.7, 2};
  const Point x{0.3, -0.2, 0}, y{0.1, 0.4, 0};
  const double n = heat_kernel({2, 0.7, 0.8}, x, y);
  s.check("zero_drift_levy_exact", std::abs(levy_gamma(z, 1.3, x, 0.5, y).value - n), 0.0);
  s.check("zero_drift_dk_exact", std::abs(param_fundamental(zd, 0.8, x, y).value - n), 0.0);

  DriftSpec sine;
  sine.dim = 1;
  sine.bound = 0.8;
  sine.b = [](double, const Point& p) { return Point{0.8 * std::sin(p[0]), 0.0, 0.0}; };
  LevySeries ls{sine, 1.0, 2, 8, 8};
  const double tm = 0.1, sm = std::sqrt(2.0 * tm);
  const auto q = gauss_legendre(80, 0.4 - 10 * sm, 0.4 + 10 * sm);
  double mass = 0.0;
  for (std::size_t i = 0; i < q.nodes.size(); ++i)
    mass += q.weights[i] * levy_gamma(ls, tm, {0.4, 0, 0}, 0.0, {q.nodes[i], 0, 0}).value;
  s.check("levy_mass", std::abs(mass - 1.0), 2e-3);
}

void linparab_suite(Suite& s) {
  auto gaussian = [](double x, double var) { return std::exp(-x * x / (2 * var)) / std::sqrt(2 * pi * var); };
  Grid g = make_grid(1, pi, 256, Topology::torus);
  LinearProblem p;
  p.diffusion = 0.01;
  p.drift = {VField(g)};
  p.initial = VField(g, {sample(g, [&](const Point& x) { return gaussian(x[0], 0.25); })});
  const Field exact = sample(g, [&](const Point& x) { return gaussian(x[0], 0.27); });
  s.check("heat_gaussian", sup(solve_cauchy(p, {BackendKind::reference_imex, 16}).final()[0] - exact), 1e-4);

  Grid g2 = make_grid(2, pi, 32, Topology::torus);
  LinearProblem z;
  z.diffusion = 0.3;
  z.drift = {sample(g2, 2, [](int a, const Point&) { return 0.1 * (a + 1); })};
  z.initial = VField(g2);
  s.check("zero_stays_zero", sup(solve_cauchy(z, {}).final()), 0.0);

  LinearProblem c = z;
  c.diffusion = 0.1;
  c.drift = {sample(g2, 2, [](int a, const Point&) { return a == 0 ? 0.2 : -0.15; })};
  c.initial = VField(g2, {sample(g2, [](const Point& x) { return std::sin(x[0]) * std::cos(x[1]) + 0.5 * std::cos(x[1]); })});
  s.guard("cross_validate", [&] { s.check("cross_validate", cross_validate(c), 5e-3); });

  const double m0 = integrate(c.initial[0]);
  LinearProblem m = c;
  m.drift = {VField(g2)};
  double drift = 0.0;
  for (const auto& u : solve_cauchy(m, {}).values) drift = std::max(drift, std::abs(integrate(u[0]) - m0));
  s.check("torus_mean_conserved", drift, 1e-12 * std::max(1.0, std::abs(m0)));
}

void control_suite(Suite& s, const ValidateOptions& opt) {
  Grid g = make_grid(3, 3.0, 16, Topology::torus);
  IndexSet A, B;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Point x = g.point(i);
    if (x[0] < -1.5) A.push_back(i);
    if (x[0] > 1.0 && x[1] > 0.0) B.push_back(i);
  }
  auto pr = build_partition(A, B, g);
  std::mt19937_64 rng(opt.seed + 1);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) worst = std::max(worst, std::abs(pr.partition.sum({u(rng), u(rng), u(rng)}) - 1.0));
  s.check("partition_sum", worst, 1e-12);

  Grid t = make_grid(2, pi, 64, Topology::torus);
  LerayOperator op(t);
  VField v = tg(t);
  auto L = make_ledger(v, 0.1);
  calibrate_c_star(L, h2_norm(v));
  const double C = L.c12, rho = L.substep_rho(2);
  VField r = sample(t, 2, [&](int c, const Point& x) {
    return c == 0 ? 0.8 * C * std::exp(-(x[0] * x[0] + x[1] * x[1]) / 0.5) : 0.0;
  });
  auto sets = build_threshold_sets(v, r, C);
  auto phi = build_phi(v, r, C, sets);
  double off = 0.0;
  for (int c = 0; c < 2; ++c) {
    for (std::size_t i : sets.v_plus[c]) off = std::max(off, std::abs(phi.phi_v[c][i] + 1.0));
    for (std::size_t i : sets.v_minus[c]) off = std::max(off, std::abs(phi.phi_v[c][i] - 1.0));
    for (std::size_t i : sets.r_plus[c]) off = std::max(off, std::abs(phi.phi_r[c][i] + 1.0));
    for (std::size_t i : sets.r_minus[c]) off = std::max(off, std::abs(phi.phi_r[c][i] - 1.0));
  }
  s.check("phi_band_values", off, 0.0);
  const auto rep = consumption_dominance(phi, sets, r_source(op, v, r, rho), r, rho, 0.1);
  s.check("dominance_plus", rep.worst_plus, -0.75);
  s.check("dominance_s_term", rep.s_term, 0.5);

  VField rr = sample(t, 2, [](int c, const Point& x) { return c == 0 ? 0.3 * std::cos(x[1]) : 0.2 * std::sin(x[0] + x[1]); });
  const double rh = 0.01, nu = 0.1;
  auto nse = [&](const VField& w) {
    VField out = rh * op.rhs(w);
    for (int i = 0; i < 2; ++i) {
      out[i] += (rh * nu) * laplacian(w[i]);
      out[i] -= rh * directional(w, w[i]);
    }
    return out;
  };
  s.check("control_operator_identity", sup(nse(v - rr) - (nse(v) + control_operator(op, rr, v, rh, nu))), 1e-13);
}

void scheme_suite(Suite& s) {
  BoundsLedger L;
  L.c12 = L.c_r = 2.0;
  L.c_star = L.c_k = 1e-3;
  StepSchedule dec{ScheduleMode::decreasing_paper, 0.5, 0.0};
  double dev = 0.0;
  for (int l = 1; l <= 50; ++l) dev = std::max(dev, std::abs(rho_schedule(l, L, dec) - 0.5 / l));
  s.check("decreasing_rho_C_over_l", dev, 0.0);
  // H_N = ln N + gamma + 1/(2N) - 1/(12 N^2) + O(N^-4).
  const long N = 1000000;
  const double closed = std::log(double(N)) + std::numbers::egamma + 0.5 / N - 1.0 / (12.0 * N * N);
  s.check("harmonic_sum_closed_form", std::abs(harmonic_sum(N) - closed), 1e-12);
  s.check("harmonic_sum_exceeds_log", harmonic_sum(N) - std::log(N + 1.0), 0.0, true);

  Grid g = make_grid(2, pi, 32, Topology::torus);
  MarchOptions opt;
  opt.T = 0.1;
  s.check("zero_data_zero", sup(global_march(VField(g), 0.1, opt).v), 0.0);

  s.guard("taylor_green_contraction", [&] {
    MarchOptions o;
    o.max_steps = 3;
    auto m = global_march(tg(g), 0.1, o);
    double worst = 0.0, sum = 0.0;
    for (const auto& r : m.reports) {
      worst = std::max(worst, r.max_ratio);
      sum = std::max(sum, r.sum_delta);
    }
    s.check("taylor_green_contraction", worst, 0.27);
    s.check("taylor_green_sum_delta", sum, 0.25 * m.ledger.c12);
    s.check("taylor_green_error", sup(m.v - taylor_green_2d(g, 0.1, m.t)), 1e-3);
  });

  s.guard("controls_on_psi_gap", [&] {
    MarchOptions o;
    o.controls = true;
    o.max_steps = 3;
    auto m = global_march(tg(g), 0.1, o);
    double psi = 0.0;
    for (const auto& r : m.reports) psi = std::max(psi, r.psi_gap);
    s.check("controls_on_psi_gap", psi, 0.25);
  });

  s.guard("burgers_cole_hopf", [&] {
    Grid b = make_grid(1, pi, 256, Topology::torus);
    VField h = sample(b, 1, [](int, const Point& x) { return std::sin(x[0]); });
    MarchOptions o;
    o.T = 0.5;
    o.iteration.backend.substeps = 64;
    auto m = burgers_march(h, 0.1, o);
    double err = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i)
      err = std::max(err, std::abs(m.v[0][i] - cole_hopf_sine(0.1, 0.5, b.point(i)[0])));
    s.check("burgers_cole_hopf", err, 1e-3);
  });
}

void boundary_suite(Suite& s) {
  HeatKernel k{1, 0.5, {0, 0, 0}};
  const Point x{0.0, 0, 0}, nu{-1.0, 0, 0}, y{0.8, 0, 0};
  const double u = 0.5;
  const double n = std::exp(-0.64 / (4.0 * 0.5 * u)) / std::sqrt(4.0 * pi * 0.5 * u);
  const double dn = (x[0] - y[0]) / (2.0 * 0.5 * u) * n;
  s.check("k_gamma_closed_form", std::abs(k_gamma(k, constant_robin(0.0, 0.0), 0.7, x, nu, 0.2, y) - dn), 1e-8);

  s.guard("robin_benchmark", [&] {
    const auto rep = robin_benchmark();
    s.check("robin_linf", rep.linf, 1e-3);
    s.check("integral_residual", rep.residual, 1e-6);
    s.check("neumann_ratio_past_1", rep.max_ratio_past_1, 0.9 - 1e-15);
    s.check("insulated_mass", rep.mass_drift, 1e-4);
  });
}

}  // namespace

std::vector<std::string> validate_suites() {
  return {"grid_fields", "kernels", "parametrix", "linparab", "control", "scheme", "boundary"};
}

std::vector<CheckResult> validate(const ValidateOptions& opt, std::ostream& out) {
  const auto names = validate_suites();
  if (!opt.filter.empty() && std::find(names.begin(), names.end(), opt.filter) == names.end())
    throw Error(ErrorKind::ValidationError, "unknown suite '" + opt.filter + "'");
  std::vector<CheckResult> results;
  out << "suite\tcheck\tvalue\tthreshold\tstatus\n";
  for (const auto& name : names) {
    if (!opt.filter.empty() && name != opt.filter) continue;
    Suite s{name, out, results};
    s.guard("suite", [&] {
      if (name == "grid_fields") grid_fields_suite(s);
      else if (name == "kernels") kernels_suite(s, opt);
      else if (name == "parametrix") parametrix_suite(s);
      else if (name == "linparab") linparab_suite(s);
      else if (name == "control") control_suite(s, opt);
      else if (name == "scheme") scheme_suite(s);
      else boundary_suite(s);
    });
  }
  std::size_t failed = 0;
  for (const auto& r : results) failed += r.pass ? 0 : 1;
  out << "summary\t" << results.size() << " checks\t" << failed << " failed\n";
  return results;
}

}  // namespace leray
