#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "leray/scheme.hpp"

using namespace leray;
using std::numbers::pi;

TEST_CASE("rho schedule") {
  BoundsLedger L;
  L.c12 = L.c_r = 2.0;
  L.c_star = L.c_k = 1e-3;
  StepSchedule s{ScheduleMode::decreasing_paper, 0.5, 0.0};
  CHECK(rho_schedule(10, L, s) == doctest::Approx(0.05));
  L.c_star = 1.0;
  CHECK(rho_schedule(10, L, s) == L.cap(10));
  CHECK(L.cap(10) < 0.05);
  // Partial sums of C / l pass any fixed bound.
  CHECK(0.5 * harmonic_sum(1000000) > 0.5 * (std::log(1e6) + 0.5772));
  CHECK(harmonic_sum(4) == doctest::Approx(25.0 / 12.0));
  L.c_star = 1e12;
  CHECK_THROWS_AS(rho_schedule(1, L, s), Error);
  CHECK_THROWS_AS(rho_schedule(0, L, s), Error);
}

TEST_CASE("zero data converges at k = 0") {
  Grid g = make_grid(2, pi, 16, Topology::torus);
  SchemeContext ctx(g, 0.1, true);
  auto res = local_fixed_point(ctx, VField(g), {}, 0.01, {}, 2.0);
  CHECK(res.state.converged);
  CHECK(res.state.k == 0);
  CHECK(sup(res.w.final()) == 0.0);

  MarchOptions opt;
  opt.T = 0.1;
  auto m = global_march(VField(g), 0.1, opt);
  CHECK(sup(m.v) == 0.0);
  CHECK(m.t == doctest::Approx(0.1));
}

TEST_CASE("Burgers constant data stays constant") {
  Grid g = make_grid(1, pi, 64, Topology::torus);
  VField h = sample(g, 1, [](int, const Point&) { return 0.7; });
  MarchOptions opt;
  opt.T = 0.2;
  auto m = burgers_march(h, 0.1, opt);
  CHECK(sup(m.v - h) <= 1e-14);
}

TEST_CASE("Burgers against Cole-Hopf") {
  Grid g = make_grid(1, pi, 256, Topology::torus);
  VField h = sample(g, 1, [](int, const Point& x) { return std::sin(x[0]); });
  MarchOptions opt;
  opt.T = 0.5;
  opt.iteration.backend.substeps = 64;
  double worst_sup = 0.0;
  opt.on_step = [&](const StepReport& r, const VField&, const LedgerRow&) { worst_sup = std::max(worst_sup, r.sup_vr); };
  auto m = burgers_march(h, 0.1, opt);
  CHECK(m.t == doctest::Approx(0.5));
  double err = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i)
    err = std::max(err, std::abs(m.v[0][i] - cole_hopf_sine(0.1, 0.5, g.point(i)[0])));
  MESSAGE("Burgers error " << err << " in " << m.reports.size() << " steps");
  CHECK(err <= 1e-3);
  CHECK(worst_sup <= 1.0 + 1e-6 + g.spacing() * g.spacing());
  for (const auto& r : m.reports) {
    CHECK(r.max_principle_ok);
    CHECK(r.contraction_ok);
  }
}

TEST_CASE("Cole-Hopf oracle") {
  // At t = 0 the transform returns the data.
  for (double x : {-2.0, 0.3, 1.1}) CHECK(cole_hopf_sine(0.1, 0.0, x) == doctest::Approx(std::sin(x)).epsilon(1e-12));
  // Odd in x and decaying in sup.
  CHECK(cole_hopf_sine(0.1, 0.5, -0.4) == doctest::Approx(-cole_hopf_sine(0.1, 0.5, 0.4)));
  CHECK(std::abs(cole_hopf_sine(0.1, 2.0, 1.0)) < std::abs(cole_hopf_sine(0.1, 0.5, 1.0)));
}

TEST_CASE("Taylor-Green steps contract") {
  Grid g = make_grid(2, pi, 32, Topology::torus);
  VField h = taylor_green_2d(g, 0.1, 0.0);
  MarchOptions opt;
  opt.max_steps = 3;
  auto m = global_march(h, 0.1, opt);
  REQUIRE(m.reports.size() == 3);
  for (const auto& r : m.reports) {
    CHECK(r.contraction_ok);
    CHECK(r.max_ratio <= 0.25);
    CHECK(r.sum_delta <= 0.25 * m.ledger.c12);
    CHECK(r.ledger_ok);
    CHECK(r.div_v <= 10.0 * divergence_reference(h));
  }
  const VField exact = taylor_green_2d(g, 0.1, m.t);
  CHECK(sup(m.v - exact) <= 1e-3);
  // Uniform steps land on T.
  CHECK(m.ledger.cap(1) * std::ceil(1.0 / m.ledger.cap(1)) >= 1.0);
}

TEST_CASE("psi gap") {
  Grid g = make_grid(2, pi, 32, Topology::torus);
  LerayOperator op(g);
  VField w = taylor_green_2d(g, 0.1, 0.0), zero(g);
  Trajectory r0;
  for (int n = 0; n <= 4; ++n) {
    r0.tau.push_back(n / 4.0);
    r0.values.push_back(zero);
  }
  CHECK(psi_gap_diagnostic(op, r0, zero, w, 0.01) == 0.0);

  // Stationary control: only the terms in r - r0 remain, and they vanish.
  VField rp = sample(g, 2, [](int c, const Point& x) { return c == 0 ? 0.3 * std::cos(x[1]) : 0.2 * std::sin(x[0]); });
  Trajectory rs = r0;
  for (auto& v : rs.values) v = rp;
  CHECK(psi_gap_diagnostic(op, rs, rp, w, 0.01) <= 1e-13);

  // The closed form agrees with the scheme's own assembly.
  Trajectory rm = r0;
  for (int n = 0; n <= 4; ++n) rm.values[n] = (1.0 + 0.1 * n) * rp;
  auto L = make_ledger(w, 0.1);
  ConsumptionField phi = build_phi(w, rp, L.c12);
  const double a = psi_gap_diagnostic(op, rm, rp, w, 0.01);
  const double b = psi_gap_assembled(op, rm, rp, w, phi, 0.01, 0.1);
  CHECK(a > 0.0);
  CHECK(b == doctest::Approx(a).epsilon(1e-10));
}

TEST_CASE("controls-on steps keep the ledger") {
  Grid g = make_grid(2, pi, 32, Topology::torus);
  VField h = taylor_green_2d(g, 0.1, 0.0);
  MarchOptions opt;
  opt.controls = true;
  opt.max_steps = 3;
  auto m = global_march(h, 0.1, opt);
  REQUIRE(m.reports.size() == 3);
  for (const auto& r : m.reports) {
    CHECK(r.ledger_ok);
    CHECK(r.psi_gap <= 0.25);
    CHECK(r.sup_r <= m.ledger.c_r);
  }
  CHECK(m.reports.front().sup_r == 0.0);
  CHECK(m.ledger.rows.size() == 3);
}

TEST_CASE("divergence reference") {
  Grid g = make_grid(2, pi, 32, Topology::torus);
  VField tg = taylor_green_2d(g, 0.1, 0.0);
  CHECK(divergence_reference(tg) > 0.0);
  CHECK(sup(divergence(tg)) <= divergence_reference(tg));
  Grid g2 = make_grid(2, pi, 64, Topology::torus);
  CHECK(divergence_reference(taylor_green_2d(g2, 0.1, 0.0)) < 0.3 * divergence_reference(tg));
}
