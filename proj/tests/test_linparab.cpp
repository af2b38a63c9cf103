#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "leray/linparab.hpp"

using namespace leray;
using std::numbers::pi;

namespace {

LinearProblem problem(const Grid& g, double D, const Point& b, const std::function<double(const Point&)>& u0) {
  LinearProblem p;
  p.diffusion = D;
  p.drift = {sample(g, g.dim, [&](int a, const Point&) { return b[a]; })};
  p.initial = VField(g, {sample(g, u0)});
  return p;
}

double gaussian(double x, double var) { return std::exp(-x * x / (2 * var)) / std::sqrt(2 * pi * var); }

}  // namespace

TEST_CASE("heat evolution of a Gaussian") {
  // Variance grows from 0.25 by 2 D T = 0.02.
  Grid g = make_grid(1, pi, 256, Topology::torus);
  auto p = problem(g, 0.01, {0, 0, 0}, [](const Point& x) { return gaussian(x[0], 0.25); });
  auto tr = solve_cauchy(p, {BackendKind::reference_imex, 16});
  Field exact = sample(g, [](const Point& x) { return gaussian(x[0], 0.27); });
  CHECK(sup(tr.final()[0] - exact) <= 1e-4);
  CHECK(tr.tau.back() == doctest::Approx(1.0));
  CHECK(tr.values.size() == 17u);
}

TEST_CASE("zero problem stays zero") {
  Grid g = make_grid(2, pi, 16, Topology::torus);
  auto p = problem(g, 0.3, {0.1, 0.2, 0}, [](const Point&) { return 0.0; });
  CHECK(sup(solve_cauchy(p, {}).final()) == 0.0);
  CHECK(cross_validate(p) == 0.0);
}

TEST_CASE("constant drift translates the data") {
  // u_t = D u_xx + b u_x moves the profile by -b T.
  Grid g = make_grid(1, 8.0, 256, Topology::free_space);
  const double b = 1.5, D = 0.01;
  auto p = problem(g, D, {b, 0, 0}, [](const Point& x) { return gaussian(x[0] - 1.0, 0.3); });
  const VField u = solve_cauchy(p, {BackendKind::reference_imex, 64}).final();
  double m0 = 0.0, m1 = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    m0 += u[0][i];
    m1 += u[0][i] * g.point(i)[0];
  }
  CHECK(std::abs(m1 / m0 - (1.0 - b)) <= g.spacing());
  // Explicit advection adds b^2 dt / 2 of anti-diffusion; resolve it for the shape check.
  const VField fine = solve_cauchy(p, {BackendKind::reference_imex, 512}).final();
  Field exact = sample(g, [&](const Point& x) { return gaussian(x[0] - 1.0 + b, 0.3 + 2 * D); });
  CHECK(sup(fine[0] - exact) <= 0.02 * sup(exact));
}

TEST_CASE("cross validation of the two backends") {
  Grid g = make_grid(2, pi, 32, Topology::torus);
  auto smooth = [](const Point& x) { return std::sin(x[0]) * std::cos(x[1]) + 0.5 * std::cos(x[1]); };
  CHECK(cross_validate(problem(g, 0.1, {0, 0, 0}, smooth)) <= 1e-3);
  CHECK(cross_validate(problem(g, 0.1, {0.2, -0.15, 0}, smooth)) <= 5e-3);
  CHECK_THROWS_AS(cross_validate(problem(make_grid(2, pi, 64, Topology::torus), 0.1, {0, 0, 0}, smooth)), Error);
  CHECK_THROWS_AS(cross_validate(problem(g, 0.1, {0.2, -0.15, 0}, smooth), 1e-12), Error);
}

TEST_CASE("Duhamel backend with variable drift and source") {
  Grid g = make_grid(1, pi, 32, Topology::torus);
  LinearProblem p;
  p.diffusion = 0.2;
  p.drift = {sample(g, 1, [](int, const Point& x) { return 0.3 * std::sin(x[0]); })};
  p.initial = VField(g, {sample(g, [](const Point& x) { return std::cos(x[0]); })});
  p.source = {VField(g, {sample(g, [](const Point& x) { return 0.2 * std::sin(2 * x[0]); })})};
  const VField a = solve_cauchy(p, {BackendKind::reference_imex, 64}).final();
  const VField b = solve_cauchy(p, {BackendKind::duhamel_parametrix, 16}).final();
  CHECK(sup(a - b) <= 2e-2);
}

TEST_CASE("maximum principle without source") {
  Grid g = make_grid(2, pi, 64, Topology::torus);
  LinearProblem p;
  p.diffusion = 0.05;
  p.drift = {sample(g, 2, [](int a, const Point& x) { return a == 0 ? 0.4 * std::sin(x[1]) : 0.3 * std::cos(x[0]); })};
  p.initial = VField(g, {sample(g, [](const Point& x) { return std::tanh(3 * std::sin(x[0])) * std::cos(x[1]); })});
  const double s0 = sup(p.initial);
  auto tr = solve_cauchy(p, {BackendKind::reference_imex, 32});
  const double eps = g.spacing() * g.spacing();
  for (const auto& u : tr.values) CHECK(sup(u) <= s0 + eps);
}

TEST_CASE("solver is additive in data and source") {
  Grid g = make_grid(2, 4.0, 32, Topology::free_space);
  auto drift = sample(g, 2, [](int a, const Point& x) { return a == 0 ? 0.5 * x[1] / 4.0 : -0.2; });
  auto f1 = VField(g, {sample(g, [](const Point& x) { return std::exp(-x[0] * x[0] - x[1] * x[1]); })});
  auto f2 = VField(g, {sample(g, [](const Point& x) { return x[0] * std::exp(-x[0] * x[0] - 2 * x[1] * x[1]); })});
  auto s1 = VField(g, {sample(g, [](const Point& x) { return std::exp(-x[1] * x[1]) * std::exp(-x[0] * x[0]); })});
  ImexSolver solver(g);
  auto run = [&](const VField& init, const VField& src) {
    LinearProblem p;
    p.diffusion = 0.1;
    p.drift = {drift};
    p.initial = init;
    p.source = {src};
    return solver.solve(p, {}).final();
  };
  const VField lhs = run(f1 + f2, s1 + (-1.0) * f2);
  const VField rhs = run(f1, s1) + run(f2, (-1.0) * f2);
  CHECK(sup(lhs - rhs) <= 1e-13 * sup(lhs));
}

TEST_CASE("mean is conserved on the torus without drift") {
  Grid g = make_grid(2, pi, 32, Topology::torus);
  auto p = problem(g, 0.2, {0, 0, 0}, [](const Point& x) { return 1.0 + std::sin(x[0] + 2 * x[1]) + std::cos(3 * x[0]); });
  const double m0 = integrate(p.initial[0]);
  for (const auto& u : solve_cauchy(p, {}).values) CHECK(std::abs(integrate(u[0]) - m0) <= 1e-12 * std::abs(m0));
}

TEST_CASE("CFL and shape guards") {
  Grid g = make_grid(1, pi, 64, Topology::torus);
  auto fast = problem(g, 0.1, {10.0, 0, 0}, [](const Point& x) { return std::sin(x[0]); });
  CHECK_THROWS_AS(solve_cauchy(fast, {BackendKind::reference_imex, 16}), Error);
  try {
    solve_cauchy(fast, {});
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::CFLViolation);
  }
  CHECK_NOTHROW(solve_cauchy(fast, {BackendKind::reference_imex, 256}));
  auto few = problem(g, 0.1, {0, 0, 0}, [](const Point&) { return 1.0; });
  CHECK_THROWS_AS(solve_cauchy(few, {BackendKind::reference_imex, 2}), Error);
  few.diffusion = 0.0;
  CHECK_THROWS_AS(solve_cauchy(few, {}), Error);
}

TEST_CASE("first-order upwind is selectable and more diffusive") {
  Grid g = make_grid(1, pi, 64, Topology::torus);
  auto p = problem(g, 0.01, {0.5, 0, 0}, [](const Point& x) { return std::sin(x[0]); });
  const double s1 = sup(solve_cauchy(p, {BackendKind::reference_imex, 256, Advection::upwind1}).final());
  const double s3 = sup(solve_cauchy(p, {BackendKind::reference_imex, 256, Advection::upwind3}).final());
  CHECK(s1 < s3);
  CHECK(s3 == doctest::Approx(std::exp(-0.01)).epsilon(2e-3));
}
