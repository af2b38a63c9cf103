#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "leray/boundary.hpp"
#include "leray/quadrature.hpp"

using namespace leray;
using std::numbers::pi;

namespace {

// Radial heat equation on the unit disk with Robin data at r = R, by
// backward Euler on cell centres; the oracle for the disk step.
std::vector<double> radial_reference(double R, double D, double alpha, const std::function<double(double)>& u0,
                                     double T, int cells, int steps, const std::vector<double>& radii) {
  const double h = R / cells, dt = T / steps;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(cells, cells);
  for (int i = 0; i < cells; ++i) {
    const double r = (i + 0.5) * h, rm = i * h, rp = (i + 1) * h;
    const double c = D * dt / (r * h * h);
    A(i, i) = 1.0;
    if (i > 0) {
      A(i, i) += c * rm;
      A(i, i - 1) -= c * rm;
    }
    if (i < cells - 1) {
      A(i, i) += c * rp;
      A(i, i + 1) -= c * rp;
    } else {
      // Ghost cell from (u_g - u_i) / h + alpha (u_g + u_i) / 2 = 0.
      const double ghost = (1.0 / h - alpha / 2.0) / (1.0 / h + alpha / 2.0);
      A(i, i) += c * rp * (1.0 - ghost);
    }
  }
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  Eigen::VectorXd u(cells);
  for (int i = 0; i < cells; ++i) u[i] = u0((i + 0.5) * h);
  for (int s = 0; s < steps; ++s) u = lu.solve(u);
  std::vector<double> out;
  for (double r : radii) {
    const double q = std::clamp(r / h - 0.5, 0.0, cells - 1.0);
    const int i = std::min(static_cast<int>(q), cells - 2);
    out.push_back(u[i] + (q - i) * (u[i + 1] - u[i]));
  }
  return out;
}

}  // namespace

TEST_CASE("domains") {
  auto iv = make_interval(0.0, 2.0);
  CHECK(iv.size() == 2);
  CHECK(iv.normals[0][0] == -1.0);
  CHECK(iv.reflect({-0.5, 0, 0})[0] == doctest::Approx(0.5));
  CHECK(iv.reflect({2.5, 0, 0})[0] == doctest::Approx(1.5));
  CHECK(iv.reflect({4.5, 0, 0})[0] == doctest::Approx(0.5));
  auto dk = make_disk(2.0, 16);
  for (std::size_t k = 0; k < dk.size(); ++k) {
    CHECK(std::hypot(dk.normals[k][0], dk.normals[k][1]) == doctest::Approx(1.0));
    CHECK(std::hypot(dk.nodes[k][0], dk.nodes[k][1]) == doctest::Approx(2.0));
  }
  CHECK(dk.panel() == doctest::Approx(2.0 * pi * 2.0 / 16));
  const Point r = dk.reflect({4.0, 0, 0});
  CHECK(r[0] == doctest::Approx(1.0));
  CHECK_THROWS_AS(make_interval(1.0, 1.0), Error);
  CHECK_THROWS_AS(make_disk(1.0, 4), Error);
}

TEST_CASE("k_gamma") {
  HeatKernel k{1, 0.5, {0, 0, 0}};
  const Point x{0.0, 0, 0}, nu{-1.0, 0, 0}, y{0.8, 0, 0};
  const double tau = 0.7, s = 0.2, u = tau - s;
  // d_nu N = -d_x N = (x - y) / (2 D u) N, closed form.
  const double n = std::exp(-0.64 / (4.0 * 0.5 * u)) / std::sqrt(4.0 * pi * 0.5 * u);
  const double dn = (x[0] - y[0]) / (2.0 * 0.5 * u) * n;
  CHECK(std::abs(k_gamma(k, constant_robin(0.0, 0.0), tau, x, nu, s, y) - dn) <= 1e-8);
  const double e = 1e-6;
  const double fd = -(k.value(u, {e, 0, 0}, y) - k.value(u, {-e, 0, 0}, y)) / (2.0 * e);
  CHECK(std::abs(fd - dn) <= 1e-8);
  // Linear in alpha.
  const double k1 = k_gamma(k, constant_robin(1.0, 0.0), tau, x, nu, s, y);
  const double k5 = k_gamma(k, constant_robin(5.0, 0.0), tau, x, nu, s, y);
  CHECK(k5 - dn == doctest::Approx(5.0 * (k1 - dn)));
  // Gaussian decay as s -> tau for x != y.
  CHECK(k_gamma(k, constant_robin(1.0, 0.0), tau, x, nu, tau - 1e-4, y) <= 1e-300);
  CHECK_THROWS_AS(k.value(0.0, x, y), Error);
}

TEST_CASE("zero data gives zero density and zero solution") {
  BoundaryProblem p(make_interval(0.0, 1.0), HeatKernel{1, 0.1, {0, 0, 0}}, constant_robin(1.0, 0.0), 1.0, {16, 8, 1e-6});
  auto d = solve_density(p, Eigen::MatrixXd::Zero(17, 2));
  CHECK(d.phi.cwiseAbs().maxCoeff() == 0.0);
  auto zero = [](const Point&) { return 0.0; };
  auto r = boundary_step(p, zero, nullptr, {{0.3, 0, 0}, {1.0, 0, 0}});
  for (double v : r.values) CHECK(v == 0.0);
}

TEST_CASE("constant data stays constant under insulated ends") {
  auto one = [](const Point&) { return 2.5; };
  BoundaryProblem p(make_interval(-1.0, 2.0), HeatKernel{1, 0.2, {0, 0, 0}}, constant_robin(0.0, 0.0), 1.0, {16, 8, 1e-6});
  auto r = boundary_step(p, one, nullptr, {{-1.0, 0, 0}, {0.1, 0, 0}, {2.0, 0, 0}});
  for (double v : r.values) CHECK(v == doctest::Approx(2.5).epsilon(1e-10));
  CHECK(r.density.residual <= 1e-6);

  BoundaryProblem q(make_disk(1.0, 16), HeatKernel{2, 0.1, {0, 0, 0}}, constant_robin(0.0, 0.0), 0.5, {8, 8, 1e-6});
  auto rd = boundary_step(q, one, nullptr, {{0.0, 0.0, 0}, {0.5, 0.3, 0}});
  for (double v : rd.values) CHECK(v == doctest::Approx(2.5).epsilon(1e-9));
  CHECK(rd.density.residual <= 1e-6);
}

TEST_CASE("Robin benchmark against finite differences") {
  auto rep = robin_benchmark();
  MESSAGE("Robin Linf " << rep.linf << ", residual " << rep.residual << ", ratio " << rep.max_ratio_past_1);
  CHECK(rep.linf <= 1e-3);
  CHECK(rep.residual <= 1e-6);
  CHECK(rep.max_ratio_past_1 < 0.9);
  CHECK(rep.mass_drift <= 1e-4);
  CHECK(rep.terms.size() >= 3);
}

TEST_CASE("finite-difference reference converges") {
  const RobinData robin = constant_robin(1.0, 0.0);
  auto u0 = [](const Point& x) { return std::sin(x[0]); };
  auto coarse = robin_fd_reference(0.0, pi, 0.1, 0.0, robin, u0, 1.0, 64, 200);
  auto fine = robin_fd_reference(0.0, pi, 0.1, 0.0, robin, u0, 1.0, 128, 400);
  auto finer = robin_fd_reference(0.0, pi, 0.1, 0.0, robin, u0, 1.0, 256, 800);
  double e1 = 0.0, e2 = 0.0;
  for (int i = 0; i <= 64; ++i) {
    e1 = std::max(e1, std::abs(coarse[i] - finer[4 * i]));
    e2 = std::max(e2, std::abs(fine[2 * i] - finer[4 * i]));
  }
  CHECK(e1 / e2 > 3.0);
  // Constant data, insulated: exact.
  auto c = robin_fd_reference(0.0, 1.0, 0.3, 0.0, constant_robin(0.0, 0.0), [](const Point&) { return 1.0; }, 1.0, 16, 16);
  for (double v : c) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("disk Robin step against the radial reference") {
  const double D = 0.1, alpha = 1.0, T = 0.5;
  auto u0r = [](double r) { return 1.0 - 0.5 * r * r; };
  BoundaryProblem p(make_disk(1.0, 32), HeatKernel{2, D, {0, 0, 0}}, constant_robin(alpha, 0.0), T, {16, 12, 1e-6});
  std::vector<double> radii{0.0, 0.3, 0.6, 0.9};
  std::vector<Point> pts;
  for (double r : radii) pts.push_back({r * std::cos(0.3), r * std::sin(0.3), 0});
  auto step = boundary_step(p, [&](const Point& x) { return u0r(std::hypot(x[0], x[1])); }, nullptr, pts);
  auto ref = radial_reference(1.0, D, alpha, u0r, T, 400, 2000, radii);
  double err = 0.0;
  for (std::size_t i = 0; i < radii.size(); ++i) err = std::max(err, std::abs(step.values[i] - ref[i]));
  MESSAGE("disk error " << err << ", residual " << step.density.residual);
  CHECK(err <= 5e-3);
  CHECK(step.density.residual <= 1e-6);
}

TEST_CASE("diverging series is reported") {
  BoundaryProblem p(make_interval(0.0, 1.0), HeatKernel{1, 0.1, {0, 0, 0}}, constant_robin(60.0, 0.0), 1.0, {16, 8, 1e-6});
  auto f = p.data_term([](const Point& x) { return std::cos(x[0]); }, nullptr);
  CHECK_THROWS_AS(solve_density(p, f), Error);
}

TEST_CASE("source term: insulated mass grows at the source rate") {
  BoundaryProblem p(make_interval(0.0, 2.0), HeatKernel{1, 0.2, {0, 0, 0}}, constant_robin(0.0, 0.0), 1.0, {32, 12, 1e-6});
  auto u0 = [](const Point& x) { return x[0]; };
  auto src = [](double, const Point& x) { return 0.3 + 0.1 * x[0]; };
  const QuadratureRule gl = gauss_legendre(32, 0.0, 2.0);
  std::vector<Point> nodes;
  for (double y : gl.nodes) nodes.push_back({y, 0, 0});
  auto r = boundary_step(p, u0, src, nodes);
  double m = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) m += gl.weights[i] * r.values[i];
  // 2 + (0.6 + 0.2) * 1
  CHECK(m == doctest::Approx(2.8).epsilon(1e-4));
}
