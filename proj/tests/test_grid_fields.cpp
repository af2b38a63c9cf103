#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "leray/grid_fields.hpp"

using namespace leray;
using std::numbers::pi;

namespace {

VField taylor_green(const Grid& g) {
  return sample(g, 2, [](int c, const Point& p) {
    return c == 0 ? std::sin(p[0]) * std::cos(p[1]) : -std::cos(p[0]) * std::sin(p[1]);
  });
}

}  // namespace

TEST_CASE("make_grid spacing and validation") {
  Grid g = make_grid(1, pi, 16, Topology::torus);
  CHECK(g.spacing() == doctest::Approx(2.0 * pi / 16.0));
  Grid g3 = make_grid(3, 8.0, 32, Topology::free_space);
  CHECK(g3.size() == 32u * 32u * 32u);
  CHECK_THROWS_AS(make_grid(4, 1.0, 16, Topology::torus), Error);
  CHECK_THROWS_AS(make_grid(2, 1.0, 4, Topology::torus), Error);
  CHECK_THROWS_AS(make_grid(2, 1.0, 17, Topology::torus), Error);
  CHECK_THROWS_AS(make_grid(2, -1.0, 16, Topology::torus), Error);
}

TEST_CASE("ravel and unravel are inverse") {
  Grid g = make_grid(3, 1.0, 8, Topology::torus);
  for (std::size_t i = 0; i < g.size(); i += 37) CHECK(g.ravel(g.unravel(i)) == i);
}

TEST_CASE("divergence of zero, linear and Taylor-Green fields") {
  Grid g = make_grid(2, pi, 32, Topology::torus);
  CHECK(sup(divergence(VField(g))) == 0.0);

  Grid f = make_grid(3, 2.0, 16, Topology::free_space);
  VField lin = sample(f, 3, [](int c, const Point& p) { return c == 0 ? p[0] : 0.0; });
  CHECK(sup(divergence(lin)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(divergence(lin).values().minCoeff() == doctest::Approx(1.0).epsilon(1e-12));

  // Taylor-Green is divergence free and the stencil preserves it exactly.
  for (int n : {32, 64}) {
    Grid t = make_grid(2, pi, n, Topology::torus);
    CHECK(sup(divergence(taylor_green(t))) <= 1e-12);
  }
}

TEST_CASE("divergence error of a non-symmetric field is second order") {
  auto err = [](int n) {
    Grid g = make_grid(2, pi, n, Topology::torus);
    VField v = sample(g, 2, [](int c, const Point& p) {
      return c == 0 ? std::sin(p[0] + 0.3) * std::cos(2.0 * p[1]) : std::cos(p[0]) * std::sin(p[1] - 0.1);
    });
    Field exact = sample(g, [](const Point& p) {
      return std::cos(p[0] + 0.3) * std::cos(2.0 * p[1]) + std::cos(p[0]) * std::cos(p[1] - 0.1);
    });
    return sup(divergence(v) - exact);
  };
  const double order = std::log2(err(32) / err(64));
  CHECK(order > 1.9);
}

TEST_CASE("divergence is linear") {
  Grid g = make_grid(2, pi, 32, Topology::torus);
  VField a = taylor_green(g);
  VField b = sample(g, 2, [](int c, const Point& p) { return c == 0 ? std::sin(2 * p[1]) : std::cos(p[0] + p[1]); });
  Field lhs = divergence(2.0 * a + (-3.0) * b);
  Field rhs = 2.0 * divergence(a) + (-3.0) * divergence(b);
  CHECK(sup(lhs - rhs) <= 1e-13);
}

TEST_CASE("norms of zero and sine fields") {
  Grid g = make_grid(1, pi, 256, Topology::torus);
  NormReport z = norms(Field(g));
  CHECK(z.sup0 == 0.0);
  CHECK(z.h2 == 0.0);
  CHECK(z.integral_magnitude == 0.0);

  NormReport s = norms(sample(g, [](const Point& p) { return std::sin(p[0]); }));
  CHECK(s.l2 == doctest::Approx(std::sqrt(pi)).epsilon(1e-6));
  CHECK(s.sup0 <= s.sup01);
  CHECK(s.sup01 <= s.sup12);
}

TEST_CASE("norms reject non-finite samples") {
  Grid g = make_grid(1, 1.0, 16, Topology::torus);
  Field f(g);
  f[3] = std::nan("");
  CHECK_THROWS_AS(norms(f), Error);
}

TEST_CASE("integral magnitude is bounded by the half sum of squares") {
  Grid g = make_grid(2, pi, 64, Topology::torus);
  VField v = taylor_green(g);
  double bound = 0.0;
  for (int k = 0; k < 2; ++k)
    for (int j = 0; j < 2; ++j) {
      Field a = derivative(v[k], j), b = derivative(v[j], k);
      bound += 0.5 * (a.values().square() + b.values().square()).sum() * g.cell_volume();
    }
  const double im = integral_magnitude(v);
  CHECK(im > 0.0);
  CHECK(im <= bound + 1e-12);
}

TEST_CASE("l2 quadrature converges at second order or better") {
  auto err = [](int n) {
    Grid g = make_grid(2, 6.0, n, Topology::free_space);
    Field f = sample(g, [](const Point& p) { return std::exp(-(p[0] * p[0] + p[1] * p[1]) / 2.0) * (1.0 + 0.2 * p[0]); });
    // int exp(-r^2) (1 + 0.2x)^2 = pi (1 + 0.04 * 0.5)
    const double exact = pi * (1.0 + 0.02);
    return std::abs(norms(f).l2 * norms(f).l2 - exact);
  };
  CHECK(err(32) < 1e-6);
  CHECK(err(64) <= err(32) * 0.25 + 1e-12);
}

TEST_CASE("decay_check") {
  Grid g = make_grid(2, 8.0, 32, Topology::free_space);
  VField bump = sample(g, 2, [](int, const Point& p) { return std::exp(-(p[0] * p[0] + p[1] * p[1])); });
  CHECK(decay_check(bump, 5).passes);
  VField c = sample(g, 2, [](int, const Point&) { return 1.0; });
  CHECK_FALSE(decay_check(c, 1).passes);
  auto z = decay_check(VField(g), 3);
  CHECK(z.passes);
  CHECK(z.worst == 0.0);
  CHECK_THROWS_AS(decay_check(VField(make_grid(2, 1.0, 16, Topology::torus)), 2), Error);
}
