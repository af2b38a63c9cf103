#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include <Eigen/Core>

#include "leray/error.hpp"

namespace leray {

enum class Topology { free_space, torus };

using Point = std::array<double, 3>;

/// Uniform grid on [-L, L)^dim. Nodes sit at -L + i*h, h = 2L/N.
struct Grid {
  int dim = 1;
  double extent = 1.0;
  int points = 8;
  Topology topology = Topology::torus;

  double spacing() const { return 2.0 * extent / points; }
  double cell_volume() const { return std::pow(spacing(), dim); }
  std::size_t size() const {
    std::size_t s = 1;
    for (int a = 0; a < dim; ++a) s *= static_cast<std::size_t>(points);
    return s;
  }
  double coord(int i) const { return -extent + i * spacing(); }
  std::size_t stride(int axis) const {
    std::size_t s = 1;
    for (int a = axis + 1; a < dim; ++a) s *= static_cast<std::size_t>(points);
    return s;
  }
  std::array<int, 3> unravel(std::size_t idx) const {
    std::array<int, 3> ijk{0, 0, 0};
    for (int a = dim - 1; a >= 0; --a) {
      ijk[a] = static_cast<int>(idx % points);
      idx /= points;
    }
    return ijk;
  }
  std::size_t ravel(const std::array<int, 3>& ijk) const {
    std::size_t idx = 0;
    for (int a = 0; a < dim; ++a) idx = idx * points + static_cast<std::size_t>(ijk[a]);
    return idx;
  }
  Point point(std::size_t idx) const {
    auto ijk = unravel(idx);
    Point p{0.0, 0.0, 0.0};
    for (int a = 0; a < dim; ++a) p[a] = coord(ijk[a]);
    return p;
  }
  bool operator==(const Grid&) const = default;
};

Grid make_grid(int dim, double extent, int points, Topology topology);

template <typename Scalar>
class ScalarField {
 public:
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  ScalarField() = default;
  explicit ScalarField(const Grid& g) : grid_(g), values_(Array::Zero(g.size())) {}
  ScalarField(const Grid& g, Array values) : grid_(g), values_(std::move(values)) {
    if (static_cast<std::size_t>(values_.size()) != g.size())
      throw Error(ErrorKind::ShapeMismatch, "value count differs from grid size");
  }

  const Grid& grid() const { return grid_; }
  Array& values() { return values_; }
  const Array& values() const { return values_; }
  std::size_t size() const { return static_cast<std::size_t>(values_.size()); }
  Scalar& operator[](std::size_t i) { return values_[static_cast<Eigen::Index>(i)]; }
  const Scalar& operator[](std::size_t i) const { return values_[static_cast<Eigen::Index>(i)]; }

  ScalarField& operator+=(const ScalarField& o) { values_ += o.values_; return *this; }
  ScalarField& operator-=(const ScalarField& o) { values_ -= o.values_; return *this; }
  ScalarField& operator*=(Scalar s) { values_ *= s; return *this; }

 private:
  Grid grid_;
  Array values_;
};

template <typename Scalar>
class VectorField {
 public:
  VectorField() = default;
  explicit VectorField(const Grid& g) : grid_(g), comps_(g.dim, ScalarField<Scalar>(g)) {}
  VectorField(const Grid& g, int ncomp) : grid_(g), comps_(ncomp, ScalarField<Scalar>(g)) {}
  VectorField(const Grid& g, std::vector<ScalarField<Scalar>> comps) : grid_(g), comps_(std::move(comps)) {
    for (const auto& c : comps_)
      if (!(c.grid() == grid_)) throw Error(ErrorKind::ShapeMismatch, "component grid differs");
  }

  const Grid& grid() const { return grid_; }
  int ncomp() const { return static_cast<int>(comps_.size()); }
  ScalarField<Scalar>& operator[](int i) { return comps_[static_cast<std::size_t>(i)]; }
  const ScalarField<Scalar>& operator[](int i) const { return comps_[static_cast<std::size_t>(i)]; }

  VectorField& operator+=(const VectorField& o) {
    for (int i = 0; i < ncomp(); ++i) comps_[i] += o[i];
    return *this;
  }
  VectorField& operator-=(const VectorField& o) {
    for (int i = 0; i < ncomp(); ++i) comps_[i] -= o[i];
    return *this;
  }
  VectorField& operator*=(Scalar s) {
    for (auto& c : comps_) c *= s;
    return *this;
  }

 private:
  Grid grid_;
  std::vector<ScalarField<Scalar>> comps_;
};

template <typename S>
ScalarField<S> operator+(ScalarField<S> a, const ScalarField<S>& b) { return a += b; }
template <typename S>
ScalarField<S> operator-(ScalarField<S> a, const ScalarField<S>& b) { return a -= b; }
template <typename S>
ScalarField<S> operator*(S s, ScalarField<S> a) { return a *= s; }
template <typename S>
VectorField<S> operator+(VectorField<S> a, const VectorField<S>& b) { return a += b; }
template <typename S>
VectorField<S> operator-(VectorField<S> a, const VectorField<S>& b) { return a -= b; }
template <typename S>
VectorField<S> operator*(S s, VectorField<S> a) { return a *= s; }

using Field = ScalarField<double>;
using VField = VectorField<double>;

Field sample(const Grid& g, const std::function<double(const Point&)>& f);
VField sample(const Grid& g, int ncomp, const std::function<double(int, const Point&)>& f);

/// Central difference along one axis; periodic on the torus, one-sided
/// second order at the edges of a truncated box.
Field derivative(const Field& f, int axis);
Field second_derivative(const Field& f, int a, int b);
Field laplacian(const Field& f);
VField gradient(const Field& f);
Field divergence(const VField& v);

/// sum_j a_j * d_j f
Field directional(const VField& a, const Field& f);

double integrate(const Field& f);
double sup(const Field& f);
double sup(const VField& v);

struct NormReport {
  double sup0 = 0.0;
  double sup01 = 0.0;
  double sup12 = 0.0;
  double l2 = 0.0;
  double h1 = 0.0;
  double h2 = 0.0;
  double integral_magnitude = 0.0;
};

/// Spatial norms, summed over components.
NormReport norms(const VField& v);
NormReport norms(const Field& f);

/// integral of sum_{j,k} |v_{k,j} v_{j,k}|
double integral_magnitude(const VField& v);

struct DecayResult {
  bool passes = true;
  double worst = 0.0;
};

/// Checks that |d^alpha v| (1+|x|)^k, |alpha| <= 2, does not grow towards
/// the edge of the truncated box.
DecayResult decay_check(const VField& v, int k);

void require_finite(const Field& f, const char* what);
void require_finite(const VField& v, const char* what);

}  // namespace leray
