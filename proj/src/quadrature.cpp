#include "leray/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "leray/error.hpp"

namespace leray {
namespace {

// Jacobi matrix with zero diagonal and the given off-diagonal; nodes are the
// eigenvalues, weights mu0 times the squared first eigenvector entries.
QuadratureRule golub_welsch(int n, double mu0, double (*beta)(int)) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    J(k, k - 1) = beta(k);
    J(k - 1, k) = beta(k);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  QuadratureRule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    r.nodes[i] = es.eigenvalues()(i);
    const double v = es.eigenvectors()(0, i);
    r.weights[i] = mu0 * v * v;
  }
  // Symmetrize to remove eigen-solver asymmetry at roundoff level.
  for (int i = 0; i < n / 2; ++i) {
    const double x = 0.5 * (r.nodes[n - 1 - i] - r.nodes[i]);
    const double w = 0.5 * (r.weights[n - 1 - i] + r.weights[i]);
    r.nodes[i] = -x;
    r.nodes[n - 1 - i] = x;
    r.weights[i] = r.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) r.nodes[n / 2] = 0.0;
  return r;
}

double legendre_beta(int k) { return k / std::sqrt(4.0 * k * k - 1.0); }
double hermite_beta(int k) { return std::sqrt(0.5 * k); }

std::mutex cache_mutex;

}  // namespace

QuadratureRule gauss_legendre(int n, double a, double b) {
  if (n < 1) throw Error(ErrorKind::ValidationError, "quadrature needs at least one node");
  static std::map<int, QuadratureRule> cache;
  QuadratureRule base;
  {
    std::lock_guard<std::mutex> lock(cache_mutex);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, golub_welsch(n, 2.0, legendre_beta)).first;
    base = it->second;
  }
  const double c = 0.5 * (b + a), h = 0.5 * (b - a);
  for (int i = 0; i < n; ++i) {
    base.nodes[i] = c + h * base.nodes[i];
    base.weights[i] *= h;
  }
  return base;
}

QuadratureRule gauss_hermite(int n) {
  if (n < 1) throw Error(ErrorKind::ValidationError, "quadrature needs at least one node");
  static std::map<int, QuadratureRule> cache;
  std::lock_guard<std::mutex> lock(cache_mutex);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, golub_welsch(n, std::sqrt(std::numbers::pi), hermite_beta)).first;
  return it->second;
}

}  // namespace leray
