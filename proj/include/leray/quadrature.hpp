#pragma once

#include <vector>

namespace leray {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Gauss-Legendre on [a, b], from the Golub-Welsch eigenproblem.
QuadratureRule gauss_legendre(int n, double a = -1.0, double b = 1.0);

/// Gauss-Hermite for the weight exp(-x^2).
QuadratureRule gauss_hermite(int n);

}  // namespace leray
