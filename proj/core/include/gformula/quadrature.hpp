#pragma once

#include <vector>

namespace gformula {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Gauss-Hermite rule for integral exp(-x^2) f(x) dx (Golub-Welsch).
QuadratureRule gauss_hermite(int order);

// Rule for E f(X) with X ~ Normal(mean, sd^2); weights sum to one. sd may be
// zero, in which case every node sits at the mean.
QuadratureRule normal_quadrature(int order, double mean = 0.0, double sd = 1.0);

}  // namespace gformula
