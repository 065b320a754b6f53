#include "gformula/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Eigenvalues>

#include "gformula/error.hpp"

namespace gformula {
namespace {

// Probabilists' Hermite rule: nodes and weights for E f(Z), Z ~ N(0,1).
QuadratureRule standard_normal_rule(int order) {
  if (order < 1) throw Error(ErrorKind::domain, "quadrature order must be positive");
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(order, order);
  for (int k = 1; k < order; ++k) {
    const double b = std::sqrt(static_cast<double>(k));
    jacobi(k, k - 1) = b;
    jacobi(k - 1, k) = b;
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  if (eig.info() != Eigen::Success)
    throw Error(ErrorKind::convergence, "Gauss-Hermite eigen-decomposition failed at order " +
                                            std::to_string(order));
  QuadratureRule rule;
  rule.nodes.resize(static_cast<std::size_t>(order));
  rule.weights.resize(static_cast<std::size_t>(order));
  double total = 0.0;
  for (int i = 0; i < order; ++i) {
    const double v0 = eig.eigenvectors()(0, i);
    rule.nodes[static_cast<std::size_t>(i)] = eig.eigenvalues()[i];
    rule.weights[static_cast<std::size_t>(i)] = v0 * v0;
    total += v0 * v0;
  }
  for (double& w : rule.weights) w /= total;
  return rule;
}

}  // namespace

QuadratureRule gauss_hermite(int order) {
  QuadratureRule rule = standard_normal_rule(order);
  for (double& x : rule.nodes) x /= std::numbers::sqrt2;
  for (double& w : rule.weights) w *= std::sqrt(std::numbers::pi);
  return rule;
}

QuadratureRule normal_quadrature(int order, double mean, double sd) {
  if (!(sd >= 0.0)) throw Error(ErrorKind::domain, "normal quadrature: sd must be nonnegative");
  QuadratureRule rule = standard_normal_rule(order);
  for (double& x : rule.nodes) x = mean + sd * x;
  return rule;
}

}  // namespace gformula
