#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace gformula {

// Named contiguous range of a stacked parameter vector.
struct ParameterBlock {
  std::string name;
  Eigen::Index offset = 0;
  Eigen::Index size = 0;
};

// Unbiased estimating equations sum_i psi(O_i; theta) = 0 over independent
// units.
class EstimatingEquations {
 public:
  virtual ~EstimatingEquations() = default;

  virtual Eigen::Index dimension() const = 0;
  virtual std::size_t units() const = 0;
  virtual Eigen::VectorXd psi(std::size_t unit, const Eigen::VectorXd& theta) const = 0;

  // Mean over units of d psi / d theta'. Defaults to central differences.
  virtual Eigen::MatrixXd mean_jacobian(const Eigen::VectorXd& theta) const;

  // Defaults to one block per parameter.
  virtual std::vector<ParameterBlock> blocks() const;
};

Eigen::VectorXd mean_psi(const EstimatingEquations& equations, const Eigen::VectorXd& theta);

// Central differences of mean_psi with step relative_step * max(1, |theta_j|).
Eigen::MatrixXd finite_difference_jacobian(const EstimatingEquations& equations,
                                           const Eigen::VectorXd& theta,
                                           double relative_step = 1e-6);

struct SandwichResult {
  Eigen::MatrixXd U;      // -mean d psi / d theta'
  Eigen::MatrixXd W;      // mean psi psi'
  Eigen::MatrixXd sigma;  // U^{-1} W U^{-T} / m, the covariance of theta-hat
  Eigen::VectorXd se;
  double condition_number = 0.0;  // of U
};

// Empirical sandwich variance at theta_hat. Throws Error(singular_information)
// naming the block most aligned with the null direction when U is singular.
SandwichResult sandwich(const EstimatingEquations& equations, const Eigen::VectorXd& theta_hat);

inline constexpr double kWaldZ95 = 1.959963985;

struct WaldInterval {
  double lower = 0.0;
  double upper = 0.0;
};

inline WaldInterval wald_interval(double estimate, double se, double z = kWaldZ95) {
  return {estimate - z * se, estimate + z * se};
}

}  // namespace gformula
