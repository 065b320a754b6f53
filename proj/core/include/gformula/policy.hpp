#pragma once

#include <optional>
#include <span>

#include <Eigen/Dense>

#include "gformula/link.hpp"
#include "gformula/types.hpp"

namespace gformula {

inline constexpr double kPolicyResidualTolerance = 1e-10;

// Counterfactual treatment policy: clusters are treated with probability
// g^{-1}(gamma0 + rho1' L), gamma0 chosen so the mean propensity is alpha.
struct PolicySpec {
  double alpha = 0.5;
  double gamma0 = 0.0;
  std::optional<double> gamma0_strata2;
  LinkFunction link;
  Eigen::VectorXd slopes;  // treatment slopes gamma0 was solved against
  double residual = 0.0;
  bool solved = false;
};

struct InterceptSolution {
  double gamma0 = 0.0;
  double residual = 0.0;  // weighted mean propensity minus alpha
  int iterations = 0;
};

// Weighted mean of g^{-1}(gamma0 + offset_a); empty weights mean 1 each.
double mean_propensity(double gamma0, std::span<const double> offsets,
                       std::span<const double> weights, const LinkFunction& link);

// Root of mean_propensity(gamma0) = alpha by bracketed Newton/bisection.
// The bracket starts at g(alpha) - mean offset +/- 20 and expands up to
// |gamma0| = 50. Throws Error(domain) for alpha outside (0,1) and
// Error(unsolvable_policy) when no root is bracketed or the residual
// exceeds kPolicyResidualTolerance.
InterceptSolution solve_intercept(double alpha, std::span<const double> offsets,
                                  std::span<const double> weights, const LinkFunction& link);

// covariates: one row per cluster.
PolicySpec solve_gamma0(double alpha, const Eigen::VectorXd& rho_slopes,
                        const Eigen::MatrixXd& covariates, const LinkFunction& link,
                        std::span<const double> weights = {});
PolicySpec solve_gamma0(double alpha, const Eigen::VectorXd& rho_slopes,
                        std::span<const ClusterRecord> data, const LinkFunction& link,
                        std::span<const double> weights = {});

// rho1' L_i for each cluster; covariates must match the slope dimension.
std::vector<double> treatment_offsets(const Eigen::VectorXd& rho_slopes,
                                      std::span<const ClusterRecord> data);

}  // namespace gformula
