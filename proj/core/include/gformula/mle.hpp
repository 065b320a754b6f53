#pragma once

#include <span>

#include <Eigen/Dense>

#include "gformula/glm.hpp"
#include "gformula/link.hpp"
#include "gformula/types.hpp"

namespace gformula {

// Fitted model of treated counts: successes s*n out of n with probability
// g^{-1}(rho0 + rho1' L). The stratum-1 model of the two-strata analysis
// appends the second-stratum proportion S2 as a final regressor.
struct TreatmentModelFit {
  Eigen::VectorXd rho;
  LinkFunction link;
  bool converged = false;
  int iterations = 0;
  double loglik = 0.0;
  double max_abs_score = 0.0;

  double intercept() const { return rho[0]; }
  Eigen::VectorXd slopes() const { return rho.tail(rho.size() - 1); }
};

// Which proportion terms enter the outcome mean model besides the covariates.
struct OutcomeTerms {
  bool s = true;
  bool s2 = false;
};

// Fitted outcome mean g^{-1}(beta0 + beta1' L + beta2 S [+ beta3 S2]).
struct OutcomeModelFit {
  Eigen::VectorXd beta;  // intercept, covariates, [S], [S2]
  LinkFunction link;
  OutcomeDefinition outcome_def = OutcomeDefinition::overall;
  OutcomeTerms terms;
  bool converged = false;
  int iterations = 0;
  double loglik = 0.0;
  double max_abs_score = 0.0;

  Eigen::Index covariate_dimension() const;
  double intercept() const { return beta[0]; }
  Eigen::VectorXd covariate_coefs() const { return beta.segment(1, covariate_dimension()); }
  double s_coef() const;
  double s2_coef() const;
  // beta0 + beta1' L.
  double base_eta(std::span<const double> covariates) const;
};

// Design builders; also used by the estimating-equation stacks.
BinomialRegression treatment_regression(std::span<const ClusterRecord> data, LinkFunction link);
BinomialRegression stratum1_treatment_regression(std::span<const ClusterRecord> data,
                                                 LinkFunction link);
BinomialRegression stratum2_treatment_regression(std::span<const ClusterRecord> data,
                                                 LinkFunction link);
BinomialRegression outcome_regression(std::span<const ClusterRecord> data, OutcomeTerms terms,
                                      LinkFunction link);

// Maximum-likelihood fits. Rank-deficient designs throw Error(singular_design);
// separation is reported through converged = false.
TreatmentModelFit fit_treatment_model(std::span<const ClusterRecord> data,
                                      LinkFunction link = LinkFunction{},
                                      const NewtonOptions& options = {});

// S1 | L, S2 (slopes end with the S2 coefficient) and S2 | L.
TreatmentModelFit fit_stratum1_treatment_model(std::span<const ClusterRecord> data,
                                               LinkFunction link = LinkFunction{},
                                               const NewtonOptions& options = {});
TreatmentModelFit fit_stratum2_treatment_model(std::span<const ClusterRecord> data,
                                               LinkFunction link = LinkFunction{},
                                               const NewtonOptions& options = {});

// Clusters with a zero outcome denominator are left out of the likelihood.
// Throws Error(data) when a record's denominator disagrees with outcome_def
// and Error(empty_likelihood) when no cluster has a positive denominator.
OutcomeModelFit fit_outcome_model(std::span<const ClusterRecord> data, OutcomeDefinition outcome_def,
                                  LinkFunction link = LinkFunction{}, OutcomeTerms terms = {},
                                  const NewtonOptions& options = {});

}  // namespace gformula
