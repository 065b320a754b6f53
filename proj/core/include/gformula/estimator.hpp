#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "gformula/execution.hpp"
#include "gformula/glm.hpp"
#include "gformula/mle.hpp"
#include "gformula/sandwich.hpp"
#include "gformula/stack.hpp"
#include "gformula/types.hpp"

namespace gformula {

struct EstimationOptions {
  OutcomeDefinition outcome_def = OutcomeDefinition::overall;
  LinkFunction treatment_link;
  LinkFunction outcome_link;
  bool include_s = true;  // false drops S from the outcome model (g-null check)
  bool strata = false;    // two-strata analysis; needs s2/n2 on every record
  std::vector<double> alphas;
  std::vector<std::pair<double, double>> contrasts;  // (alpha, alpha')
  double z = kWaldZ95;
  NewtonOptions newton;
  ExecutionOptions exec;
};

struct PolicyEstimate {
  double alpha = 0.0;
  double gamma0 = 0.0;                 // stratum-1 intercept in strata mode
  std::optional<double> gamma0_strata2;
  double residual = 0.0;
  double mu = 0.0;
  double se = 0.0;
  double ci_lower = 0.0;
  double ci_upper = 0.0;
};

struct ContrastEstimate {
  double alpha = 0.0;
  double alpha_prime = 0.0;
  double delta = 0.0;
  double se = 0.0;
  double ci_lower = 0.0;
  double ci_upper = 0.0;
};

struct EstimateReport {
  OutcomeDefinition outcome_def = OutcomeDefinition::overall;
  bool strata = false;
  std::vector<PolicyEstimate> policies;
  std::vector<ContrastEstimate> contrasts;

  TreatmentModelFit treatment;                  // stratum-1 model in strata mode
  std::optional<TreatmentModelFit> stratum2_treatment;
  OutcomeModelFit outcome;
  ThetaStack theta;
  SandwichResult sandwich;

  const PolicyEstimate& policy(double alpha) const;
  const ContrastEstimate& contrast(double alpha, double alpha_prime) const;
};

// Fits both models, solves every policy in alphas (and those named by the
// contrasts), standardizes, and attaches sandwich standard errors and Wald
// intervals from the jointly stacked estimating equations. Throws
// Error(convergence) when a fit does not converge.
EstimateReport estimate_policies(std::span<const ClusterRecord> data,
                                 const EstimationOptions& options);

}  // namespace gformula
