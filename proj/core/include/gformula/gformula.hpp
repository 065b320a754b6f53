#pragma once

#include <span>

#include <Eigen/Dense>

#include "gformula/execution.hpp"
#include "gformula/mle.hpp"
#include "gformula/policy.hpp"
#include "gformula/types.hpp"

namespace gformula {

// Standardized outcome of one cluster of size n whose members are treated
// with probability treat_prob:
//   sum_{k=0..n} g^{-1}(base_eta + s_coef * k/n) * Binomial(n, k, treat_prob).
double cluster_policy_mean(int n, double treat_prob, double base_eta, double s_coef,
                           const LinkFunction& outcome_link);

// d/d treat_prob of cluster_policy_mean, via the forward-difference identity
// n * sum_k [f(k+1) - f(k)] Binomial(n-1, k, p).
double cluster_policy_mean_derivative(int n, double treat_prob, double base_eta, double s_coef,
                                      const LinkFunction& outcome_link);

// g-formula estimate of the policy mean: the average over clusters of
// cluster_policy_mean at the policy's propensity. Throws Error(state) when the
// policy is unsolved, was solved against different slopes, or the outcome
// fit has not converged or includes an S2 term.
double estimate_mu(const PolicySpec& policy, const OutcomeModelFit& outcome_fit,
                   const Eigen::VectorXd& treatment_slopes, std::span<const ClusterRecord> data,
                   const ExecutionOptions& exec = {});

// mu(alpha) - mu(alpha'); both policies must come from the same treatment fit.
double estimate_delta(const PolicySpec& policy, const PolicySpec& policy_prime,
                      const OutcomeModelFit& outcome_fit, const Eigen::VectorXd& treatment_slopes,
                      std::span<const ClusterRecord> data, const ExecutionOptions& exec = {});

}  // namespace gformula
