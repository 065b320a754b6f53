#include "gformula/gformula.hpp"

#include <vector>

#include "gformula/binomial.hpp"
#include "gformula/error.hpp"

namespace gformula {
namespace {

void check_ready(const PolicySpec& policy, const OutcomeModelFit& outcome_fit,
                 const Eigen::VectorXd& treatment_slopes) {
  if (!policy.solved) throw Error(ErrorKind::state, "policy has not been solved");
  if (policy.slopes.size() != treatment_slopes.size() || policy.slopes != treatment_slopes)
    throw Error(ErrorKind::state, "policy was solved against a different treatment fit");
  if (!outcome_fit.converged) throw Error(ErrorKind::state, "outcome model has not converged");
  if (outcome_fit.terms.s2)
    throw Error(ErrorKind::state, "outcome model includes S2; use the two-strata estimator");
}

}  // namespace

double cluster_policy_mean(int n, double treat_prob, double base_eta, double s_coef,
                           const LinkFunction& outcome_link) {
  std::vector<double> pmf(static_cast<std::size_t>(n) + 1);
  binomial_pmf_row(n, treat_prob, pmf);
  CompensatedSum acc;
  const double inv_n = 1.0 / n;
  for (int k = 0; k <= n; ++k)
    acc.add(outcome_link.inverse(base_eta + s_coef * k * inv_n) * pmf[static_cast<std::size_t>(k)]);
  return acc.value();
}

double cluster_policy_mean_derivative(int n, double treat_prob, double base_eta, double s_coef,
                                      const LinkFunction& outcome_link) {
  std::vector<double> pmf(static_cast<std::size_t>(n));
  binomial_pmf_row(n - 1, treat_prob, pmf);
  CompensatedSum acc;
  const double inv_n = 1.0 / n;
  double previous = outcome_link.inverse(base_eta);
  for (int k = 0; k < n; ++k) {
    const double next = outcome_link.inverse(base_eta + s_coef * (k + 1) * inv_n);
    acc.add((next - previous) * pmf[static_cast<std::size_t>(k)]);
    previous = next;
  }
  return n * acc.value();
}

double estimate_mu(const PolicySpec& policy, const OutcomeModelFit& outcome_fit,
                   const Eigen::VectorXd& treatment_slopes, std::span<const ClusterRecord> data,
                   const ExecutionOptions& exec) {
  check_ready(policy, outcome_fit, treatment_slopes);
  if (data.empty()) throw Error(ErrorKind::data, "estimate_mu: no clusters");
  const std::vector<double> offsets = treatment_offsets(treatment_slopes, data);
  const double total = reduce_sum(data.size(), exec, [&](std::size_t i) {
    const auto& record = data[i];
    const double p = policy.link.inverse(policy.gamma0 + offsets[i]);
    return cluster_policy_mean(record.n, p, outcome_fit.base_eta(record.covariates),
                               outcome_fit.s_coef(), outcome_fit.link);
  });
  return total / static_cast<double>(data.size());
}

double estimate_delta(const PolicySpec& policy, const PolicySpec& policy_prime,
                      const OutcomeModelFit& outcome_fit, const Eigen::VectorXd& treatment_slopes,
                      std::span<const ClusterRecord> data, const ExecutionOptions& exec) {
  if (!(policy.link == policy_prime.link))
    throw Error(ErrorKind::state, "policies were solved with different links");
  if (policy.slopes.size() != policy_prime.slopes.size() || policy.slopes != policy_prime.slopes)
    throw Error(ErrorKind::state, "policies were solved against different treatment fits");
  return estimate_mu(policy, outcome_fit, treatment_slopes, data, exec) -
         estimate_mu(policy_prime, outcome_fit, treatment_slopes, data, exec);
}

}  // namespace gformula
