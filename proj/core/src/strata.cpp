#include "gformula/strata.hpp"

#include <vector>

#include "gformula/binomial.hpp"
#include "gformula/error.hpp"
#include "gformula/execution.hpp"
#include "gformula/policy.hpp"

namespace gformula {
namespace {

struct Window {
  std::size_t begin;
  std::size_t end;  // exclusive
};

// Smallest index window whose excluded tails each carry at most `tail` mass.
Window central_window(const std::vector<double>& pmf, double tail) {
  Window w{0, pmf.size()};
  double low = 0.0;
  while (w.begin + 1 < w.end && low + pmf[w.begin] <= tail) low += pmf[w.begin++];
  double high = 0.0;
  while (w.end - 1 > w.begin && high + pmf[w.end - 1] <= tail) high += pmf[--w.end];
  return w;
}

double covariate_dot(const Eigen::VectorXd& coef, Eigen::Index offset,
                     const std::vector<double>& covariates) {
  double eta = 0.0;
  for (std::size_t j = 0; j < covariates.size(); ++j)
    eta += coef[offset + static_cast<Eigen::Index>(j)] * covariates[j];
  return eta;
}

double stratum2_share(const ClusterRecord& record, int j) {
  return *record.n2 > 0 ? static_cast<double>(j) / *record.n2 : 0.0;
}

}  // namespace

StrataFits fit_strata_models(std::span<const ClusterRecord> data, OutcomeDefinition outcome_def,
                             LinkFunction link) {
  require_strata(data);
  StrataFits fits;
  fits.stratum1 = fit_stratum1_treatment_model(data, link);
  fits.stratum2 = fit_stratum2_treatment_model(data, link);
  fits.outcome = fit_outcome_model(data, outcome_def, link, OutcomeTerms{true, true});
  return fits;
}

StrataParameters strata_parameters(const StrataPolicy& policy, const StrataFits& fits) {
  StrataParameters p;
  p.gamma0_stratum1 = policy.gamma0_stratum1;
  p.slopes1 = fits.stratum1.slopes();
  p.gamma0_stratum2 = policy.gamma0_stratum2;
  p.slopes2 = fits.stratum2.slopes();
  p.beta = fits.outcome.beta;
  p.terms = fits.outcome.terms;
  p.treatment_link = fits.stratum1.link;
  p.outcome_link = fits.outcome.link;
  return p;
}

std::vector<double> stratum2_pmf(const ClusterRecord& record, const StrataParameters& params) {
  const double eta2 = params.gamma0_stratum2 + covariate_dot(params.slopes2, 0, record.covariates);
  return binomial_pmf_row(*record.n2, params.treatment_link.inverse(eta2));
}

double cluster_stratum1_propensity(const ClusterRecord& record, const StrataParameters& params) {
  const std::vector<double> pmf2 = stratum2_pmf(record, params);
  const double base = params.gamma0_stratum1 + covariate_dot(params.slopes1, 0, record.covariates);
  const double s2_coef = params.slopes1[params.slopes1.size() - 1];
  CompensatedSum acc;
  for (int j = 0; j <= *record.n2; ++j)
    acc.add(params.treatment_link.inverse(base + s2_coef * stratum2_share(record, j)) *
            pmf2[static_cast<std::size_t>(j)]);
  return acc.value();
}

double cluster_strata_mean(const ClusterRecord& record, const StrataParameters& params) {
  const int n1 = record.n;
  const int n2 = *record.n2;
  std::vector<double> pmf2 = stratum2_pmf(record, params);
  const bool trim = static_cast<double>(n1 + 1) * static_cast<double>(n2 + 1) > kStrataLatticeLimit;
  const Window w2 = trim ? central_window(pmf2, 0.5e-12) : Window{0, pmf2.size()};

  const Eigen::Index p = static_cast<Eigen::Index>(record.covariates.size());
  const double treat_base =
      params.gamma0_stratum1 + covariate_dot(params.slopes1, 0, record.covariates);
  const double treat_s2 = params.slopes1[params.slopes1.size() - 1];
  const double out_base = params.beta[0] + covariate_dot(params.beta, 1, record.covariates);
  const double out_s = params.terms.s ? params.beta[1 + p] : 0.0;
  const double out_s2 = params.terms.s2 ? params.beta[params.beta.size() - 1] : 0.0;

  std::vector<double> pmf1(static_cast<std::size_t>(n1) + 1);
  CompensatedSum total;
  for (std::size_t j = w2.begin; j < w2.end; ++j) {
    const double s2 = stratum2_share(record, static_cast<int>(j));
    binomial_pmf_row(n1, params.treatment_link.inverse(treat_base + treat_s2 * s2), pmf1);
    const Window w1 = trim ? central_window(pmf1, 0.5e-12) : Window{0, pmf1.size()};
    CompensatedSum inner;
    for (std::size_t k = w1.begin; k < w1.end; ++k) {
      const double s1 = static_cast<double>(k) / n1;
      inner.add(params.outcome_link.inverse(out_base + out_s * s1 + out_s2 * s2) * pmf1[k]);
    }
    total.add(inner.value() * pmf2[j]);
  }
  return total.value();
}

StrataPolicy solve_strata_policy(double alpha1, double alpha2, const StrataFits& fits,
                                 std::span<const ClusterRecord> data) {
  require_strata(data);
  StrataPolicy policy;
  policy.alpha1 = alpha1;
  policy.alpha2 = alpha2;

  const std::vector<double> offsets2 = treatment_offsets(fits.stratum2.slopes(), data);
  const InterceptSolution sol2 = solve_intercept(alpha2, offsets2, {}, fits.stratum2.link);
  policy.gamma0_stratum2 = sol2.gamma0;
  policy.residual2 = sol2.residual;

  // Stratum-1 atoms: every (cluster, s2) pair weighted by P(s2 | L).
  StrataParameters params = strata_parameters(policy, fits);
  const Eigen::VectorXd slopes1 = fits.stratum1.slopes();
  const double s2_coef = slopes1[slopes1.size() - 1];
  std::vector<double> offsets1, weights1;
  for (const auto& record : data) {
    const std::vector<double> pmf2 = stratum2_pmf(record, params);
    const double base = covariate_dot(slopes1, 0, record.covariates);
    for (int j = 0; j <= *record.n2; ++j) {
      offsets1.push_back(base + s2_coef * stratum2_share(record, j));
      weights1.push_back(pmf2[static_cast<std::size_t>(j)]);
    }
  }
  const InterceptSolution sol1 = solve_intercept(alpha1, offsets1, weights1, fits.stratum1.link);
  policy.gamma0_stratum1 = sol1.gamma0;
  policy.residual1 = sol1.residual;
  policy.solved = true;
  return policy;
}

double estimate_mu_strata(const StrataPolicy& policy, const StrataFits& fits,
                          std::span<const ClusterRecord> data) {
  require_strata(data);
  if (!policy.solved) throw Error(ErrorKind::state, "two-strata policy has not been solved");
  if (data.empty()) throw Error(ErrorKind::data, "estimate_mu_strata: no clusters");
  const StrataParameters params = strata_parameters(policy, fits);
  CompensatedSum acc;
  for (const auto& record : data) acc.add(cluster_strata_mean(record, params));
  return acc.value() / static_cast<double>(data.size());
}

}  // namespace gformula
