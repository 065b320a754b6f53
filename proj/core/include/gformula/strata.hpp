#pragma once

#include <span>

#include <Eigen/Dense>

#include "gformula/mle.hpp"
#include "gformula/types.hpp"

namespace gformula {

// Two population strata: S1 (the outcome-eligible members) is modelled given
// L and S2, and S2 (everyone else) given L.
struct StrataFits {
  TreatmentModelFit stratum1;  // slopes: covariates, then S2
  TreatmentModelFit stratum2;
  OutcomeModelFit outcome;     // includes the S2 term
};

StrataFits fit_strata_models(std::span<const ClusterRecord> data, OutcomeDefinition outcome_def,
                             LinkFunction link = LinkFunction{});

// Policy setting E(S1) = alpha1 and E(S2) = alpha2. The stratum-2 intercept
// is solved first; the stratum-1 intercept is then solved with S2 averaged
// over its counterfactual distribution.
struct StrataPolicy {
  double alpha1 = 0.5;
  double alpha2 = 0.5;
  double gamma0_stratum1 = 0.0;
  double gamma0_stratum2 = 0.0;
  double residual1 = 0.0;
  double residual2 = 0.0;
  bool solved = false;
};

StrataPolicy solve_strata_policy(double alpha1, double alpha2, const StrataFits& fits,
                                 std::span<const ClusterRecord> data);
inline StrataPolicy solve_strata_policy(double alpha, const StrataFits& fits,
                                        std::span<const ClusterRecord> data) {
  return solve_strata_policy(alpha, alpha, fits, data);
}

// Raw parameters of the two-strata standardization for one cluster.
struct StrataParameters {
  double gamma0_stratum1 = 0.0;
  Eigen::VectorXd slopes1;  // covariates, then S2
  double gamma0_stratum2 = 0.0;
  Eigen::VectorXd slopes2;
  Eigen::VectorXd beta;     // intercept, covariates, [S], [S2]
  OutcomeTerms terms{true, true};
  LinkFunction treatment_link;
  LinkFunction outcome_link;
};

StrataParameters strata_parameters(const StrataPolicy& policy, const StrataFits& fits);

// Lattice products above this many terms have their pmf tails trimmed to
// cumulative mass 1e-12.
inline constexpr double kStrataLatticeLimit = 1e6;

// Counterfactual S2 pmf of the cluster (length n2 + 1).
std::vector<double> stratum2_pmf(const ClusterRecord& record, const StrataParameters& params);

// sum_{s2} g^{-1}(gamma01 + rho1' L + rho_s2 s2) P(s2 | L).
double cluster_stratum1_propensity(const ClusterRecord& record, const StrataParameters& params);

// sum_{s2} sum_{s1} E(Y | s1, s2, L) P(s1 | L, s2) P(s2 | L).
double cluster_strata_mean(const ClusterRecord& record, const StrataParameters& params);

// Average of cluster_strata_mean. Throws Error(schema) when s2/n2 are
// missing and Error(state) for an unsolved policy.
double estimate_mu_strata(const StrataPolicy& policy, const StrataFits& fits,
                          std::span<const ClusterRecord> data);

}  // namespace gformula
