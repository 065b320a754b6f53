#include <gtest/gtest.h>

#include "gformula/binomial.hpp"
#include "gformula/error.hpp"
#include "gformula/gformula.hpp"
#include "gformula/policy.hpp"
#include "gformula/strata.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace gformula;

namespace {

gen::DatasetShape strata_shape() {
  gen::DatasetShape s;
  s.strata = true;
  s.n_max = 5;
  s.n2_max = 5;
  s.m_min = 60;
  s.m_max = 100;
  return s;
}

std::vector<double> head(const Eigen::VectorXd& v, Eigen::Index n) { return {v.data(), v.data() + n}; }

oracle::OutcomeCoefs strata_coefs(const OutcomeModelFit& o) {
  const Eigen::Index p = o.covariate_dimension();
  oracle::OutcomeCoefs c;
  c.intercept = o.beta[0];
  c.covariates.assign(o.beta.data() + 1, o.beta.data() + 1 + p);
  c.s = o.beta[1 + p];
  c.s2 = o.beta[2 + p];
  return c;
}

}  // namespace

TEST(Strata, MatchesEnumerationOracle) {
  gen::Rng rng(51);
  for (int rep = 0; rep < 10; ++rep) {
    const Dataset data = gen::random_dataset(rng, strata_shape());
    const StrataFits fits = fit_strata_models(data, OutcomeDefinition::overall);
    const double a1 = rng.uniform(0.1, 0.9), a2 = rng.uniform(0.1, 0.9);
    const StrataPolicy policy = solve_strata_policy(a1, a2, fits, data);
    ASSERT_TRUE(policy.solved);
    const Eigen::Index p = 2;
    const double mu = estimate_mu_strata(policy, fits, data);
    const double ref = oracle::mu_strata_by_enumeration(
        data, policy.gamma0_stratum1, head(fits.stratum1.slopes(), p), fits.stratum1.rho[p + 1],
        policy.gamma0_stratum2, head(fits.stratum2.slopes(), p), strata_coefs(fits.outcome));
    EXPECT_NEAR(mu, ref, 1e-12);
  }
}

TEST(Strata, SingleMemberStrataFourTerms) {
  ClusterRecord r;
  r.n = 1;
  r.n2 = 1;
  r.s2 = 0.0;
  r.covariates = {};
  StrataParameters params;
  params.gamma0_stratum1 = 0.2;
  params.slopes1 = Eigen::VectorXd::Constant(1, -0.7);
  params.gamma0_stratum2 = -0.4;
  params.slopes2 = Eigen::VectorXd(0);
  params.beta = Eigen::Vector3d(0.1, -0.8, 0.5);
  const double q2 = oracle::expit(-0.4);
  const double p1_0 = oracle::expit(0.2), p1_1 = oracle::expit(0.2 - 0.7);
  const double hand = (1 - q2) * ((1 - p1_0) * oracle::expit(0.1) + p1_0 * oracle::expit(0.1 - 0.8)) +
                      q2 * ((1 - p1_1) * oracle::expit(0.1 + 0.5) + p1_1 * oracle::expit(0.1 - 0.8 + 0.5));
  EXPECT_NEAR(cluster_strata_mean(r, params), hand, 1e-15);
  EXPECT_NEAR(cluster_stratum1_propensity(r, params), (1 - q2) * p1_0 + q2 * p1_1, 1e-15);
}

TEST(Strata, DegenerateSecondStratumReducesToSingleStratum) {
  gen::Rng rng(52);
  const Dataset data = gen::random_dataset(rng, strata_shape());
  StrataFits fits = fit_strata_models(data, OutcomeDefinition::overall);
  fits.stratum1.rho[fits.stratum1.rho.size() - 1] = 0.0;
  fits.outcome.beta[fits.outcome.beta.size() - 1] = 0.0;
  const StrataPolicy sp = solve_strata_policy(0.45, fits, data);

  TreatmentModelFit single{fits.stratum1.rho.head(3), fits.stratum1.link, true};
  OutcomeModelFit outcome = fits.outcome;
  outcome.beta = fits.outcome.beta.head(4);
  outcome.terms = {true, false};
  const PolicySpec p = solve_gamma0(0.45, single.slopes(), data, single.link);
  EXPECT_NEAR(p.gamma0, sp.gamma0_stratum1, 1e-10);
  EXPECT_NEAR(estimate_mu(p, outcome, single.slopes(), data), estimate_mu_strata(sp, fits, data), 1e-12);
}

TEST(Strata, ConstantWhenProportionsDoNotEnterOutcome) {
  gen::Rng rng(53);
  const Dataset data = gen::random_dataset(rng, strata_shape());
  StrataFits fits = fit_strata_models(data, OutcomeDefinition::overall);
  const Eigen::Index p = fits.outcome.covariate_dimension();
  fits.outcome.beta[1 + p] = 0.0;
  fits.outcome.beta[2 + p] = 0.0;
  double lo = 1, hi = 0;
  for (int k = 1; k <= 9; ++k) {
    const double v = estimate_mu_strata(solve_strata_policy(k / 10.0, fits, data), fits, data);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  EXPECT_LE(hi - lo, 1e-12);
}

TEST(Strata, PolicyHitsBothTargets) {
  gen::Rng rng(54);
  const Dataset data = gen::random_dataset(rng, strata_shape());
  const StrataFits fits = fit_strata_models(data, OutcomeDefinition::overall);
  const StrataPolicy sp = solve_strata_policy(0.3, 0.7, fits, data);
  const StrataParameters params = strata_parameters(sp, fits);
  double e1 = 0.0, e2 = 0.0;
  for (const auto& r : data) {
    e1 += cluster_stratum1_propensity(r, params);
    e2 += params.treatment_link.inverse(sp.gamma0_stratum2 + params.slopes2.dot(Eigen::Map<const Eigen::VectorXd>(
                                                                  r.covariates.data(), 2)));
  }
  EXPECT_NEAR(e1 / data.size(), 0.3, 1e-10);
  EXPECT_NEAR(e2 / data.size(), 0.7, 1e-10);
  EXPECT_LE(std::abs(sp.residual1), 1e-10);
  EXPECT_LE(std::abs(sp.residual2), 1e-10);
}

TEST(Strata, LargeLatticeTrimmingIsAccurate) {
  ClusterRecord r;
  r.n = 1100;
  r.n2 = 1000;
  r.s2 = 0.5;
  StrataParameters params;
  params.gamma0_stratum1 = 0.1;
  params.slopes1 = Eigen::VectorXd::Constant(1, 0.6);
  params.gamma0_stratum2 = -0.2;
  params.slopes2 = Eigen::VectorXd(0);
  params.beta = Eigen::Vector3d(-0.3, -1.2, 0.7);
  const double fast = cluster_strata_mean(r, params);

  const auto pmf2 = binomial_pmf_row(1000, oracle::expit(-0.2));
  long double full = 0.0L;
  for (int j = 0; j <= 1000; ++j) {
    const double s2 = j / 1000.0;
    const auto pmf1 = binomial_pmf_row(1100, oracle::expit(0.1 + 0.6 * s2));
    long double inner = 0.0L;
    for (int k = 0; k <= 1100; ++k) inner += pmf1[k] * oracle::expit(-0.3 - 1.2 * k / 1100.0 + 0.7 * s2);
    full += inner * pmf2[j];
  }
  EXPECT_NEAR(fast, static_cast<double>(full), 1e-11);
}

TEST(Strata, RequiresSecondStratumFields) {
  gen::Rng rng(55);
  const Dataset with = gen::random_dataset(rng, strata_shape());
  const StrataFits fits = fit_strata_models(with, OutcomeDefinition::overall);
  const StrataPolicy sp = solve_strata_policy(0.5, fits, with);
  Dataset without = with;
  for (auto& r : without) {
    r.s2.reset();
    r.n2.reset();
  }
  try {
    estimate_mu_strata(sp, fits, without);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::schema);
  }
  EXPECT_THROW(fit_strata_models(without, OutcomeDefinition::overall), Error);
}
