#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "gformula/estimator.hpp"
#include "gformula/link.hpp"
#include "gformula/types.hpp"

namespace gformula {

// Finite distribution: values[i] has probability probabilities[i].
struct MassFunction {
  std::vector<double> values;
  std::vector<double> probabilities;

  // Throws Error(config) unless probabilities are nonnegative and sum to
  // one within 1e-12.
  void validate(const std::string& name) const;
};

struct TreatmentParameters {
  double intercept = 0.0;
  double l1 = 0.0;
  double l2 = 0.0;
};

struct OutcomeParameters {
  double intercept = 0.0;
  double l1 = 0.0;
  double s = 0.0;
  double l2 = 0.0;
};

// Cluster-level data generating process. Each cluster draws its size N, a
// normal covariate L1 and a discrete covariate L2, then treats each member
// independently with probability g^{-1}(rho . (1, L1, L2)) and draws the
// outcome count over the outcome denominator with probability
// g^{-1}(beta . (1, L1, S, L2)). Records carry covariates (L1, L2).
struct DgpConfig {
  int m = 125;
  MassFunction size_law;
  double l1_mean = 40.0;
  double l1_sd = 10.0;
  MassFunction l2_law;
  TreatmentParameters rho;
  OutcomeParameters beta;
  OutcomeDefinition outcome_def = OutcomeDefinition::overall;
  LinkKind link = LinkKind::logit;
  std::uint64_t seed = 20240101;

  void validate() const;
};

// The standard study design: N in {8, 16, 20}, L1 ~ N(40, 10^2), L2 on 0..4.
DgpConfig standard_dgp_config(OutcomeDefinition outcome_def = OutcomeDefinition::overall);

// Engine for one (seed, replicate, stream) key. Distinct keys give
// independent streams, so replicates can be generated in any order.
std::mt19937_64 replicate_engine(std::uint64_t seed, std::uint64_t replicate_index,
                                 std::uint64_t stream = 0);

Dataset generate_dataset(const DgpConfig& config, std::uint64_t replicate_index);

struct TruthResult {
  double alpha = 0.0;
  double gamma0 = 0.0;
  double mu = 0.0;
  int quadrature_order = 0;  // order whose doubling moved mu by < 1e-8
  double doubling_change = 0.0;
};

// Population policy mean under the exact covariate law: L1 by Gauss-Hermite
// quadrature, N and L2 summed exactly, orders doubled from 64 until the
// result moves by less than 1e-8.
TruthResult analytic_policy_truth(const DgpConfig& config, double alpha);
double analytic_truth(const DgpConfig& config, double alpha);

struct EstimandSummary {
  std::string estimator;     // "mu(0.4)" or "delta(0.6,0.4)"
  double truth = 0.0;
  double bias = 0.0;         // mean estimate minus truth
  double coverage = 0.0;     // percent of Wald intervals covering truth
  double ase = 0.0;          // mean sandwich standard error
  std::optional<double> ese; // SD of estimates; absent with one replicate
  std::optional<double> ser; // ase / ese
};

struct StudyOptions {
  unsigned threads = 1;
  double max_failure_rate = 0.05;
};

struct SimStudyResult {
  std::vector<EstimandSummary> rows;
  std::size_t replicates = 0;  // requested
  std::size_t used = 0;        // replicates entering the summaries
  std::size_t failures = 0;    // excluded for non-convergence
  std::vector<std::string> failure_reasons;
  double max_policy_residual = 0.0;

  // estimates[r][e] and standard_errors[r][e] for used replicate r and
  // estimand e, in the order of rows.
  std::vector<std::vector<double>> estimates;
  std::vector<std::vector<double>> standard_errors;

  const EstimandSummary& row(const std::string& estimator) const;
  double failure_rate() const;
};

std::string estimand_label(double alpha);
std::string estimand_label(double alpha, double alpha_prime);

// Generates and analyses `replicates` datasets and summarises each estimand
// against its analytic truth. Replicates whose fits fail to converge are
// excluded and counted; Error(convergence) is thrown when their share
// exceeds options.max_failure_rate.
SimStudyResult run_study(const DgpConfig& config, const std::vector<double>& alphas,
                         const std::vector<std::pair<double, double>>& contrasts,
                         std::size_t replicates, const StudyOptions& options = {});

// CSV with columns estimator,truth,bias,cov,ase,ese,ser.
std::string study_csv(const SimStudyResult& result);

}  // namespace gformula
