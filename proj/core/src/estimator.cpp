#include "gformula/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gformula/error.hpp"
#include "gformula/gformula.hpp"
#include "gformula/policy.hpp"
#include "gformula/strata.hpp"

namespace gformula {
namespace {

struct PolicyGrid {
  std::vector<double> alphas;
  std::vector<std::pair<std::size_t, std::size_t>> contrasts;
};

std::size_t index_of(std::vector<double>& alphas, double alpha) {
  const auto it = std::find(alphas.begin(), alphas.end(), alpha);
  if (it != alphas.end()) return static_cast<std::size_t>(it - alphas.begin());
  alphas.push_back(alpha);
  return alphas.size() - 1;
}

PolicyGrid build_grid(const EstimationOptions& options) {
  PolicyGrid grid;
  for (double a : options.alphas) index_of(grid.alphas, a);
  for (const auto& [a, b] : options.contrasts) {
    const std::size_t ia = index_of(grid.alphas, a);
    const std::size_t ib = index_of(grid.alphas, b);
    grid.contrasts.emplace_back(ia, ib);
  }
  if (grid.alphas.empty()) throw Error(ErrorKind::config, "no policies requested");
  for (double a : grid.alphas)
    if (!(a > 0.0 && a < 1.0))
      throw Error(ErrorKind::config, "policy alpha " + std::to_string(a) + " outside (0,1)");
  return grid;
}

void require_converged(bool converged, const char* what) {
  if (!converged) throw Error(ErrorKind::convergence, std::string(what) + " did not converge");
}

Eigen::Index first_offset(const ThetaStack& theta, const std::string& prefix) {
  for (const auto& b : theta.blocks)
    if (b.name.rfind(prefix, 0) == 0) return b.offset;
  return -1;
}

void fill_intervals(EstimateReport& report, double z) {
  const auto& se = report.sandwich.se;
  const Eigen::Index mu_offset = first_offset(report.theta, "mu[");
  const Eigen::Index delta_offset = first_offset(report.theta, "delta[");
  for (std::size_t k = 0; k < report.policies.size(); ++k) {
    auto& pe = report.policies[k];
    pe.se = se[mu_offset + static_cast<Eigen::Index>(k)];
    const WaldInterval ci = wald_interval(pe.mu, pe.se, z);
    pe.ci_lower = ci.lower;
    pe.ci_upper = ci.upper;
  }
  for (std::size_t c = 0; c < report.contrasts.size(); ++c) {
    auto& ce = report.contrasts[c];
    ce.se = se[delta_offset + static_cast<Eigen::Index>(c)];
    const WaldInterval ci = wald_interval(ce.delta, ce.se, z);
    ce.ci_lower = ci.lower;
    ce.ci_upper = ci.upper;
  }
}

void fill_contrasts(EstimateReport& report, const PolicyGrid& grid, const std::vector<double>& mu,
                    std::vector<double>& delta) {
  for (const auto& [a, b] : grid.contrasts) {
    delta.push_back(mu[a] - mu[b]);
    ContrastEstimate ce;
    ce.alpha = grid.alphas[a];
    ce.alpha_prime = grid.alphas[b];
    ce.delta = delta.back();
    report.contrasts.push_back(ce);
  }
}

EstimateReport estimate_single(std::span<const ClusterRecord> data, const EstimationOptions& options,
                               const PolicyGrid& grid) {
  EstimateReport report;
  report.outcome_def = options.outcome_def;
  report.treatment = fit_treatment_model(data, options.treatment_link, options.newton);
  require_converged(report.treatment.converged, "treatment model");
  report.outcome = fit_outcome_model(data, options.outcome_def, options.outcome_link,
                                     OutcomeTerms{options.include_s, false}, options.newton);
  require_converged(report.outcome.converged, "outcome model");

  const Eigen::VectorXd slopes = report.treatment.slopes();
  std::vector<PolicySpec> policies;
  std::vector<double> mu;
  for (double alpha : grid.alphas) {
    policies.push_back(solve_gamma0(alpha, slopes, data, options.treatment_link));
    mu.push_back(estimate_mu(policies.back(), report.outcome, slopes, data, options.exec));
    PolicyEstimate pe;
    pe.alpha = alpha;
    pe.gamma0 = policies.back().gamma0;
    pe.residual = policies.back().residual;
    pe.mu = mu.back();
    report.policies.push_back(pe);
  }
  std::vector<double> delta;
  fill_contrasts(report, grid, mu, delta);

  StackContext context;
  context.treatment_link = options.treatment_link;
  context.outcome_link = options.outcome_link;
  context.outcome_has_s = options.include_s;
  context.covariate_dimension = data.front().covariates.size();
  context.alphas = grid.alphas;
  context.contrasts = grid.contrasts;
  report.theta = pack_theta(context, report.treatment, policies, report.outcome, mu, delta);
  const GFormulaEquations equations(data, context);
  report.sandwich = sandwich(equations, report.theta.theta);
  fill_intervals(report, options.z);
  return report;
}

EstimateReport estimate_strata(std::span<const ClusterRecord> data, const EstimationOptions& options,
                               const PolicyGrid& grid) {
  if (!options.include_s)
    throw Error(ErrorKind::config, "the two-strata analysis always includes S in the outcome model");
  require_strata(data);
  EstimateReport report;
  report.outcome_def = options.outcome_def;
  report.strata = true;

  StrataFits fits;
  fits.stratum1 = fit_stratum1_treatment_model(data, options.treatment_link, options.newton);
  require_converged(fits.stratum1.converged, "stratum-1 treatment model");
  fits.stratum2 = fit_stratum2_treatment_model(data, options.treatment_link, options.newton);
  require_converged(fits.stratum2.converged, "stratum-2 treatment model");
  fits.outcome = fit_outcome_model(data, options.outcome_def, options.outcome_link,
                                   OutcomeTerms{true, true}, options.newton);
  require_converged(fits.outcome.converged, "outcome model");
  report.treatment = fits.stratum1;
  report.stratum2_treatment = fits.stratum2;
  report.outcome = fits.outcome;

  std::vector<StrataPolicy> policies;
  std::vector<double> mu;
  for (double alpha : grid.alphas) {
    policies.push_back(solve_strata_policy(alpha, fits, data));
    mu.push_back(estimate_mu_strata(policies.back(), fits, data));
    PolicyEstimate pe;
    pe.alpha = alpha;
    pe.gamma0 = policies.back().gamma0_stratum1;
    pe.gamma0_strata2 = policies.back().gamma0_stratum2;
    pe.residual = std::max(std::abs(policies.back().residual1), std::abs(policies.back().residual2));
    pe.mu = mu.back();
    report.policies.push_back(pe);
  }
  std::vector<double> delta;
  fill_contrasts(report, grid, mu, delta);

  StrataStackContext context;
  context.treatment_link = options.treatment_link;
  context.outcome_link = options.outcome_link;
  context.covariate_dimension = data.front().covariates.size();
  for (double a : grid.alphas) context.alphas.emplace_back(a, a);
  context.contrasts = grid.contrasts;
  report.theta = pack_strata_theta(context, fits, policies, mu, delta);
  const StrataEquations equations(data, context);
  report.sandwich = sandwich(equations, report.theta.theta);
  fill_intervals(report, options.z);
  return report;
}

}  // namespace

const PolicyEstimate& EstimateReport::policy(double alpha) const {
  for (const auto& p : policies)
    if (p.alpha == alpha) return p;
  throw Error(ErrorKind::state, "report has no policy alpha=" + std::to_string(alpha));
}

const ContrastEstimate& EstimateReport::contrast(double alpha, double alpha_prime) const {
  for (const auto& c : contrasts)
    if (c.alpha == alpha && c.alpha_prime == alpha_prime) return c;
  throw Error(ErrorKind::state, "report has no contrast (" + std::to_string(alpha) + ", " +
                                    std::to_string(alpha_prime) + ")");
}

EstimateReport estimate_policies(std::span<const ClusterRecord> data,
                                 const EstimationOptions& options) {
  validate_dataset(data);
  const PolicyGrid grid = build_grid(options);
  return options.strata ? estimate_strata(data, options, grid) : estimate_single(data, options, grid);
}

}  // namespace gformula
