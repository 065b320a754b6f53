#include "gformula/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "gformula/csv.hpp"
#include "gformula/error.hpp"
#include "gformula/gformula.hpp"
#include "gformula/policy.hpp"
#include "gformula/quadrature.hpp"

namespace gformula {

void MassFunction::validate(const std::string& name) const {
  if (values.empty() || values.size() != probabilities.size())
    throw Error(ErrorKind::config, name + ": values and probabilities must be non-empty and aligned");
  double total = 0.0;
  for (double p : probabilities) {
    if (!(p >= 0.0)) throw Error(ErrorKind::config, name + ": negative probability");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw Error(ErrorKind::config, name + ": probabilities sum to " + format_double(total));
}

void DgpConfig::validate() const {
  if (m < 1) throw Error(ErrorKind::config, "dgp: m must be positive");
  size_law.validate("size_law");
  l2_law.validate("l2_law");
  for (double v : size_law.values)
    if (v < 1 || v != std::floor(v))
      throw Error(ErrorKind::config, "size_law: sizes must be positive integers");
  if (!std::isfinite(l1_mean) || !(l1_sd >= 0.0) || !std::isfinite(l1_sd))
    throw Error(ErrorKind::config, "l1_law: need finite mean and nonnegative sd");
}

DgpConfig standard_dgp_config(OutcomeDefinition outcome_def) {
  DgpConfig c;
  c.size_law = {{8, 16, 20}, {0.4, 0.35, 0.25}};
  c.l2_law = {{0, 1, 2, 3, 4}, {5.0 / 18, 3.0 / 18, 4.0 / 18, 5.0 / 18, 1.0 / 18}};
  const LinkFunction logit;
  c.rho = {logit.forward(0.6), -0.01, -0.01};
  c.beta = {logit.forward(0.6), -0.01, -0.8, -0.01};
  c.outcome_def = outcome_def;
  return c;
}

std::mt19937_64 replicate_engine(std::uint64_t seed, std::uint64_t replicate_index,
                                 std::uint64_t stream) {
  auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v); };
  auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
  std::seed_seq seq{lo(seed), hi(seed), lo(replicate_index), hi(replicate_index),
                    lo(stream), hi(stream)};
  return std::mt19937_64(seq);
}

Dataset generate_dataset(const DgpConfig& config, std::uint64_t replicate_index) {
  config.validate();
  const LinkFunction link(config.link);
  auto engine = replicate_engine(config.seed, replicate_index);
  std::discrete_distribution<std::size_t> size_draw(config.size_law.probabilities.begin(),
                                                    config.size_law.probabilities.end());
  std::discrete_distribution<std::size_t> l2_draw(config.l2_law.probabilities.begin(),
                                                  config.l2_law.probabilities.end());
  std::normal_distribution<double> l1_draw(0.0, 1.0);

  Dataset data;
  data.reserve(static_cast<std::size_t>(config.m));
  for (int i = 0; i < config.m; ++i) {
    const int n = static_cast<int>(config.size_law.values[size_draw(engine)]);
    const double l1 = config.l1_mean + config.l1_sd * l1_draw(engine);
    const double l2 = config.l2_law.values[l2_draw(engine)];

    const double p_treat = link.inverse(config.rho.intercept + config.rho.l1 * l1 + config.rho.l2 * l2);
    const int treated = std::binomial_distribution<int>(n, p_treat)(engine);
    const double s = static_cast<double>(treated) / n;

    const int den = outcome_denominator(config.outcome_def, n, s);
    const double p_out = link.inverse(config.beta.intercept + config.beta.l1 * l1 +
                                      config.beta.s * s + config.beta.l2 * l2);
    const int events = den > 0 ? std::binomial_distribution<int>(den, p_out)(engine) : 0;

    ClusterRecord r;
    r.id = std::to_string(i + 1);
    r.n = n;
    r.covariates = {l1, l2};
    r.s = s;
    r.y_denominator = den;
    r.y = den > 0 ? static_cast<double>(events) / den : 0.0;
    data.push_back(std::move(r));
  }
  return data;
}

namespace {

struct TruthAtoms {
  std::vector<double> offsets;  // rho slopes . (L1, L2)
  std::vector<double> base;     // outcome eta without the S term
  std::vector<double> weights;
};

TruthAtoms truth_atoms(const DgpConfig& c, int order) {
  const QuadratureRule rule = normal_quadrature(order, c.l1_mean, c.l1_sd);
  TruthAtoms atoms;
  for (std::size_t q = 0; q < rule.nodes.size(); ++q)
    for (std::size_t j = 0; j < c.l2_law.values.size(); ++j) {
      const double l1 = rule.nodes[q];
      const double l2 = c.l2_law.values[j];
      atoms.offsets.push_back(c.rho.l1 * l1 + c.rho.l2 * l2);
      atoms.base.push_back(c.beta.intercept + c.beta.l1 * l1 + c.beta.l2 * l2);
      atoms.weights.push_back(rule.weights[q] * c.l2_law.probabilities[j]);
    }
  return atoms;
}

TruthResult truth_at_order(const DgpConfig& c, double alpha, int order) {
  const LinkFunction link(c.link);
  const TruthAtoms atoms = truth_atoms(c, order);
  const InterceptSolution root = solve_intercept(alpha, atoms.offsets, atoms.weights, link);
  CompensatedSum mu;
  for (std::size_t a = 0; a < atoms.offsets.size(); ++a) {
    const double p = link.inverse(root.gamma0 + atoms.offsets[a]);
    for (std::size_t k = 0; k < c.size_law.values.size(); ++k) {
      const int n = static_cast<int>(c.size_law.values[k]);
      mu.add(atoms.weights[a] * c.size_law.probabilities[k] *
             cluster_policy_mean(n, p, atoms.base[a], c.beta.s, link));
    }
  }
  TruthResult out;
  out.alpha = alpha;
  out.gamma0 = root.gamma0;
  out.mu = mu.value();
  out.quadrature_order = order;
  return out;
}

}  // namespace

TruthResult analytic_policy_truth(const DgpConfig& config, double alpha) {
  config.validate();
  constexpr int kStartOrder = 64;
  constexpr int kMaxOrder = 1024;
  TruthResult current = truth_at_order(config, alpha, kStartOrder);
  for (int order = 2 * kStartOrder; order <= kMaxOrder; order *= 2) {
    TruthResult next = truth_at_order(config, alpha, order);
    const double change = std::abs(next.mu - current.mu);
    current.doubling_change = change;
    if (change < 1e-8) return current;
    current = next;
  }
  throw Error(ErrorKind::convergence, "analytic truth: quadrature did not settle by order " +
                                          std::to_string(kMaxOrder));
}

double analytic_truth(const DgpConfig& config, double alpha) {
  return analytic_policy_truth(config, alpha).mu;
}

std::string estimand_label(double alpha) { return "mu(" + format_short(alpha) + ")"; }

std::string estimand_label(double alpha, double alpha_prime) {
  return "delta(" + format_short(alpha) + "," + format_short(alpha_prime) + ")";
}

const EstimandSummary& SimStudyResult::row(const std::string& estimator) const {
  for (const auto& r : rows)
    if (r.estimator == estimator) return r;
  throw Error(ErrorKind::state, "no estimand " + estimator + " in study result");
}

double SimStudyResult::failure_rate() const {
  return replicates == 0 ? 0.0 : static_cast<double>(failures) / static_cast<double>(replicates);
}

namespace {

struct ReplicateOutcome {
  bool ok = false;
  std::string reason;
  std::vector<double> estimates;
  std::vector<double> ses;
  std::vector<double> lower;
  std::vector<double> upper;
  double max_residual = 0.0;
};

ReplicateOutcome run_replicate(const DgpConfig& config, const EstimationOptions& options,
                               std::size_t r) {
  ReplicateOutcome out;
  try {
    const Dataset data = generate_dataset(config, r);
    const EstimateReport report = estimate_policies(data, options);
    for (double a : options.alphas) {
      const PolicyEstimate& p = report.policy(a);
      out.estimates.push_back(p.mu);
      out.ses.push_back(p.se);
      out.lower.push_back(p.ci_lower);
      out.upper.push_back(p.ci_upper);
    }
    for (const auto& [a, b] : options.contrasts) {
      const ContrastEstimate& d = report.contrast(a, b);
      out.estimates.push_back(d.delta);
      out.ses.push_back(d.se);
      out.lower.push_back(d.ci_lower);
      out.upper.push_back(d.ci_upper);
    }
    for (const auto& p : report.policies)
      out.max_residual = std::max(out.max_residual, std::abs(p.residual));
    out.ok = true;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::convergence && e.kind() != ErrorKind::singular_information &&
        e.kind() != ErrorKind::unsolvable_policy && e.kind() != ErrorKind::singular_design)
      throw;
    out.reason = "replicate " + std::to_string(r) + ": " + e.what();
  }
  return out;
}

double sample_sd(const std::vector<double>& xs) {
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

}  // namespace

SimStudyResult run_study(const DgpConfig& config, const std::vector<double>& alphas,
                         const std::vector<std::pair<double, double>>& contrasts,
                         std::size_t replicates, const StudyOptions& options) {
  if (replicates < 1) throw Error(ErrorKind::config, "run_study: replicates must be at least 1");
  config.validate();

  SimStudyResult result;
  result.replicates = replicates;
  auto add_row = [&](std::string label, double truth) {
    EstimandSummary row;
    row.estimator = std::move(label);
    row.truth = truth;
    result.rows.push_back(std::move(row));
  };
  for (double a : alphas) add_row(estimand_label(a), analytic_truth(config, a));
  for (const auto& [a, b] : contrasts)
    add_row(estimand_label(a, b), analytic_truth(config, a) - analytic_truth(config, b));

  EstimationOptions est;
  est.outcome_def = config.outcome_def;
  est.treatment_link = LinkFunction(config.link);
  est.outcome_link = LinkFunction(config.link);
  est.alphas = alphas;
  est.contrasts = contrasts;

  std::vector<ReplicateOutcome> outcomes(replicates);
  parallel_for(replicates, std::max(1u, options.threads),
               [&](std::size_t r) { outcomes[r] = run_replicate(config, est, r); });

  const std::size_t estimands = result.rows.size();
  std::vector<double> covered(estimands, 0.0);
  std::vector<double> bias_sum(estimands, 0.0);
  std::vector<double> se_sum(estimands, 0.0);
  for (auto& o : outcomes) {
    if (!o.ok) {
      ++result.failures;
      result.failure_reasons.push_back(o.reason);
      continue;
    }
    ++result.used;
    result.max_policy_residual = std::max(result.max_policy_residual, o.max_residual);
    for (std::size_t e = 0; e < estimands; ++e) {
      const double truth = result.rows[e].truth;
      bias_sum[e] += o.estimates[e] - truth;
      se_sum[e] += o.ses[e];
      if (o.lower[e] <= truth && truth <= o.upper[e]) covered[e] += 1.0;
    }
    result.estimates.push_back(std::move(o.estimates));
    result.standard_errors.push_back(std::move(o.ses));
  }

  if (result.failure_rate() > options.max_failure_rate) {
    std::ostringstream msg;
    msg << "simulation aborted: " << result.failures << " of " << replicates
        << " replicates failed to converge";
    if (!result.failure_reasons.empty()) msg << "; first: " << result.failure_reasons.front();
    throw Error(ErrorKind::convergence, msg.str());
  }
  if (result.used == 0) throw Error(ErrorKind::convergence, "simulation: no replicate converged");

  const double used = static_cast<double>(result.used);
  for (std::size_t e = 0; e < estimands; ++e) {
    EstimandSummary& row = result.rows[e];
    row.bias = bias_sum[e] / used;
    row.coverage = 100.0 * covered[e] / used;
    row.ase = se_sum[e] / used;
    if (result.used > 1) {
      std::vector<double> column;
      column.reserve(result.used);
      for (const auto& est_row : result.estimates) column.push_back(est_row[e]);
      row.ese = sample_sd(column);
      if (*row.ese > 0.0) row.ser = row.ase / *row.ese;
    }
  }
  return result;
}

std::string study_csv(const SimStudyResult& result) {
  CsvWriter out({"estimator", "truth", "bias", "cov", "ase", "ese", "ser"});
  for (const auto& r : result.rows) {
    out.row({r.estimator, format_double(r.truth), format_double(r.bias), format_double(r.coverage),
             format_double(r.ase), r.ese ? format_double(*r.ese) : "",
             r.ser ? format_double(*r.ser) : ""});
  }
  return out.str();
}

}  // namespace gformula
