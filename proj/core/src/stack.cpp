#include "gformula/stack.hpp"

#include <sstream>

#include "gformula/binomial.hpp"
#include "gformula/error.hpp"
#include "gformula/gformula.hpp"
#include "gformula/glm.hpp"

namespace gformula {
namespace {

std::string alpha_label(double alpha) {
  std::ostringstream os;
  os << alpha;
  return os.str();
}

std::string pair_label(double a, double b) { return alpha_label(a) + "," + alpha_label(b); }

Eigen::VectorXd covariate_row(const ClusterRecord& record, Eigen::Index extra) {
  const auto p = static_cast<Eigen::Index>(record.covariates.size());
  Eigen::VectorXd x(1 + p + extra);
  x[0] = 1.0;
  for (Eigen::Index j = 0; j < p; ++j) x[1 + j] = record.covariates[static_cast<std::size_t>(j)];
  return x;
}

void check_dimension(const Eigen::VectorXd& theta, Eigen::Index expected,
                     const ClusterRecord& record, std::size_t covariates) {
  if (theta.size() != expected)
    throw Error(ErrorKind::data, "psi: theta has " + std::to_string(theta.size()) +
                                     " entries, context expects " + std::to_string(expected));
  if (record.covariates.size() != covariates)
    throw Error(ErrorKind::data, "psi: cluster " + record.id + " has the wrong covariate dimension");
}

// Sums needed for d m / d beta: sum_k dens(eta_k) pmf_k and
// sum_k dens(eta_k) (k/n) pmf_k.
std::pair<double, double> mean_beta_sums(int n, double p, double base, double s_coef,
                                         const LinkFunction& link) {
  const std::vector<double> pmf = binomial_pmf_row(n, p);
  double a = 0.0, b = 0.0;
  for (int k = 0; k <= n; ++k) {
    const double s = static_cast<double>(k) / n;
    const double w = link.density(base + s_coef * s) * pmf[static_cast<std::size_t>(k)];
    a += w;
    b += w * s;
  }
  return {a, b};
}

struct Layout {
  Eigen::Index rho, gamma, beta, mu, delta, end;
};

Layout layout(const StackContext& c) {
  Layout l{};
  const auto k = static_cast<Eigen::Index>(c.alphas.size());
  l.rho = 0;
  l.gamma = l.rho + c.treatment_dimension();
  l.beta = l.gamma + k;
  l.mu = l.beta + c.outcome_dimension();
  l.delta = l.mu + k;
  l.end = l.delta + static_cast<Eigen::Index>(c.contrasts.size());
  return l;
}

struct StrataLayout {
  Eigen::Index rho2, rho1, gamma2, gamma1, beta, mu, delta, end;
};

StrataLayout strata_layout(const StrataStackContext& c) {
  const auto p = static_cast<Eigen::Index>(c.covariate_dimension);
  const auto k = static_cast<Eigen::Index>(c.alphas.size());
  StrataLayout l{};
  l.rho2 = 0;
  l.rho1 = l.rho2 + 1 + p;
  l.gamma2 = l.rho1 + 2 + p;
  l.gamma1 = l.gamma2 + k;
  l.beta = l.gamma1 + k;
  l.mu = l.beta + 3 + p;
  l.delta = l.mu + k;
  l.end = l.delta + static_cast<Eigen::Index>(c.contrasts.size());
  return l;
}

}  // namespace

const ParameterBlock& ThetaStack::block(const std::string& name) const {
  for (const auto& b : blocks)
    if (b.name == name) return b;
  throw Error(ErrorKind::state, "theta stack has no block '" + name + "'");
}

double ThetaStack::value(const std::string& name) const { return theta[block(name).offset]; }

Eigen::Index StackContext::dimension() const { return layout(*this).end; }

std::vector<ParameterBlock> StackContext::blocks() const {
  const Layout l = layout(*this);
  std::vector<ParameterBlock> out;
  out.push_back({"rho", l.rho, treatment_dimension()});
  for (std::size_t k = 0; k < alphas.size(); ++k)
    out.push_back({"gamma0[" + alpha_label(alphas[k]) + "]", l.gamma + static_cast<Eigen::Index>(k), 1});
  out.push_back({"beta", l.beta, outcome_dimension()});
  for (std::size_t k = 0; k < alphas.size(); ++k)
    out.push_back({"mu[" + alpha_label(alphas[k]) + "]", l.mu + static_cast<Eigen::Index>(k), 1});
  for (std::size_t c = 0; c < contrasts.size(); ++c)
    out.push_back({"delta[" + pair_label(alphas[contrasts[c].first], alphas[contrasts[c].second]) + "]",
                   l.delta + static_cast<Eigen::Index>(c), 1});
  return out;
}

ThetaStack pack_theta(const StackContext& context, const TreatmentModelFit& treatment,
                      std::span<const PolicySpec> policies, const OutcomeModelFit& outcome,
                      std::span<const double> mu, std::span<const double> delta) {
  const Layout l = layout(context);
  if (treatment.rho.size() != context.treatment_dimension() ||
      outcome.beta.size() != context.outcome_dimension() ||
      policies.size() != context.alphas.size() || mu.size() != context.alphas.size() ||
      delta.size() != context.contrasts.size())
    throw Error(ErrorKind::state, "pack_theta: estimates do not match the stack context");
  ThetaStack stack;
  stack.theta.resize(l.end);
  stack.theta.segment(l.rho, context.treatment_dimension()) = treatment.rho;
  for (std::size_t k = 0; k < policies.size(); ++k) {
    stack.theta[l.gamma + static_cast<Eigen::Index>(k)] = policies[k].gamma0;
    stack.theta[l.mu + static_cast<Eigen::Index>(k)] = mu[k];
  }
  stack.theta.segment(l.beta, context.outcome_dimension()) = outcome.beta;
  for (std::size_t c = 0; c < delta.size(); ++c) stack.theta[l.delta + static_cast<Eigen::Index>(c)] = delta[c];
  stack.blocks = context.blocks();
  return stack;
}

Eigen::VectorXd psi_eval(const ClusterRecord& record, const Eigen::VectorXd& theta,
                         const StackContext& context) {
  const Layout l = layout(context);
  check_dimension(theta, l.end, record, context.covariate_dimension);
  const auto p = static_cast<Eigen::Index>(context.covariate_dimension);
  const auto& tlink = context.treatment_link;
  const auto& olink = context.outcome_link;
  Eigen::VectorXd out(l.end);

  const Eigen::VectorXd xt = covariate_row(record, 0);
  const Eigen::VectorXd rho = theta.segment(l.rho, 1 + p);
  out.segment(l.rho, 1 + p) = xt * binomial_score_factor(rho.dot(xt), record.treated(), record.n, tlink);
  const double offset = rho.tail(p).dot(xt.tail(p));

  Eigen::VectorXd xo = covariate_row(record, context.outcome_has_s ? 1 : 0);
  if (context.outcome_has_s) xo[1 + p] = record.s;
  const Eigen::VectorXd beta = theta.segment(l.beta, xo.size());
  out.segment(l.beta, xo.size()) =
      xo * binomial_score_factor(beta.dot(xo), record.events(), record.y_denominator, olink);
  const double base = beta.head(1 + p).dot(xo.head(1 + p));
  const double s_coef = context.outcome_has_s ? beta[1 + p] : 0.0;

  std::vector<double> means(context.alphas.size());
  for (std::size_t k = 0; k < context.alphas.size(); ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    const double prob = tlink.inverse(theta[l.gamma + kk] + offset);
    out[l.gamma + kk] = prob - context.alphas[k];
    means[k] = cluster_policy_mean(record.n, prob, base, s_coef, olink);
    out[l.mu + kk] = means[k] - theta[l.mu + kk];
  }
  for (std::size_t c = 0; c < context.contrasts.size(); ++c) {
    const auto [a, b] = context.contrasts[c];
    const auto cc = static_cast<Eigen::Index>(c);
    out[l.delta + cc] = means[a] - means[b] - theta[l.delta + cc];
  }
  return out;
}

Eigen::MatrixXd psi_jacobian(const ClusterRecord& record, const Eigen::VectorXd& theta,
                             const StackContext& context) {
  const Layout l = layout(context);
  check_dimension(theta, l.end, record, context.covariate_dimension);
  const auto p = static_cast<Eigen::Index>(context.covariate_dimension);
  const Eigen::Index dt = 1 + p;
  const Eigen::Index dout = context.outcome_dimension();
  const auto& tlink = context.treatment_link;
  const auto& olink = context.outcome_link;
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(l.end, l.end);

  const Eigen::VectorXd xt = covariate_row(record, 0);
  const Eigen::VectorXd rho = theta.segment(l.rho, dt);
  jac.block(l.rho, l.rho, dt, dt) =
      binomial_curvature_factor(rho.dot(xt), record.treated(), record.n, tlink) * (xt * xt.transpose());
  const double offset = rho.tail(p).dot(xt.tail(p));

  Eigen::VectorXd xo = covariate_row(record, context.outcome_has_s ? 1 : 0);
  if (context.outcome_has_s) xo[1 + p] = record.s;
  const Eigen::VectorXd beta = theta.segment(l.beta, dout);
  jac.block(l.beta, l.beta, dout, dout) =
      binomial_curvature_factor(beta.dot(xo), record.events(), record.y_denominator, olink) *
      (xo * xo.transpose());
  const double base = beta.head(1 + p).dot(xo.head(1 + p));
  const double s_coef = context.outcome_has_s ? beta[1 + p] : 0.0;

  // Row templates for the standardized mean of each policy (excluding the
  // -1 on its own mu).
  std::vector<Eigen::RowVectorXd> mean_rows(context.alphas.size());
  for (std::size_t k = 0; k < context.alphas.size(); ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    const double eta = theta[l.gamma + kk] + offset;
    const double prob = tlink.inverse(eta);
    const double dens = tlink.density(eta);

    jac(l.gamma + kk, l.gamma + kk) = dens;
    jac.block(l.gamma + kk, l.rho + 1, 1, p) = dens * xt.tail(p).transpose();

    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(l.end);
    const double dmean_dprob = cluster_policy_mean_derivative(record.n, prob, base, s_coef, olink);
    row(l.gamma + kk) = dmean_dprob * dens;
    row.segment(l.rho + 1, p) = dmean_dprob * dens * xt.tail(p).transpose();
    const auto [sum_dens, sum_dens_s] = mean_beta_sums(record.n, prob, base, s_coef, olink);
    row(l.beta) = sum_dens;
    row.segment(l.beta + 1, p) = sum_dens * xt.tail(p).transpose();
    if (context.outcome_has_s) row(l.beta + 1 + p) = sum_dens_s;
    mean_rows[k] = row;

    jac.row(l.mu + kk) = row;
    jac(l.mu + kk, l.mu + kk) = -1.0;
  }
  for (std::size_t c = 0; c < context.contrasts.size(); ++c) {
    const auto [a, b] = context.contrasts[c];
    const auto cc = static_cast<Eigen::Index>(c);
    jac.row(l.delta + cc) = mean_rows[a] - mean_rows[b];
    jac(l.delta + cc, l.delta + cc) = -1.0;
  }
  return jac;
}

GFormulaEquations::GFormulaEquations(std::span<const ClusterRecord> data, StackContext context)
    : data_(data), context_(std::move(context)) {}

Eigen::VectorXd GFormulaEquations::psi(std::size_t unit, const Eigen::VectorXd& theta) const {
  return psi_eval(data_[unit], theta, context_);
}

Eigen::MatrixXd GFormulaEquations::mean_jacobian(const Eigen::VectorXd& theta) const {
  Eigen::MatrixXd total = Eigen::MatrixXd::Zero(dimension(), dimension());
  for (const auto& record : data_) total += psi_jacobian(record, theta, context_);
  return total / static_cast<double>(data_.size());
}

// ---------------------------------------------------------------------------
// Two-strata stack.

Eigen::Index StrataStackContext::dimension() const { return strata_layout(*this).end; }

std::vector<ParameterBlock> StrataStackContext::blocks() const {
  const StrataLayout l = strata_layout(*this);
  const auto p = static_cast<Eigen::Index>(covariate_dimension);
  std::vector<ParameterBlock> out;
  out.push_back({"rho_stratum2", l.rho2, 1 + p});
  out.push_back({"rho_stratum1", l.rho1, 2 + p});
  for (std::size_t k = 0; k < alphas.size(); ++k)
    out.push_back({"gamma0_stratum2[" + pair_label(alphas[k].first, alphas[k].second) + "]",
                   l.gamma2 + static_cast<Eigen::Index>(k), 1});
  for (std::size_t k = 0; k < alphas.size(); ++k)
    out.push_back({"gamma0_stratum1[" + pair_label(alphas[k].first, alphas[k].second) + "]",
                   l.gamma1 + static_cast<Eigen::Index>(k), 1});
  out.push_back({"beta", l.beta, 3 + p});
  for (std::size_t k = 0; k < alphas.size(); ++k)
    out.push_back({"mu[" + pair_label(alphas[k].first, alphas[k].second) + "]",
                   l.mu + static_cast<Eigen::Index>(k), 1});
  for (std::size_t c = 0; c < contrasts.size(); ++c) {
    const auto& a = alphas[contrasts[c].first];
    const auto& b = alphas[contrasts[c].second];
    out.push_back({"delta[" + pair_label(a.first, a.second) + ";" + pair_label(b.first, b.second) + "]",
                   l.delta + static_cast<Eigen::Index>(c), 1});
  }
  return out;
}

ThetaStack pack_strata_theta(const StrataStackContext& context, const StrataFits& fits,
                             std::span<const StrataPolicy> policies, std::span<const double> mu,
                             std::span<const double> delta) {
  const StrataLayout l = strata_layout(context);
  const auto p = static_cast<Eigen::Index>(context.covariate_dimension);
  if (fits.stratum2.rho.size() != 1 + p || fits.stratum1.rho.size() != 2 + p ||
      fits.outcome.beta.size() != 3 + p || policies.size() != context.alphas.size() ||
      mu.size() != context.alphas.size() || delta.size() != context.contrasts.size())
    throw Error(ErrorKind::state, "pack_strata_theta: estimates do not match the stack context");
  ThetaStack stack;
  stack.theta.resize(l.end);
  stack.theta.segment(l.rho2, 1 + p) = fits.stratum2.rho;
  stack.theta.segment(l.rho1, 2 + p) = fits.stratum1.rho;
  for (std::size_t k = 0; k < policies.size(); ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    stack.theta[l.gamma2 + kk] = policies[k].gamma0_stratum2;
    stack.theta[l.gamma1 + kk] = policies[k].gamma0_stratum1;
    stack.theta[l.mu + kk] = mu[k];
  }
  stack.theta.segment(l.beta, 3 + p) = fits.outcome.beta;
  for (std::size_t c = 0; c < delta.size(); ++c) stack.theta[l.delta + static_cast<Eigen::Index>(c)] = delta[c];
  stack.blocks = context.blocks();
  return stack;
}

StrataEquations::StrataEquations(std::span<const ClusterRecord> data, StrataStackContext context)
    : data_(data), context_(std::move(context)) {
  require_strata(data_);
}

Eigen::VectorXd StrataEquations::psi(std::size_t unit, const Eigen::VectorXd& theta) const {
  const ClusterRecord& record = data_[unit];
  const StrataLayout l = strata_layout(context_);
  check_dimension(theta, l.end, record, context_.covariate_dimension);
  const auto p = static_cast<Eigen::Index>(context_.covariate_dimension);
  const auto& tlink = context_.treatment_link;
  const auto& olink = context_.outcome_link;
  Eigen::VectorXd out(l.end);

  const Eigen::VectorXd x2 = covariate_row(record, 0);
  const Eigen::VectorXd rho2 = theta.segment(l.rho2, 1 + p);
  out.segment(l.rho2, 1 + p) =
      x2 * binomial_score_factor(rho2.dot(x2), record.treated_stratum2(), *record.n2, tlink);

  Eigen::VectorXd x1 = covariate_row(record, 1);
  x1[1 + p] = *record.s2;
  const Eigen::VectorXd rho1 = theta.segment(l.rho1, 2 + p);
  out.segment(l.rho1, 2 + p) = x1 * binomial_score_factor(rho1.dot(x1), record.treated(), record.n, tlink);

  Eigen::VectorXd xo = covariate_row(record, 2);
  xo[1 + p] = record.s;
  xo[2 + p] = *record.s2;
  const Eigen::VectorXd beta = theta.segment(l.beta, 3 + p);
  out.segment(l.beta, 3 + p) =
      xo * binomial_score_factor(beta.dot(xo), record.events(), record.y_denominator, olink);

  StrataParameters params;
  params.slopes1 = rho1.tail(1 + p);
  params.slopes2 = rho2.tail(p);
  params.beta = beta;
  params.terms = OutcomeTerms{true, true};
  params.treatment_link = tlink;
  params.outcome_link = olink;

  std::vector<double> means(context_.alphas.size());
  for (std::size_t k = 0; k < context_.alphas.size(); ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    params.gamma0_stratum2 = theta[l.gamma2 + kk];
    params.gamma0_stratum1 = theta[l.gamma1 + kk];
    out[l.gamma2 + kk] = tlink.inverse(params.gamma0_stratum2 + params.slopes2.dot(x2.tail(p))) -
                         context_.alphas[k].second;
    out[l.gamma1 + kk] = cluster_stratum1_propensity(record, params) - context_.alphas[k].first;
    means[k] = cluster_strata_mean(record, params);
    out[l.mu + kk] = means[k] - theta[l.mu + kk];
  }
  for (std::size_t c = 0; c < context_.contrasts.size(); ++c) {
    const auto [a, b] = context_.contrasts[c];
    const auto cc = static_cast<Eigen::Index>(c);
    out[l.delta + cc] = means[a] - means[b] - theta[l.delta + cc];
  }
  return out;
}

Eigen::MatrixXd StrataEquations::mean_jacobian(const Eigen::VectorXd& theta) const {
  const StrataLayout l = strata_layout(context_);
  const auto p = static_cast<Eigen::Index>(context_.covariate_dimension);
  const auto k_count = static_cast<Eigen::Index>(context_.alphas.size());
  const auto& tlink = context_.treatment_link;
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(l.end, l.end);

  // (stratum-1 propensity, standardized mean) of policy k at th.
  auto policy_row = [&](const ClusterRecord& record, const Eigen::VectorXd& th, Eigen::Index k) {
    StrataParameters params;
    params.slopes1 = th.segment(l.rho1 + 1, 1 + p);
    params.slopes2 = th.segment(l.rho2 + 1, p);
    params.beta = th.segment(l.beta, 3 + p);
    params.terms = OutcomeTerms{true, true};
    params.treatment_link = tlink;
    params.outcome_link = context_.outcome_link;
    params.gamma0_stratum2 = th[l.gamma2 + k];
    params.gamma0_stratum1 = th[l.gamma1 + k];
    return std::pair{cluster_stratum1_propensity(record, params), cluster_strata_mean(record, params)};
  };

  // Central differences, restricted to the policy rows a parameter reaches:
  // slopes and beta move every policy, each intercept only its own.
  std::vector<Eigen::Index> shared;
  for (Eigen::Index j = 1; j < 1 + p; ++j) shared.push_back(l.rho2 + j);
  for (Eigen::Index j = 1; j < 2 + p; ++j) shared.push_back(l.rho1 + j);
  for (Eigen::Index j = 0; j < 3 + p; ++j) shared.push_back(l.beta + j);
  Eigen::VectorXd shifted = theta;
  auto difference = [&](Eigen::Index col, Eigen::Index first, Eigen::Index last) {
    const double h = 1e-6 * std::max(1.0, std::abs(theta[col]));
    for (const auto& record : data_) {
      for (Eigen::Index k = first; k < last; ++k) {
        shifted[col] = theta[col] + h;
        const auto plus = policy_row(record, shifted, k);
        shifted[col] = theta[col] - h;
        const auto minus = policy_row(record, shifted, k);
        shifted[col] = theta[col];
        jac(l.gamma1 + k, col) += (plus.first - minus.first) / (2.0 * h);
        jac(l.mu + k, col) += (plus.second - minus.second) / (2.0 * h);
      }
    }
  };
  for (Eigen::Index col : shared) difference(col, 0, k_count);
  for (Eigen::Index k = 0; k < k_count; ++k) {
    difference(l.gamma2 + k, k, k + 1);
    difference(l.gamma1 + k, k, k + 1);
  }

  Eigen::MatrixXd h2 = Eigen::MatrixXd::Zero(1 + p, 1 + p);
  Eigen::MatrixXd h1 = Eigen::MatrixXd::Zero(2 + p, 2 + p);
  Eigen::MatrixXd ho = Eigen::MatrixXd::Zero(3 + p, 3 + p);
  const Eigen::VectorXd rho2 = theta.segment(l.rho2, 1 + p);
  const Eigen::VectorXd rho1 = theta.segment(l.rho1, 2 + p);
  const Eigen::VectorXd beta = theta.segment(l.beta, 3 + p);
  for (const auto& record : data_) {
    const Eigen::VectorXd x2 = covariate_row(record, 0);
    Eigen::VectorXd x1 = covariate_row(record, 1);
    x1[1 + p] = *record.s2;
    Eigen::VectorXd xo = covariate_row(record, 2);
    xo[1 + p] = record.s;
    xo[2 + p] = *record.s2;
    h2 += binomial_curvature_factor(rho2.dot(x2), record.treated_stratum2(), *record.n2, tlink) *
          (x2 * x2.transpose());
    h1 += binomial_curvature_factor(rho1.dot(x1), record.treated(), record.n, tlink) * (x1 * x1.transpose());
    ho += binomial_curvature_factor(beta.dot(xo), record.events(), record.y_denominator,
                                    context_.outcome_link) * (xo * xo.transpose());
    // Stratum-2 policy rows: g^{-1}(gamma2 + rho2' L) - alpha2.
    for (Eigen::Index k = 0; k < k_count; ++k) {
      const double f = tlink.density(theta[l.gamma2 + k] + rho2.tail(p).dot(x2.tail(p)));
      jac(l.gamma2 + k, l.gamma2 + k) += f;
      jac.block(l.gamma2 + k, l.rho2 + 1, 1, p) += f * x2.tail(p).transpose();
    }
  }
  const double m = static_cast<double>(data_.size());
  jac.block(l.gamma2, 0, 2 * k_count, l.end) /= m;
  jac.block(l.mu, 0, k_count, l.end) /= m;
  jac.block(l.rho2, l.rho2, 1 + p, 1 + p) = h2 / m;
  jac.block(l.rho1, l.rho1, 2 + p, 2 + p) = h1 / m;
  jac.block(l.beta, l.beta, 3 + p, 3 + p) = ho / m;
  for (Eigen::Index k = 0; k < k_count; ++k) jac(l.mu + k, l.mu + k) = -1.0;
  for (std::size_t c = 0; c < context_.contrasts.size(); ++c) {
    const auto [a, b] = context_.contrasts[c];
    const auto cc = static_cast<Eigen::Index>(c);
    jac.row(l.delta + cc) = jac.row(l.mu + static_cast<Eigen::Index>(a)) - jac.row(l.mu + static_cast<Eigen::Index>(b));
    jac(l.delta + cc, l.mu + static_cast<Eigen::Index>(a)) = 0.0;
    jac(l.delta + cc, l.mu + static_cast<Eigen::Index>(b)) = 0.0;
    jac(l.delta + cc, l.delta + cc) = -1.0;
  }
  return jac;
}

}  // namespace gformula
