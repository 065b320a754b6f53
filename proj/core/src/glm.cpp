#include "gformula/glm.hpp"

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "gformula/execution.hpp"

namespace gformula {
namespace {

double log_binomial_coefficient(double trials, double successes) {
  return std::lgamma(trials + 1.0) - std::lgamma(successes + 1.0) -
         std::lgamma(trials - successes + 1.0);
}

}  // namespace

double binomial_score_factor(double eta, double successes, double trials, const LinkFunction& link) {
  if (trials <= 0) return 0.0;
  return (successes - trials * link.inverse(eta)) * link.score_weight(eta);
}

double binomial_curvature_factor(double eta, double successes, double trials,
                                 const LinkFunction& link) {
  if (trials <= 0) return 0.0;
  const double residual = successes - trials * link.inverse(eta);
  return -trials * link.density(eta) * link.score_weight(eta) +
         residual * link.score_weight_derivative(eta);
}

BinomialRegression::BinomialRegression(Eigen::MatrixXd design, Eigen::VectorXd successes,
                                       Eigen::VectorXd trials, LinkFunction link)
    : design_(std::move(design)),
      successes_(std::move(successes)),
      trials_(std::move(trials)),
      link_(link) {}

double BinomialRegression::log_likelihood(const Eigen::VectorXd& coef) const {
  CompensatedSum total;
  for (Eigen::Index i = 0; i < units(); ++i) {
    const double t = trials_[i];
    if (t <= 0) continue;
    const double k = successes_[i];
    const double eta = design_.row(i).dot(coef);
    double term = log_binomial_coefficient(t, k);
    if (k > 0) term += k * link_.log_inverse(eta);
    if (t - k > 0) term += (t - k) * link_.log_inverse_complement(eta);
    total.add(term);
  }
  return total.value();
}

Eigen::VectorXd BinomialRegression::unit_score(Eigen::Index i, const Eigen::VectorXd& coef) const {
  const double t = trials_[i];
  if (t <= 0) return Eigen::VectorXd::Zero(dimension());
  const double eta = design_.row(i).dot(coef);
  return design_.row(i).transpose() * binomial_score_factor(eta, successes_[i], t, link_);
}

Eigen::MatrixXd BinomialRegression::unit_hessian(Eigen::Index i, const Eigen::VectorXd& coef) const {
  const double t = trials_[i];
  if (t <= 0) return Eigen::MatrixXd::Zero(dimension(), dimension());
  const double eta = design_.row(i).dot(coef);
  const auto x = design_.row(i).transpose();
  return binomial_curvature_factor(eta, successes_[i], t, link_) * (x * x.transpose());
}

Eigen::VectorXd BinomialRegression::score(const Eigen::VectorXd& coef) const {
  const Eigen::Index d = dimension();
  std::vector<CompensatedSum> acc(static_cast<std::size_t>(d));
  for (Eigen::Index i = 0; i < units(); ++i) {
    if (trials_[i] <= 0) continue;
    const double r = binomial_score_factor(design_.row(i).dot(coef), successes_[i], trials_[i], link_);
    for (Eigen::Index j = 0; j < d; ++j) acc[static_cast<std::size_t>(j)].add(design_(i, j) * r);
  }
  Eigen::VectorXd out(d);
  for (Eigen::Index j = 0; j < d; ++j) out[j] = acc[static_cast<std::size_t>(j)].value();
  return out;
}

Eigen::MatrixXd BinomialRegression::hessian(const Eigen::VectorXd& coef) const {
  Eigen::VectorXd curvature = Eigen::VectorXd::Zero(units());
  for (Eigen::Index i = 0; i < units(); ++i) {
    curvature[i] =
        binomial_curvature_factor(design_.row(i).dot(coef), successes_[i], trials_[i], link_);
  }
  return design_.transpose() * curvature.asDiagonal() * design_;
}

Eigen::MatrixXd BinomialRegression::expected_information(const Eigen::VectorXd& coef) const {
  Eigen::VectorXd weight = Eigen::VectorXd::Zero(units());
  for (Eigen::Index i = 0; i < units(); ++i) {
    const double t = trials_[i];
    if (t <= 0) continue;
    const double eta = design_.row(i).dot(coef);
    weight[i] = t * link_.density(eta) * link_.score_weight(eta);
  }
  return design_.transpose() * weight.asDiagonal() * design_;
}

double BinomialRegression::pooled_proportion() const {
  double k = 0.0, t = 0.0;
  for (Eigen::Index i = 0; i < units(); ++i) {
    if (trials_[i] <= 0) continue;
    k += successes_[i];
    t += trials_[i];
  }
  return t > 0 ? k / t : 0.0;
}

Eigen::Index BinomialRegression::informative_rank() const {
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < units(); ++i)
    if (trials_[i] > 0) rows.push_back(i);
  if (rows.empty()) return 0;
  Eigen::MatrixXd sub(static_cast<Eigen::Index>(rows.size()), dimension());
  for (std::size_t r = 0; r < rows.size(); ++r) sub.row(static_cast<Eigen::Index>(r)) = design_.row(rows[r]);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(sub);
  return qr.rank();
}

Eigen::VectorXd default_start(const BinomialRegression& model) {
  Eigen::VectorXd start = Eigen::VectorXd::Zero(model.dimension());
  double total_trials = 0.0;
  for (Eigen::Index i = 0; i < model.units(); ++i) total_trials += std::max(0.0, model.trials()[i]);
  double p = model.pooled_proportion();
  if (total_trials > 0) {
    const double guard = 0.5 / total_trials;
    p = std::clamp(p, guard, 1.0 - guard);
  } else {
    p = 0.5;
  }
  if (start.size() > 0) start[0] = model.link().forward(p);
  return start;
}

GlmFit fit_newton(const BinomialRegression& model, const Eigen::VectorXd& start,
                  const NewtonOptions& options) {
  GlmFit fit;
  fit.coef = start;
  double loglik = model.log_likelihood(fit.coef);

  const auto within_limit = [&](const Eigen::VectorXd& coef) {
    return (model.design() * coef).cwiseAbs().maxCoeff() <= options.eta_limit;
  };

  for (fit.iterations = 0; fit.iterations <= options.max_iterations; ++fit.iterations) {
    const Eigen::VectorXd g = model.score(fit.coef);
    Eigen::MatrixXd info = -model.hessian(fit.coef);
    Eigen::LLT<Eigen::MatrixXd> llt(info);
    if (llt.info() != Eigen::Success) {
      info = model.expected_information(fit.coef);
      llt.compute(info);
      if (llt.info() != Eigen::Success) break;
    }
    const Eigen::VectorXd step = llt.solve(g);
    const double decrement = g.dot(step);
    fit.max_abs_score = g.size() ? g.cwiseAbs().maxCoeff() : 0.0;

    // The decrement test separates a true optimum from a likelihood that
    // keeps rising toward a boundary with an already tiny gradient.
    if ((fit.max_abs_score <= options.score_tolerance && decrement <= 1e-16) ||
        decrement <= 1e-24) {
      fit.converged = true;
      break;
    }
    if (fit.iterations == options.max_iterations) break;

    bool accepted = false;
    double scale = 1.0;
    for (int h = 0; h <= options.max_halvings; ++h, scale *= 0.5) {
      const Eigen::VectorXd candidate = fit.coef + scale * step;
      if (!within_limit(candidate)) continue;
      const double candidate_loglik = model.log_likelihood(candidate);
      if (std::isfinite(candidate_loglik) &&
          candidate_loglik >= loglik - 1e-12 * (1.0 + std::abs(loglik))) {
        fit.coef = candidate;
        loglik = candidate_loglik;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  fit.loglik = loglik;
  return fit;
}

}  // namespace gformula
