#pragma once

#include <Eigen/Dense>

#include "gformula/link.hpp"

namespace gformula {

// Factors of one binomial unit at linear predictor eta: the unit score is
// x * score factor and the unit Hessian x x' * curvature factor.
double binomial_score_factor(double eta, double successes, double trials, const LinkFunction& link);
double binomial_curvature_factor(double eta, double successes, double trials,
                                 const LinkFunction& link);

// Binomial regression: unit i contributes successes_i out of trials_i with
// success probability g^{-1}(x_i' b). Units with zero trials contribute
// nothing. Successes need not be integral.
class BinomialRegression {
 public:
  BinomialRegression(Eigen::MatrixXd design, Eigen::VectorXd successes,
                     Eigen::VectorXd trials, LinkFunction link);

  Eigen::Index units() const { return design_.rows(); }
  Eigen::Index dimension() const { return design_.cols(); }
  const Eigen::MatrixXd& design() const { return design_; }
  const Eigen::VectorXd& successes() const { return successes_; }
  const Eigen::VectorXd& trials() const { return trials_; }
  const LinkFunction& link() const { return link_; }

  double log_likelihood(const Eigen::VectorXd& coef) const;
  Eigen::VectorXd score(const Eigen::VectorXd& coef) const;
  Eigen::MatrixXd hessian(const Eigen::VectorXd& coef) const;
  Eigen::MatrixXd expected_information(const Eigen::VectorXd& coef) const;

  Eigen::VectorXd unit_score(Eigen::Index i, const Eigen::VectorXd& coef) const;
  Eigen::MatrixXd unit_hessian(Eigen::Index i, const Eigen::VectorXd& coef) const;

  // Pooled success proportion over units with positive trials.
  double pooled_proportion() const;
  // Rank of the design restricted to units with positive trials.
  Eigen::Index informative_rank() const;

 private:
  Eigen::MatrixXd design_;
  Eigen::VectorXd successes_;
  Eigen::VectorXd trials_;
  LinkFunction link_;
};

struct NewtonOptions {
  int max_iterations = 100;
  int max_halvings = 30;
  double score_tolerance = 1e-8;
  double eta_limit = 30.0;
};

struct GlmFit {
  Eigen::VectorXd coef;
  bool converged = false;
  int iterations = 0;
  double loglik = 0.0;
  double max_abs_score = 0.0;
};

// Intercept (first column) at g(pooled proportion), other coefficients 0. The
// pooled proportion is pulled half a trial away from 0 and 1.
Eigen::VectorXd default_start(const BinomialRegression& model);

// Newton-Raphson with step halving. A fit is converged when the summed score
// is within tolerance and the Newton decrement has collapsed; if no halving
// of a step keeps every |eta| within eta_limit while not decreasing the
// log-likelihood, the fit stops with converged = false.
GlmFit fit_newton(const BinomialRegression& model, const Eigen::VectorXd& start,
                  const NewtonOptions& options = {});

}  // namespace gformula
