#include "gformula/mle.hpp"

#include <string>

#include "gformula/error.hpp"

namespace gformula {
namespace {

Eigen::MatrixXd covariate_design(std::span<const ClusterRecord> data, std::size_t dim,
                                 Eigen::Index extra) {
  const auto m = static_cast<Eigen::Index>(data.size());
  Eigen::MatrixXd x(m, 1 + static_cast<Eigen::Index>(dim) + extra);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& record = data[static_cast<std::size_t>(i)];
    x(i, 0) = 1.0;
    for (std::size_t j = 0; j < dim; ++j) x(i, 1 + static_cast<Eigen::Index>(j)) = record.covariates[j];
  }
  return x;
}

GlmFit run_fit(const BinomialRegression& model, const NewtonOptions& options, const char* what) {
  if (model.informative_rank() < model.dimension())
    throw Error(ErrorKind::singular_design,
                std::string(what) + ": design matrix is rank deficient (rank " +
                    std::to_string(model.informative_rank()) + " < " +
                    std::to_string(model.dimension()) + ")");
  return fit_newton(model, default_start(model), options);
}

TreatmentModelFit to_treatment_fit(GlmFit&& glm, LinkFunction link) {
  TreatmentModelFit fit;
  fit.rho = std::move(glm.coef);
  fit.link = link;
  fit.converged = glm.converged;
  fit.iterations = glm.iterations;
  fit.loglik = glm.loglik;
  fit.max_abs_score = glm.max_abs_score;
  return fit;
}

}  // namespace

Eigen::Index OutcomeModelFit::covariate_dimension() const {
  return beta.size() - 1 - (terms.s ? 1 : 0) - (terms.s2 ? 1 : 0);
}

double OutcomeModelFit::s_coef() const {
  return terms.s ? beta[1 + covariate_dimension()] : 0.0;
}

double OutcomeModelFit::s2_coef() const {
  return terms.s2 ? beta[beta.size() - 1] : 0.0;
}

double OutcomeModelFit::base_eta(std::span<const double> covariates) const {
  double eta = beta[0];
  for (std::size_t j = 0; j < covariates.size(); ++j)
    eta += beta[1 + static_cast<Eigen::Index>(j)] * covariates[j];
  return eta;
}

BinomialRegression treatment_regression(std::span<const ClusterRecord> data, LinkFunction link) {
  const std::size_t dim = validate_dataset(data);
  const auto m = static_cast<Eigen::Index>(data.size());
  Eigen::VectorXd successes(m), trials(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& record = data[static_cast<std::size_t>(i)];
    successes[i] = record.treated();
    trials[i] = record.n;
  }
  return {covariate_design(data, dim, 0), std::move(successes), std::move(trials), link};
}

BinomialRegression stratum1_treatment_regression(std::span<const ClusterRecord> data,
                                                 LinkFunction link) {
  const std::size_t dim = validate_dataset(data);
  require_strata(data);
  const auto m = static_cast<Eigen::Index>(data.size());
  Eigen::MatrixXd x = covariate_design(data, dim, 1);
  Eigen::VectorXd successes(m), trials(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& record = data[static_cast<std::size_t>(i)];
    x(i, x.cols() - 1) = *record.s2;
    successes[i] = record.treated();
    trials[i] = record.n;
  }
  return {std::move(x), std::move(successes), std::move(trials), link};
}

BinomialRegression stratum2_treatment_regression(std::span<const ClusterRecord> data,
                                                 LinkFunction link) {
  const std::size_t dim = validate_dataset(data);
  require_strata(data);
  const auto m = static_cast<Eigen::Index>(data.size());
  Eigen::VectorXd successes(m), trials(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& record = data[static_cast<std::size_t>(i)];
    successes[i] = record.treated_stratum2();
    trials[i] = *record.n2;
  }
  return {covariate_design(data, dim, 0), std::move(successes), std::move(trials), link};
}

BinomialRegression outcome_regression(std::span<const ClusterRecord> data, OutcomeTerms terms,
                                      LinkFunction link) {
  const std::size_t dim = validate_dataset(data);
  if (terms.s2) require_strata(data);
  const auto m = static_cast<Eigen::Index>(data.size());
  const Eigen::Index extra = (terms.s ? 1 : 0) + (terms.s2 ? 1 : 0);
  Eigen::MatrixXd x = covariate_design(data, dim, extra);
  Eigen::VectorXd successes(m), trials(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& record = data[static_cast<std::size_t>(i)];
    Eigen::Index col = 1 + static_cast<Eigen::Index>(dim);
    if (terms.s) x(i, col++) = record.s;
    if (terms.s2) x(i, col++) = *record.s2;
    successes[i] = record.events();
    trials[i] = record.y_denominator;
  }
  return {std::move(x), std::move(successes), std::move(trials), link};
}

TreatmentModelFit fit_treatment_model(std::span<const ClusterRecord> data, LinkFunction link,
                                      const NewtonOptions& options) {
  const auto model = treatment_regression(data, link);
  return to_treatment_fit(run_fit(model, options, "treatment model"), link);
}

TreatmentModelFit fit_stratum1_treatment_model(std::span<const ClusterRecord> data,
                                               LinkFunction link, const NewtonOptions& options) {
  const auto model = stratum1_treatment_regression(data, link);
  return to_treatment_fit(run_fit(model, options, "stratum-1 treatment model"), link);
}

TreatmentModelFit fit_stratum2_treatment_model(std::span<const ClusterRecord> data,
                                               LinkFunction link, const NewtonOptions& options) {
  const auto model = stratum2_treatment_regression(data, link);
  double trials = 0.0;
  for (Eigen::Index i = 0; i < model.units(); ++i) trials += model.trials()[i];
  if (trials <= 0.0)
    throw Error(ErrorKind::empty_likelihood, "stratum-2 treatment model: no second-stratum members");
  return to_treatment_fit(run_fit(model, options, "stratum-2 treatment model"), link);
}

OutcomeModelFit fit_outcome_model(std::span<const ClusterRecord> data, OutcomeDefinition outcome_def,
                                  LinkFunction link, OutcomeTerms terms,
                                  const NewtonOptions& options) {
  validate_dataset(data);
  bool any = false;
  for (const auto& record : data) {
    if (record.y_denominator != outcome_denominator(outcome_def, record.n, record.s))
      throw Error(ErrorKind::data, "cluster " + record.id + ": outcome denominator " +
                                       std::to_string(record.y_denominator) + " does not match the " +
                                       std::string(to_string(outcome_def)) + " definition");
    any = any || record.y_denominator > 0;
  }
  if (!any) throw Error(ErrorKind::empty_likelihood, "outcome model: every outcome denominator is zero");

  const auto model = outcome_regression(data, terms, link);
  GlmFit glm = run_fit(model, options, "outcome model");
  OutcomeModelFit fit;
  fit.beta = std::move(glm.coef);
  fit.link = link;
  fit.outcome_def = outcome_def;
  fit.terms = terms;
  fit.converged = glm.converged;
  fit.iterations = glm.iterations;
  fit.loglik = glm.loglik;
  fit.max_abs_score = glm.max_abs_score;
  return fit;
}

}  // namespace gformula
