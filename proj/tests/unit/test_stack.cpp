#include <gtest/gtest.h>

#include "gformula/estimator.hpp"
#include "gformula/gformula.hpp"
#include "gformula/stack.hpp"
#include "gformula/strata.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace gformula;

namespace {

StackContext context_for(const EstimationOptions& o, const EstimateReport& r, std::size_t dim) {
  StackContext c;
  c.treatment_link = o.treatment_link;
  c.outcome_link = o.outcome_link;
  c.outcome_has_s = o.include_s;
  c.covariate_dimension = dim;
  for (const auto& p : r.policies) c.alphas.push_back(p.alpha);
  for (const auto& d : r.contrasts) {
    std::size_t a = 0, b = 0;
    for (std::size_t k = 0; k < c.alphas.size(); ++k) {
      if (c.alphas[k] == d.alpha) a = k;
      if (c.alphas[k] == d.alpha_prime) b = k;
    }
    c.contrasts.emplace_back(a, b);
  }
  return c;
}

EstimationOptions options(LinkKind link = LinkKind::logit) {
  EstimationOptions o;
  o.treatment_link = LinkFunction(link);
  o.outcome_link = LinkFunction(link);
  o.alphas = {0.3, 0.5, 0.7};
  o.contrasts = {{0.7, 0.3}, {0.5, 0.3}};
  return o;
}

Eigen::MatrixXd fd_mean_jacobian(const EstimatingEquations& eq, const Eigen::VectorXd& theta) {
  return oracle::central_jacobian([&](const Eigen::VectorXd& t) { return mean_psi(eq, t); }, theta);
}

void expect_jacobians_agree(const Eigen::MatrixXd& analytic, const Eigen::MatrixXd& fd) {
  const double scale = std::max(1.0, analytic.lpNorm<Eigen::Infinity>());
  for (Eigen::Index i = 0; i < analytic.rows(); ++i)
    for (Eigen::Index j = 0; j < analytic.cols(); ++j)
      EXPECT_NEAR(analytic(i, j), fd(i, j), 1e-5 * std::max(std::abs(fd(i, j)), 1e-2 * scale))
          << "row " << i << " col " << j;
}

}  // namespace

TEST(Stack, MeanPsiVanishesAtEstimate) {
  gen::Rng rng(71);
  for (int rep = 0; rep < 5; ++rep) {
    const Dataset data = gen::random_dataset(rng, {});
    const auto o = options();
    const EstimateReport r = estimate_policies(data, o);
    const GFormulaEquations eq(data, context_for(o, r, 2));
    EXPECT_LT(mean_psi(eq, r.theta.theta).lpNorm<Eigen::Infinity>(), 1e-8);
  }
}

TEST(Stack, AnalyticJacobianMatchesFiniteDifferences) {
  gen::Rng rng(72);
  for (int rep = 0; rep < 20; ++rep) {
    gen::DatasetShape shape;
    shape.outcome_def = static_cast<OutcomeDefinition>(rep % 3);
    const Dataset data = gen::random_dataset(rng, shape);
    auto o = options(rep % 4 == 3 ? LinkKind::probit : LinkKind::logit);
    o.outcome_def = shape.outcome_def;
    const EstimateReport r = estimate_policies(data, o);
    const GFormulaEquations eq(data, context_for(o, r, 2));
    expect_jacobians_agree(eq.mean_jacobian(r.theta.theta), fd_mean_jacobian(eq, r.theta.theta));
    EXPECT_LT((eq.mean_jacobian(r.theta.theta) + r.sandwich.U).lpNorm<Eigen::Infinity>(), 1e-14);
  }
}

TEST(Stack, BlockTriangularStructure) {
  gen::Rng rng(73);
  const Dataset data = gen::random_dataset(rng, {});
  const auto o = options();
  const EstimateReport r = estimate_policies(data, o);
  const GFormulaEquations eq(data, context_for(o, r, 2));
  const Eigen::MatrixXd J = eq.mean_jacobian(r.theta.theta);
  const auto& rho = r.theta.block("rho");
  const auto& beta = r.theta.block("beta");
  for (Eigen::Index i = rho.offset; i < rho.offset + rho.size; ++i)
    for (Eigen::Index j = 0; j < J.cols(); ++j) {
      const bool outside = j < rho.offset || j >= rho.offset + rho.size;
      if (outside) {
        EXPECT_EQ(J(i, j), 0.0);
      }
    }
  for (Eigen::Index i = beta.offset; i < beta.offset + beta.size; ++i)
    for (Eigen::Index j = 0; j < J.cols(); ++j) {
      const bool outside = j < beta.offset || j >= beta.offset + beta.size;
      if (outside) {
        EXPECT_EQ(J(i, j), 0.0);
      }
    }
}

TEST(Stack, DeltaMethodConsistency) {
  gen::Rng rng(74);
  const Dataset data = gen::random_dataset(rng, {});
  const EstimateReport r = estimate_policies(data, options());
  const auto& S = r.sandwich.sigma;
  const Eigen::Index a = r.theta.block("mu[0.7]").offset;
  const Eigen::Index b = r.theta.block("mu[0.3]").offset;
  const Eigen::Index d = r.theta.block("delta[0.7,0.3]").offset;
  EXPECT_NEAR(S(d, d), S(a, a) + S(b, b) - 2 * S(a, b), 1e-12);
  EXPECT_NEAR(r.contrast(0.7, 0.3).se * r.contrast(0.7, 0.3).se, S(a, a) + S(b, b) - 2 * S(a, b), 1e-12);
}

TEST(Stack, SingleClusterMuRowIsEnumerationMinusMu) {
  gen::Rng rng(75);
  const Dataset data = gen::random_dataset(rng, {});
  const auto o = options();
  const EstimateReport r = estimate_policies(data, o);
  const StackContext ctx = context_for(o, r, 2);
  const auto& rec = data.front();
  const Eigen::VectorXd psi = psi_eval(rec, r.theta.theta, ctx);
  oracle::OutcomeCoefs c;
  c.intercept = r.outcome.intercept();
  c.covariates = {r.outcome.beta[1], r.outcome.beta[2]};
  c.s = r.outcome.s_coef();
  const std::vector<double> slopes{r.treatment.rho[1], r.treatment.rho[2]};
  Eigen::Index mu_row = -1;
  for (const auto& b : r.theta.blocks)
    if (b.name.starts_with("mu[")) {
      mu_row = b.offset;
      break;
    }
  for (const auto& p : r.policies) {
    const double expected =
        oracle::mu_by_enumeration(std::span<const ClusterRecord>(&rec, 1), p.gamma0, slopes, c) - p.mu;
    EXPECT_NEAR(psi[mu_row++], expected, 1e-12);
  }
}

TEST(Stack, FactualPolicyRowAveragesToZero) {
  gen::Rng rng(76);
  const Dataset data = gen::random_dataset(rng, {});
  const auto fit = fit_treatment_model(data);
  double factual = 0.0;
  for (const auto& r : data)
    factual += oracle::expit(fit.rho[0] + fit.rho[1] * r.covariates[0] + fit.rho[2] * r.covariates[1]);
  factual /= data.size();
  EstimationOptions o = options();
  o.alphas = {factual};
  o.contrasts = {};
  const EstimateReport r = estimate_policies(data, o);
  EXPECT_NEAR(r.policies[0].gamma0, fit.rho[0], 1e-10);
  const GFormulaEquations eq(data, context_for(o, r, 2));
  const Eigen::Index g = r.theta.blocks[1].offset;
  EXPECT_NEAR(mean_psi(eq, r.theta.theta)[g], 0.0, 1e-12);
}

TEST(Stack, StrataJacobianMatchesFiniteDifferences) {
  gen::Rng rng(77);
  for (int rep = 0; rep < 5; ++rep) {
    gen::DatasetShape shape;
    shape.strata = true;
    shape.m_min = 80;
    shape.m_max = 120;
    const Dataset data = gen::random_dataset(rng, shape);
    EstimationOptions o = options();
    o.strata = true;
    const EstimateReport r = estimate_policies(data, o);
    StrataStackContext ctx;
    ctx.covariate_dimension = 2;
    for (const auto& p : r.policies) ctx.alphas.emplace_back(p.alpha, p.alpha);
    ctx.contrasts = {{2, 0}, {1, 0}};
    const StrataEquations eq(data, ctx);
    EXPECT_LT(mean_psi(eq, r.theta.theta).lpNorm<Eigen::Infinity>(), 1e-8);
    expect_jacobians_agree(eq.mean_jacobian(r.theta.theta), fd_mean_jacobian(eq, r.theta.theta));
  }
}
