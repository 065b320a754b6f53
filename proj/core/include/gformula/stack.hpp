#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gformula/link.hpp"
#include "gformula/mle.hpp"
#include "gformula/policy.hpp"
#include "gformula/sandwich.hpp"
#include "gformula/strata.hpp"
#include "gformula/types.hpp"

namespace gformula {

// Stacked parameter vector with named blocks. For the single-stratum
// g-formula the order is (rho, gamma0[k], beta, mu[k], delta[c]).
struct ThetaStack {
  Eigen::VectorXd theta;
  std::vector<ParameterBlock> blocks;

  const ParameterBlock& block(const std::string& name) const;
  double value(const std::string& name) const;
};

// Everything psi needs besides the data and theta. Contrasts index into
// alphas as (alpha, alpha').
struct StackContext {
  LinkFunction treatment_link;
  LinkFunction outcome_link;
  bool outcome_has_s = true;
  std::size_t covariate_dimension = 0;
  std::vector<double> alphas;
  std::vector<std::pair<std::size_t, std::size_t>> contrasts;

  Eigen::Index treatment_dimension() const { return 1 + static_cast<Eigen::Index>(covariate_dimension); }
  Eigen::Index outcome_dimension() const {
    return 1 + static_cast<Eigen::Index>(covariate_dimension) + (outcome_has_s ? 1 : 0);
  }
  Eigen::Index dimension() const;
  std::vector<ParameterBlock> blocks() const;
};

ThetaStack pack_theta(const StackContext& context, const TreatmentModelFit& treatment,
                      std::span<const PolicySpec> policies, const OutcomeModelFit& outcome,
                      std::span<const double> mu, std::span<const double> delta);

// Per-cluster estimating function: treatment and outcome scores,
// g^{-1}(gamma0 + rho1' L) - alpha per policy, the cluster's standardized
// mean minus mu per policy, and mean(alpha) - mean(alpha') - delta per
// contrast (the difference of the two mu rows shifted by mu - mu' - delta,
// which vanishes at the solution).
Eigen::VectorXd psi_eval(const ClusterRecord& record, const Eigen::VectorXd& theta,
                         const StackContext& context);

// Analytic d psi / d theta' for one cluster.
Eigen::MatrixXd psi_jacobian(const ClusterRecord& record, const Eigen::VectorXd& theta,
                             const StackContext& context);

class GFormulaEquations final : public EstimatingEquations {
 public:
  GFormulaEquations(std::span<const ClusterRecord> data, StackContext context);

  Eigen::Index dimension() const override { return context_.dimension(); }
  std::size_t units() const override { return data_.size(); }
  Eigen::VectorXd psi(std::size_t unit, const Eigen::VectorXd& theta) const override;
  Eigen::MatrixXd mean_jacobian(const Eigen::VectorXd& theta) const override;
  std::vector<ParameterBlock> blocks() const override { return context_.blocks(); }

  const StackContext& context() const { return context_; }

 private:
  std::span<const ClusterRecord> data_;
  StackContext context_;
};

// Two-strata stack: (rho_stratum2, rho_stratum1, gamma0_stratum2[k],
// gamma0_stratum1[k], beta, mu[k], delta[c]). Policies are (alpha1, alpha2)
// pairs. Score blocks of the Jacobian are analytic, the rest central
// differences.
struct StrataStackContext {
  LinkFunction treatment_link;
  LinkFunction outcome_link;
  std::size_t covariate_dimension = 0;
  std::vector<std::pair<double, double>> alphas;
  std::vector<std::pair<std::size_t, std::size_t>> contrasts;

  Eigen::Index dimension() const;
  std::vector<ParameterBlock> blocks() const;
};

ThetaStack pack_strata_theta(const StrataStackContext& context, const StrataFits& fits,
                             std::span<const StrataPolicy> policies, std::span<const double> mu,
                             std::span<const double> delta);

class StrataEquations final : public EstimatingEquations {
 public:
  StrataEquations(std::span<const ClusterRecord> data, StrataStackContext context);

  Eigen::Index dimension() const override { return context_.dimension(); }
  std::size_t units() const override { return data_.size(); }
  Eigen::VectorXd psi(std::size_t unit, const Eigen::VectorXd& theta) const override;
  Eigen::MatrixXd mean_jacobian(const Eigen::VectorXd& theta) const override;
  std::vector<ParameterBlock> blocks() const override { return context_.blocks(); }

 private:
  std::span<const ClusterRecord> data_;
  StrataStackContext context_;
};

}  // namespace gformula
