#include "gformula/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "gformula/error.hpp"
#include "gformula/execution.hpp"

namespace gformula {
namespace {

constexpr double kInitialHalfWidth = 20.0;
constexpr double kInterceptLimit = 50.0;

struct MeanAndSlope {
  double mean;
  double slope;
};

MeanAndSlope evaluate(double gamma0, std::span<const double> offsets,
                      std::span<const double> weights, const LinkFunction& link) {
  CompensatedSum value, slope, total;
  for (std::size_t a = 0; a < offsets.size(); ++a) {
    const double w = weights.empty() ? 1.0 : weights[a];
    value.add(w * link.inverse(gamma0 + offsets[a]));
    slope.add(w * link.density(gamma0 + offsets[a]));
    total.add(w);
  }
  return {value.value() / total.value(), slope.value() / total.value()};
}

}  // namespace

double mean_propensity(double gamma0, std::span<const double> offsets,
                       std::span<const double> weights, const LinkFunction& link) {
  return evaluate(gamma0, offsets, weights, link).mean;
}

InterceptSolution solve_intercept(double alpha, std::span<const double> offsets,
                                  std::span<const double> weights, const LinkFunction& link) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw Error(ErrorKind::domain, "policy alpha must lie in (0,1), got " + std::to_string(alpha));
  if (offsets.empty()) throw Error(ErrorKind::data, "policy solver: no clusters");
  if (!weights.empty() && weights.size() != offsets.size())
    throw Error(ErrorKind::data, "policy solver: weight count differs from cluster count");
  double weight_total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw Error(ErrorKind::data, "policy solver: invalid weight");
    weight_total += w;
  }
  if (!weights.empty() && weight_total <= 0.0)
    throw Error(ErrorKind::data, "policy solver: weights sum to zero");

  const auto residual = [&](double g) { return evaluate(g, offsets, weights, link).mean - alpha; };

  double offset_mean = 0.0;
  {
    CompensatedSum num;
    for (std::size_t a = 0; a < offsets.size(); ++a)
      num.add((weights.empty() ? 1.0 : weights[a]) * offsets[a]);
    offset_mean = num.value() / (weights.empty() ? static_cast<double>(offsets.size()) : weight_total);
  }
  const double center = link.forward(alpha) - offset_mean;

  double half = kInitialHalfWidth;
  double lo = std::max(center - half, -kInterceptLimit);
  double hi = std::min(center + half, kInterceptLimit);
  while (residual(lo) > 0.0 || residual(hi) < 0.0) {
    if (lo <= -kInterceptLimit && hi >= kInterceptLimit)
      throw Error(ErrorKind::unsolvable_policy,
                  "policy alpha=" + std::to_string(alpha) +
                      ": no intercept within |gamma0| <= 50 attains the target");
    half *= 1.5;
    lo = std::max(center - half, -kInterceptLimit);
    hi = std::min(center + half, kInterceptLimit);
  }

  InterceptSolution out;
  double g = std::clamp(center, lo, hi);
  for (out.iterations = 0; out.iterations < 300; ++out.iterations) {
    const auto [mean, slope] = evaluate(g, offsets, weights, link);
    const double f = mean - alpha;
    if (f == 0.0) break;
    if (f < 0.0)
      lo = g;
    else
      hi = g;
    double next = slope > 0.0 ? g - f / slope : std::numeric_limits<double>::quiet_NaN();
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == g || hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(g))) {
      g = next;
      break;
    }
    // Newton has reached the rounding floor of the residual.
    if (std::abs(f) <= 1e-15 && std::abs(next - g) <= 1e-13 * std::max(1.0, std::abs(g))) {
      g = next;
      break;
    }
    g = next;
  }
  out.gamma0 = g;
  out.residual = residual(g);
  if (!(std::abs(out.residual) <= kPolicyResidualTolerance))
    throw Error(ErrorKind::unsolvable_policy, "policy alpha=" + std::to_string(alpha) +
                                                  ": root residual " + std::to_string(out.residual) +
                                                  " exceeds tolerance");
  return out;
}

PolicySpec solve_gamma0(double alpha, const Eigen::VectorXd& rho_slopes,
                        const Eigen::MatrixXd& covariates, const LinkFunction& link,
                        std::span<const double> weights) {
  if (covariates.cols() != rho_slopes.size())
    throw Error(ErrorKind::data, "policy solver: covariate dimension differs from slope dimension");
  std::vector<double> offsets(static_cast<std::size_t>(covariates.rows()));
  for (Eigen::Index i = 0; i < covariates.rows(); ++i)
    offsets[static_cast<std::size_t>(i)] = covariates.row(i).dot(rho_slopes);
  const InterceptSolution sol = solve_intercept(alpha, offsets, weights, link);
  PolicySpec spec;
  spec.alpha = alpha;
  spec.gamma0 = sol.gamma0;
  spec.link = link;
  spec.slopes = rho_slopes;
  spec.residual = sol.residual;
  spec.solved = true;
  return spec;
}

std::vector<double> treatment_offsets(const Eigen::VectorXd& rho_slopes,
                                      std::span<const ClusterRecord> data) {
  std::vector<double> offsets(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& cov = data[i].covariates;
    if (static_cast<Eigen::Index>(cov.size()) != rho_slopes.size())
      throw Error(ErrorKind::data, "cluster " + data[i].id +
                                       ": covariate dimension differs from slope dimension");
    double o = 0.0;
    for (std::size_t j = 0; j < cov.size(); ++j) o += rho_slopes[static_cast<Eigen::Index>(j)] * cov[j];
    offsets[i] = o;
  }
  return offsets;
}

PolicySpec solve_gamma0(double alpha, const Eigen::VectorXd& rho_slopes,
                        std::span<const ClusterRecord> data, const LinkFunction& link,
                        std::span<const double> weights) {
  const std::vector<double> offsets = treatment_offsets(rho_slopes, data);
  const InterceptSolution sol = solve_intercept(alpha, offsets, weights, link);
  PolicySpec spec;
  spec.alpha = alpha;
  spec.gamma0 = sol.gamma0;
  spec.link = link;
  spec.slopes = rho_slopes;
  spec.residual = sol.residual;
  spec.solved = true;
  return spec;
}

}  // namespace gformula
