#include "gformula/link.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <boost/math/special_functions/erf.hpp>

#include "gformula/error.hpp"

namespace gformula {
namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

// log(1 + exp(x)) without overflow.
double softplus(double x) {
  if (x > 0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }
double normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

// log Phi(x); the asymptotic Mills-ratio series takes over where Phi(x)
// would underflow.
double log_normal_cdf(double x) {
  if (x > -30.0) return std::log(normal_cdf(x));
  const double r = 1.0 / (x * x);
  const double series = 1.0 - r * (1.0 - r * (3.0 - r * (15.0 - r * (105.0 - r * (945.0 - r * 10395.0)))));
  return std::log(kInvSqrt2Pi) - 0.5 * x * x - std::log(-x) + std::log(series);
}

}  // namespace

std::string_view to_string(LinkKind kind) noexcept {
  return kind == LinkKind::probit ? "probit" : "logit";
}

LinkKind parse_link_kind(std::string_view text) {
  if (text == "logit") return LinkKind::logit;
  if (text == "probit") return LinkKind::probit;
  throw Error(ErrorKind::config, "unknown link '" + std::string(text) + "'");
}

double LinkFunction::forward(double p) const {
  if (kind_ == LinkKind::logit) return std::log(p) - std::log1p(-p);
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double LinkFunction::inverse(double eta) const {
  if (kind_ == LinkKind::logit) {
    if (eta >= 0) return 1.0 / (1.0 + std::exp(-eta));
    const double e = std::exp(eta);
    return e / (1.0 + e);
  }
  return normal_cdf(eta);
}

double LinkFunction::inverse_complement(double eta) const { return inverse(-eta); }

double LinkFunction::density(double eta) const {
  if (kind_ == LinkKind::logit) {
    const double e = std::exp(-std::abs(eta));
    return e / ((1.0 + e) * (1.0 + e));
  }
  return normal_pdf(eta);
}

double LinkFunction::density_derivative(double eta) const {
  if (kind_ == LinkKind::logit) {
    const double mu = inverse(eta);
    return density(eta) * (1.0 - 2.0 * mu);
  }
  return -eta * normal_pdf(eta);
}

double LinkFunction::log_inverse(double eta) const {
  if (kind_ == LinkKind::logit) return -softplus(-eta);
  return log_normal_cdf(eta);
}

double LinkFunction::log_inverse_complement(double eta) const {
  if (kind_ == LinkKind::logit) return -softplus(eta);
  return log_normal_cdf(-eta);
}

double LinkFunction::score_weight(double eta) const {
  if (kind_ == LinkKind::logit) return 1.0;
  if (std::abs(eta) < 30.0) return normal_pdf(eta) / (normal_cdf(eta) * normal_cdf(-eta));
  return std::exp(-0.5 * eta * eta + std::log(kInvSqrt2Pi) - log_normal_cdf(eta) - log_normal_cdf(-eta));
}

double LinkFunction::score_weight_derivative(double eta) const {
  if (kind_ == LinkKind::logit) return 0.0;
  const double w = score_weight(eta);
  return -eta * w - w * w * (1.0 - 2.0 * normal_cdf(eta));
}

double link_eval(const LinkFunction& link, double eta) {
  if (!std::isfinite(eta)) throw Error(ErrorKind::domain, "link_eval: linear predictor is not finite");
  return link.inverse(eta);
}

}  // namespace gformula
