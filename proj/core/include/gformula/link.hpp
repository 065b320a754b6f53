#pragma once

#include <string_view>

namespace gformula {

enum class LinkKind { logit, probit };

std::string_view to_string(LinkKind kind) noexcept;
LinkKind parse_link_kind(std::string_view text);

// Monotone link g mapping probabilities to the real line. The member
// functions do not validate their arguments; use link_eval for a checked
// inverse.
class LinkFunction {
 public:
  constexpr LinkFunction() = default;
  constexpr explicit LinkFunction(LinkKind kind) : kind_(kind) {}

  constexpr LinkKind kind() const noexcept { return kind_; }

  double forward(double p) const;              // g(p)
  double inverse(double eta) const;            // g^{-1}(eta)
  double inverse_complement(double eta) const; // 1 - g^{-1}(eta), without cancellation
  double density(double eta) const;            // d g^{-1} / d eta
  double density_derivative(double eta) const; // d^2 g^{-1} / d eta^2

  double log_inverse(double eta) const;            // log g^{-1}(eta)
  double log_inverse_complement(double eta) const; // log(1 - g^{-1}(eta))

  // w(eta) = density / (mu (1 - mu)), the factor turning a binomial residual
  // into a score contribution, and its derivative. Both are 1 and 0 under
  // the canonical logit link.
  double score_weight(double eta) const;
  double score_weight_derivative(double eta) const;

  friend constexpr bool operator==(LinkFunction, LinkFunction) = default;

 private:
  LinkKind kind_ = LinkKind::logit;
};

// Checked g^{-1}(eta); throws Error(domain) for non-finite eta.
double link_eval(const LinkFunction& link, double eta);

}  // namespace gformula
