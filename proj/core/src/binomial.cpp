#include "gformula/binomial.hpp"

#include <array>
#include <cmath>
#include <string>

#include "gformula/error.hpp"

namespace gformula {
namespace {

constexpr int kTableSize = 1 << 17;

const std::vector<double>& log_factorial_table() {
  static const std::vector<double> table = [] {
    std::vector<double> t(kTableSize);
    for (int i = 0; i < kTableSize; ++i) t[i] = std::lgamma(static_cast<double>(i) + 1.0);
    return t;
  }();
  return table;
}

}  // namespace

double log_factorial(int n) {
  if (n < kTableSize) return log_factorial_table()[static_cast<std::size_t>(n)];
  return std::lgamma(static_cast<double>(n) + 1.0);
}

double log_choose(int n, int k) {
  return log_factorial(n) - log_factorial(k) - log_factorial(n - k);
}

double binomial_pmf(int n, int k, double p) {
  if (n < 0 || k < 0 || k > n)
    throw Error(ErrorKind::domain, "binomial_pmf: k=" + std::to_string(k) +
                                       " outside [0, " + std::to_string(n) + "]");
  if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorKind::domain, "binomial_pmf: p outside [0,1]");
  if (p == 0.0) return k == 0 ? 1.0 : 0.0;
  if (p == 1.0) return k == n ? 1.0 : 0.0;
  return std::exp(log_choose(n, k) + k * std::log(p) + (n - k) * std::log1p(-p));
}

void binomial_pmf_row(int n, double p, std::span<double> out) {
  if (p <= 0.0 || p >= 1.0) {
    for (auto& v : out) v = 0.0;
    out[p <= 0.0 ? 0 : static_cast<std::size_t>(n)] = 1.0;
    return;
  }
  const double lp = std::log(p);
  const double lq = std::log1p(-p);
  const double lnf = log_factorial(n);
  for (int k = 0; k <= n; ++k)
    out[static_cast<std::size_t>(k)] =
        std::exp(lnf - log_factorial(k) - log_factorial(n - k) + k * lp + (n - k) * lq);
}

std::vector<double> binomial_pmf_row(int n, double p) {
  std::vector<double> out(static_cast<std::size_t>(n) + 1);
  binomial_pmf_row(n, p, out);
  return out;
}

}  // namespace gformula
