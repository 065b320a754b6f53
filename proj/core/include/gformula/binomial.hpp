#pragma once

#include <span>
#include <vector>

namespace gformula {

// log(n!) from a precomputed table (lgamma beyond the table).
double log_factorial(int n);

double log_choose(int n, int k);

// C(n,k) p^k (1-p)^(n-k), evaluated in log space. Throws Error(domain) when
// k lies outside [0, n] or p outside [0, 1].
double binomial_pmf(int n, int k, double p);

// Fills out[k] = binomial_pmf(n, k, p) for k = 0..n; out.size() must be n+1.
// Arguments are not validated.
void binomial_pmf_row(int n, double p, std::span<double> out);
std::vector<double> binomial_pmf_row(int n, double p);

}  // namespace gformula
