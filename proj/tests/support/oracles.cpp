#include "support/oracles.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <stdexcept>

namespace oracle {

long double choose(int n, int k) {
  if (k < 0 || k > n) return 0.0L;
  k = std::min(k, n - k);
  long double c = 1.0L;
  for (int i = 1; i <= k; ++i) c = c * static_cast<long double>(n - k + i) / static_cast<long double>(i);
  return c;
}

double binomial_pmf(int n, int k, double p) {
  const long double pk = std::pow(static_cast<long double>(p), k);
  const long double qk = std::pow(1.0L - static_cast<long double>(p), n - k);
  return static_cast<double>(choose(n, k) * pk * qk);
}

double expit(double eta) {
  const long double e = std::exp(-static_cast<long double>(eta));
  return static_cast<double>(1.0L / (1.0L + e));
}

double logit(double p) {
  const long double q = static_cast<long double>(p);
  return static_cast<double>(std::log(q / (1.0L - q)));
}

double normal_cdf_series(double x) {
  // Phi(x) = 1/2 + phi(x) * sum_k x^(2k+1) / (1*3*...*(2k+1))
  const long double xl = x;
  long double term = xl;
  long double sum = xl;
  for (int k = 1; k < 500; ++k) {
    term *= xl * xl / static_cast<long double>(2 * k + 1);
    sum += term;
    if (std::fabs(term) < 1e-30L * std::fabs(sum)) break;
  }
  const long double phi = std::exp(-xl * xl / 2.0L) / std::sqrt(2.0L * std::numbers::pi_v<long double>);
  return static_cast<double>(0.5L + phi * sum);
}

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

long double treatment_vector_prob(int n, int count, double p) {
  return std::pow(static_cast<long double>(p), count) *
         std::pow(1.0L - static_cast<long double>(p), n - count);
}

}  // namespace

double mu_by_enumeration(std::span<const gformula::ClusterRecord> data, double gamma0,
                         const std::vector<double>& slopes, const OutcomeCoefs& beta) {
  long double total = 0.0L;
  for (const auto& r : data) {
    if (r.n > 20) throw std::invalid_argument("enumeration oracle limited to n <= 20");
    const double p = expit(gamma0 + dot(slopes, r.covariates));
    const double base = beta.intercept + dot(beta.covariates, r.covariates);
    long double cluster = 0.0L;
    for (unsigned mask = 0; mask < (1u << r.n); ++mask) {
      const int count = std::popcount(mask);
      const double s = static_cast<double>(count) / r.n;
      cluster += treatment_vector_prob(r.n, count, p) * expit(base + beta.s * s);
    }
    total += cluster;
  }
  return static_cast<double>(total / static_cast<long double>(data.size()));
}

double mu_strata_by_enumeration(std::span<const gformula::ClusterRecord> data, double gamma1,
                                const std::vector<double>& slopes1, double slope_s2,
                                double gamma2, const std::vector<double>& slopes2,
                                const OutcomeCoefs& beta) {
  long double total = 0.0L;
  for (const auto& r : data) {
    const int n1 = r.n;
    const int n2 = r.n2.value_or(0);
    if (n1 + n2 > 22) throw std::invalid_argument("strata enumeration limited to 22 members");
    const double p2 = expit(gamma2 + dot(slopes2, r.covariates));
    const double base = beta.intercept + dot(beta.covariates, r.covariates);
    long double cluster = 0.0L;
    for (unsigned m2 = 0; m2 < (1u << n2); ++m2) {
      const int k2 = std::popcount(m2);
      const double s2 = n2 > 0 ? static_cast<double>(k2) / n2 : 0.0;
      const long double w2 = treatment_vector_prob(n2, k2, p2);
      const double p1 = expit(gamma1 + dot(slopes1, r.covariates) + slope_s2 * s2);
      for (unsigned m1 = 0; m1 < (1u << n1); ++m1) {
        const int k1 = std::popcount(m1);
        const double s1 = static_cast<double>(k1) / n1;
        cluster += w2 * treatment_vector_prob(n1, k1, p1) * expit(base + beta.s * s1 + beta.s2 * s2);
      }
    }
    total += cluster;
  }
  return static_cast<double>(total / static_cast<long double>(data.size()));
}

double gamma0_bisection(double alpha, std::span<const double> offsets, std::span<const double> weights) {
  auto mean = [&](long double g) {
    long double num = 0.0L, den = 0.0L;
    for (std::size_t i = 0; i < offsets.size(); ++i) {
      const long double w = weights.empty() ? 1.0L : weights[i];
      num += w / (1.0L + std::exp(-(g + offsets[i])));
      den += w;
    }
    return num / den;
  };
  long double lo = -60.0L, hi = 60.0L;
  for (int it = 0; it < 300; ++it) {
    const long double mid = (lo + hi) / 2.0L;
    (mean(mid) < alpha ? lo : hi) = mid;
  }
  return static_cast<double>((lo + hi) / 2.0L);
}

Eigen::VectorXd logistic_irls(const Eigen::MatrixXd& design, const Eigen::VectorXd& successes,
                              const Eigen::VectorXd& trials) {
  const Eigen::Index p = design.cols();
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  for (int it = 0; it < 500; ++it) {
    Eigen::MatrixXd xtwx = Eigen::MatrixXd::Zero(p, p);
    Eigen::VectorXd xtwz = Eigen::VectorXd::Zero(p);
    for (Eigen::Index i = 0; i < design.rows(); ++i) {
      if (trials[i] <= 0) continue;
      const double eta = design.row(i).dot(beta);
      const double mu = expit(eta);
      const double w = trials[i] * mu * (1.0 - mu);
      if (w <= 0) continue;
      const double z = eta + (successes[i] - trials[i] * mu) / w;
      xtwx += w * design.row(i).transpose() * design.row(i);
      xtwz += w * z * design.row(i).transpose();
    }
    const Eigen::VectorXd next = xtwx.ldlt().solve(xtwz);
    const double change = (next - beta).lpNorm<Eigen::Infinity>();
    beta = next;
    if (change < 1e-13) break;
  }
  return beta;
}

Eigen::MatrixXd central_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                                 const Eigen::VectorXd& x, double h) {
  const Eigen::VectorXd f0 = f(x);
  Eigen::MatrixXd jac(f0.size(), x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double step = h * std::max(1.0, std::abs(x[j]));
    Eigen::VectorXd up = x, down = x;
    up[j] += step;
    down[j] -= step;
    jac.col(j) = (f(up) - f(down)) / (2.0 * step);
  }
  return jac;
}

SimpleDesign standard_design() {
  SimpleDesign d;
  d.sizes = {8, 16, 20};
  d.size_probs = {0.4, 0.35, 0.25};
  d.l2_values = {0, 1, 2, 3, 4};
  d.l2_probs = {5.0 / 18, 3.0 / 18, 4.0 / 18, 5.0 / 18, 1.0 / 18};
  d.rho_l1 = -0.01;
  d.rho_l2 = -0.01;
  d.beta0 = logit(0.6);
  d.beta_l1 = -0.01;
  d.beta_s = -0.8;
  d.beta_l2 = -0.01;
  return d;
}

namespace {

struct SimpsonAtoms {
  std::vector<double> offsets, weights, base;
};

SimpsonAtoms simpson_atoms(const SimpleDesign& d, int panels) {
  if (panels % 2) ++panels;
  std::vector<double> l1, w1;
  if (d.l1_sd == 0.0) {
    l1 = {d.l1_mean};
    w1 = {1.0};
  } else {
    const double a = d.l1_mean - 12 * d.l1_sd;
    const double h = 24 * d.l1_sd / panels;
    for (int i = 0; i <= panels; ++i) {
      const double x = a + i * h;
      const double z = (x - d.l1_mean) / d.l1_sd;
      const double dens = std::exp(-z * z / 2) / (d.l1_sd * std::sqrt(2 * std::numbers::pi));
      const double coef = (i == 0 || i == panels) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      l1.push_back(x);
      w1.push_back(coef * h / 3 * dens);
    }
  }
  std::vector<double> offsets, weights, base;
  for (std::size_t i = 0; i < l1.size(); ++i)
    for (std::size_t j = 0; j < d.l2_values.size(); ++j) {
      offsets.push_back(d.rho_l1 * l1[i] + d.rho_l2 * d.l2_values[j]);
      base.push_back(d.beta0 + d.beta_l1 * l1[i] + d.beta_l2 * d.l2_values[j]);
      weights.push_back(w1[i] * d.l2_probs[j]);
    }
  return {offsets, weights, base};
}

}  // namespace

double gamma0_by_simpson(const SimpleDesign& d, double alpha, int panels) {
  const SimpsonAtoms a = simpson_atoms(d, panels);
  return gamma0_bisection(alpha, a.offsets, a.weights);
}

double truth_by_simpson(const SimpleDesign& d, double alpha, int panels) {
  const auto [offsets, weights, base] = simpson_atoms(d, panels);
  const double gamma = gamma0_bisection(alpha, offsets, weights);
  long double num = 0.0L, den = 0.0L;
  for (std::size_t a = 0; a < offsets.size(); ++a) {
    const double p = expit(gamma + offsets[a]);
    long double inner = 0.0L;
    for (std::size_t s = 0; s < d.sizes.size(); ++s) {
      const int n = d.sizes[s];
      for (int k = 0; k <= n; ++k)
        inner += d.size_probs[s] * binomial_pmf(n, k, p) * expit(base[a] + d.beta_s * k / n);
    }
    num += weights[a] * inner;
    den += weights[a];
  }
  return static_cast<double>(num / den);
}

double chord_distance_km(double lat1, double lon1, double lat2, double lon2) {
  constexpr double rad = std::numbers::pi / 180.0;
  auto unit = [&](double lat, double lon) {
    return Eigen::Vector3d(std::cos(lat * rad) * std::cos(lon * rad),
                           std::cos(lat * rad) * std::sin(lon * rad), std::sin(lat * rad));
  };
  const double c = (unit(lat1, lon1) - unit(lat2, lon2)).norm();
  return 2.0 * gformula::kEarthRadiusKm * std::asin(std::min(1.0, c / 2.0));
}

namespace {

std::vector<int> first_appearance(const std::vector<int>& raw) {
  std::map<int, int> relabel;
  std::vector<int> out;
  for (int r : raw) {
    auto [it, inserted] = relabel.try_emplace(r, static_cast<int>(relabel.size()));
    out.push_back(it->second);
  }
  return out;
}

double point_distance(const gformula::HouseholdPoint& a, const gformula::HouseholdPoint& b) {
  return chord_distance_km(a.lat, a.lon, b.lat, b.lon);
}

}  // namespace

std::vector<int> single_linkage_prim(std::span<const gformula::HouseholdPoint> points, double threshold_km) {
  const std::size_t n = points.size();
  std::vector<bool> in_tree(n, false);
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> parent(n, n);
  std::vector<std::vector<std::size_t>> adj(n);
  best[0] = 0.0;
  for (std::size_t step = 0; step < n; ++step) {
    std::size_t u = n;
    for (std::size_t v = 0; v < n; ++v)
      if (!in_tree[v] && (u == n || best[v] < best[u])) u = v;
    in_tree[u] = true;
    if (parent[u] != n && best[u] <= threshold_km) {
      adj[u].push_back(parent[u]);
      adj[parent[u]].push_back(u);
    }
    for (std::size_t v = 0; v < n; ++v) {
      if (in_tree[v]) continue;
      const double d = point_distance(points[u], points[v]);
      if (d < best[v]) {
        best[v] = d;
        parent[v] = u;
      }
    }
  }
  std::vector<int> comp(n, -1);
  int next = 0;
  for (std::size_t s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    std::vector<std::size_t> stack{s};
    comp[s] = next;
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      for (std::size_t v : adj[u])
        if (comp[v] < 0) {
          comp[v] = next;
          stack.push_back(v);
        }
    }
    ++next;
  }
  return first_appearance(comp);
}

std::vector<int> complete_linkage_naive(std::span<const gformula::HouseholdPoint> points,
                                        double threshold_km) {
  const std::size_t n = points.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return points[a].household_id < points[b].household_id;
  });
  std::vector<std::size_t> rank(n);
  for (std::size_t r = 0; r < n; ++r) rank[order[r]] = r;

  std::vector<std::vector<std::size_t>> clusters;
  for (std::size_t i = 0; i < n; ++i) clusters.push_back({i});
  auto key = [&](const std::vector<std::size_t>& c) {
    std::size_t k = n;
    for (std::size_t i : c) k = std::min(k, rank[i]);
    return k;
  };
  while (clusters.size() > 1) {
    double best = std::numeric_limits<double>::infinity();
    std::pair<std::size_t, std::size_t> best_key{n, n};
    std::size_t ba = 0, bb = 0;
    for (std::size_t a = 0; a < clusters.size(); ++a)
      for (std::size_t b = a + 1; b < clusters.size(); ++b) {
        double diam = 0.0;
        for (std::size_t i : clusters[a])
          for (std::size_t j : clusters[b]) diam = std::max(diam, point_distance(points[i], points[j]));
        const std::size_t ka = key(clusters[a]), kb = key(clusters[b]);
        const std::pair<std::size_t, std::size_t> k{std::min(ka, kb), std::max(ka, kb)};
        if (diam < best || (diam == best && k < best_key)) {
          best = diam;
          best_key = k;
          ba = a;
          bb = b;
        }
      }
    if (best > threshold_km) break;
    clusters[ba].insert(clusters[ba].end(), clusters[bb].begin(), clusters[bb].end());
    clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(bb));
  }
  std::vector<int> raw(n);
  for (std::size_t c = 0; c < clusters.size(); ++c)
    for (std::size_t i : clusters[c]) raw[i] = static_cast<int>(c);
  return first_appearance(raw);
}

bool same_partition(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) return false;
  std::map<int, int> ab, ba;
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto [x, ix] = ab.try_emplace(a[i], b[i]);
    auto [y, iy] = ba.try_emplace(b[i], a[i]);
    if (x->second != b[i] || y->second != a[i]) return false;
  }
  return true;
}

}  // namespace oracle
