#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "gformula/quadrature.hpp"

using namespace gformula;

namespace {

double expect(const QuadratureRule& r, double (*f)(double)) {
  double s = 0.0;
  for (std::size_t i = 0; i < r.nodes.size(); ++i) s += r.weights[i] * f(r.nodes[i]);
  return s;
}

}  // namespace

TEST(Quadrature, NormalMoments) {
  const auto r = normal_quadrature(64);
  EXPECT_NEAR(expect(r, [](double) { return 1.0; }), 1.0, 1e-14);
  EXPECT_NEAR(expect(r, [](double x) { return x; }), 0.0, 1e-13);
  EXPECT_NEAR(expect(r, [](double x) { return x * x; }), 1.0, 1e-13);
  EXPECT_NEAR(expect(r, [](double x) { return x * x * x * x; }), 3.0, 1e-12);
  EXPECT_NEAR(expect(r, [](double x) { return std::pow(x, 10); }), 945.0, 1e-9);
  EXPECT_NEAR(expect(r, [](double x) { return std::exp(x); }), std::exp(0.5), 1e-13);
}

TEST(Quadrature, ShiftedAndScaled) {
  const auto r = normal_quadrature(32, 40.0, 10.0);
  double mean = 0.0, var = 0.0;
  for (std::size_t i = 0; i < r.nodes.size(); ++i) mean += r.weights[i] * r.nodes[i];
  for (std::size_t i = 0; i < r.nodes.size(); ++i) var += r.weights[i] * (r.nodes[i] - 40.0) * (r.nodes[i] - 40.0);
  EXPECT_NEAR(mean, 40.0, 1e-12);
  EXPECT_NEAR(var, 100.0, 1e-10);
}

TEST(Quadrature, DegenerateSd) {
  const auto r = normal_quadrature(8, 3.0, 0.0);
  for (double x : r.nodes) EXPECT_DOUBLE_EQ(x, 3.0);
}

TEST(Quadrature, HermiteWeightsIntegrateGaussian) {
  const auto r = gauss_hermite(20);
  double total = 0.0, second = 0.0;
  for (std::size_t i = 0; i < r.nodes.size(); ++i) {
    total += r.weights[i];
    second += r.weights[i] * r.nodes[i] * r.nodes[i];
  }
  EXPECT_NEAR(total, std::sqrt(std::numbers::pi), 1e-13);
  EXPECT_NEAR(second, std::sqrt(std::numbers::pi) / 2, 1e-13);
}

TEST(Quadrature, LowOrderNodesAreExact) {
  const auto r = normal_quadrature(2);
  EXPECT_NEAR(std::abs(r.nodes[0]), 1.0, 1e-15);
  EXPECT_NEAR(r.weights[0], 0.5, 1e-15);
  const auto r3 = normal_quadrature(3);
  EXPECT_NEAR(r3.nodes[2], std::sqrt(3.0), 1e-14);
  EXPECT_NEAR(r3.weights[1], 2.0 / 3.0, 1e-15);
}
