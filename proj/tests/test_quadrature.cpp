#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "roughsheet/quadrature.hpp"

using namespace roughsheet;

TEST(Adaptive, PolynomialAndGaussian) {
  auto r = adaptive_integrate([](double x) { return x * x * x; }, 0.0, 2.0, 1e-14, 1e-13);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.value, 4.0, 1e-13);
  r = adaptive_integrate([](double x) { return std::exp(-x * x); }, -10.0, 10.0, 1e-14, 1e-13, 8);
  EXPECT_NEAR(r.value, std::sqrt(std::numbers::pi), 1e-13);
}

TEST(Adaptive, IntegrableEndpointSingularity) {
  auto r = adaptive_integrate([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0, 1e-10, 1e-10);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.value, 2.0, 1e-8);
}

TEST(Adaptive, ReportsFailureOnPanelBudget) {
  auto r = adaptive_integrate([](double x) { return std::sin(1.0 / x); }, 1e-6, 1.0, 1e-15, 1e-15, 1, 50);
  EXPECT_FALSE(r.converged);
}

TEST(GeometricSeries, ClosedFormRemainder) {
  // sum 2^{-k/2}
  auto r = geometric_series([](int k) { return QuadResult{std::pow(2.0, -0.5 * k), 0.0, true}; }, 1e-14, 1e-12, 200);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.value, 1.0 / (1.0 - std::sqrt(0.5)), 1e-11);
}

TEST(GeometricSeries, DivergentSeriesFails) {
  auto r = geometric_series([](int) { return QuadResult{1.0, 0.0, true}; }, 1e-12, 1e-12, 100);
  EXPECT_FALSE(r.converged);
}

TEST(HalfLine, PowerTimesGaussian) {
  // int_0^inf xi^{0.5} e^{-xi^2} = Gamma(3/4) / 2
  HalfLineIntegrand in;
  in.full = [](double x) { return std::sqrt(x) * std::exp(-x * x); };
  const auto r = integrate_half_line(in, {});
  EXPECT_NEAR(r.value, 0.5 * std::tgamma(0.75), 1e-11);
}

TEST(HalfLine, SingularAtZeroWithAlgebraicTail) {
  // int_0^inf xi^{-1/2} / (1 + xi)^2 d xi = pi / 2
  HalfLineIntegrand in;
  in.full = [](double x) { return 1.0 / (std::sqrt(x) * (1.0 + x) * (1.0 + x)); };
  const auto r = integrate_half_line(in, {});
  EXPECT_NEAR(r.value, std::numbers::pi / 2.0, 1e-9);
}

TEST(HalfLine, OscillatoryTail) {
  // int_0^inf sin(xi) / xi = pi / 2, with the tail declared as sin(xi) * (1/xi)
  HalfLineIntegrand in;
  in.full = [](double x) { return std::sin(x) / x; };
  in.add_sin(1.0, [](double x) { return 1.0 / x; });
  const auto r = integrate_half_line(in, {});
  EXPECT_NEAR(r.value, std::numbers::pi / 2.0, 1e-9);
}

TEST(HalfLine, DivergentTailRaises) {
  HalfLineIntegrand in;
  in.full = [](double x) { return 1.0 / (1.0 + x); };
  EXPECT_THROW(integrate_half_line(in, {}), NumericalError);
}

TEST(HalfLine, DivergentAtZeroRaises) {
  HalfLineIntegrand in;
  in.full = [](double x) { return std::exp(-x) / x; };
  EXPECT_THROW(integrate_half_line(in, {}), NumericalError);
}

TEST(HalfLine, InconsistentTailIsALogicError) {
  HalfLineIntegrand in;
  in.full = [](double x) { return std::exp(-x); };
  in.add_cos(1.0, [](double x) { return std::exp(-x); });
  EXPECT_THROW(integrate_half_line(in, {}), std::logic_error);
}

TEST(QuadSpec, ValidatesTolerances) {
  QuadratureSpec q;
  q.relTol = 0.0;
  EXPECT_THROW(q.validate(), DomainError);
  q = {};
  q.cutoff = 0.5;
  EXPECT_THROW(q.validate(), DomainError);
}
