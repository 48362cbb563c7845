#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "roughsheet/regularity.hpp"

using namespace roughsheet;

TEST(Fit, ExactPowerLaw) {
  std::vector<double> x, y;
  for (double v : log_spaced(0.01, 1.0, 9)) {
    x.push_back(v);
    y.push_back(3.5 * std::pow(v, 0.37));
  }
  const ExponentFit f = fit_power_law(x, y, 0.0, 10.0);
  EXPECT_NEAR(f.slope, 0.37, 1e-12);
  EXPECT_NEAR(std::exp(f.intercept), 3.5, 1e-11);
  EXPECT_NEAR(f.rSquared, 1.0, 1e-12);
  EXPECT_EQ(f.points, 9u);
}

TEST(Fit, NeedsFourPositivePoints) {
  EXPECT_THROW(fit_power_law({1, 2, 3}, {1, 2, 3}, 0.0, 10.0), InsufficientDataError);
  EXPECT_THROW(fit_power_law({1, 2, 3, 4}, {1, 2, 0, 4}, 0.0, 10.0), DomainError);
  // the range filter counts too
  EXPECT_THROW(fit_power_law({1, 2, 3, 4, 5}, {1, 2, 3, 4, 5}, 2.5, 10.0), InsufficientDataError);
}

TEST(Lags, HalfDyadic) {
  EXPECT_EQ(half_dyadic_lags(4, 64), (std::vector<std::size_t>{4, 6, 8, 11, 16, 23, 32, 45, 64}));
  EXPECT_EQ(half_dyadic_lags(1, 2), (std::vector<std::size_t>{1, 2}));
  EXPECT_THROW(half_dyadic_lags(0, 4), DomainError);
}

TEST(Theory, Slopes) {
  EXPECT_DOUBLE_EQ(theoretical_slope(OperatorKind::Heat, Direction::Spatial, 2.0, 0.25), 0.5);
  EXPECT_DOUBLE_EQ(theoretical_slope(OperatorKind::Heat, Direction::Temporal, 2.0, 0.25), 0.25);
  EXPECT_DOUBLE_EQ(theoretical_slope(OperatorKind::Wave, Direction::Temporal, 2.0, 0.25), 0.5);
  // rough initial data caps the exponent
  EXPECT_DOUBLE_EQ(theoretical_slope(OperatorKind::Wave, Direction::Spatial, 2.0, 0.4, 0.15), 0.3);
  EXPECT_EQ(parse_direction("temporal"), Direction::Temporal);
  EXPECT_THROW(parse_direction("diagonal"), DomainError);
}

TEST(Metric, ParabolicVersusEuclidean) {
  EXPECT_NEAR(metric(OperatorKind::Heat, 1.0, 0.0, 0.96, 0.3), 0.5, 1e-12);
  EXPECT_NEAR(metric(OperatorKind::Wave, 1.0, 0.0, 0.96, 0.3), 0.34, 1e-12);
}

TEST(Structure, LinearFieldsGiveSquaredLags) {
  // u = 2x + 3t: spatial S2 = 4 h^2, temporal S2 = 9 h^2, d = 2 adds the second copy
  const GridSpec g{1.0, 64, -1.0, 1.0, 256};
  SolutionField f = SolutionField::zeros(g, 2);
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t n = 0; n <= g.nT; ++n)
      for (std::size_t j = 0; j < g.nX; ++j) f.at(c, n, j) = 2.0 * g.x(j) + 3.0 * g.time(n);
  const auto lags = half_dyadic_lags(1, 16);
  const StructureFunction s = structure_function({f, f}, Direction::Spatial, 2.0, lags);
  for (std::size_t l = 0; l < lags.size(); ++l) EXPECT_NEAR(s.values[l], 2.0 * 4.0 * s.lags[l] * s.lags[l], 1e-12);
  EXPECT_NEAR(fit_exponent(s, 0.0, 1.0).slope, 2.0, 1e-10);
  EXPECT_NEAR(s.stdErrors[0], 0.0, 1e-9);
  const StructureFunction t = structure_function({f}, Direction::Temporal, 2.0, lags);
  for (std::size_t l = 0; l < lags.size(); ++l) EXPECT_NEAR(t.values[l], 2.0 * 9.0 * t.lags[l] * t.lags[l], 1e-11);
}

TEST(Structure, SeveralOrdersAtOnce) {
  const GridSpec g{1.0, 8, 0.0, 1.0, 64};
  SolutionField f = SolutionField::zeros(g, 1);
  for (std::size_t j = 0; j < g.nX; ++j) f.at(0, g.nT, j) = j % 2 ? 1.0 : -1.0;
  StructureAccumulator acc({Direction::Spatial, {2.0, 4.0, 3.0}, {1, 2, 3}, {}, 0.5, 1});
  acc.add(f);
  const auto s2 = acc.result(0, 1), s4 = acc.result(1, 1), s3 = acc.result(2, 1);
  EXPECT_DOUBLE_EQ(s2.values[0], 4.0);
  EXPECT_DOUBLE_EQ(s4.values[0], 16.0);
  EXPECT_DOUBLE_EQ(s3.values[2], 8.0);
  EXPECT_DOUBLE_EQ(s2.values[1], 0.0);
}

TEST(Structure, RejectsBadInput) {
  EXPECT_THROW(StructureAccumulator({Direction::Spatial, {2.0}, {}, {}, 0.5, 1}), DomainError);
  EXPECT_THROW(StructureAccumulator({Direction::Spatial, {0.5}, {1}, {}, 0.5, 1}), DomainError);
  EXPECT_THROW(structure_function({}, Direction::Spatial, 2.0, {1}), InsufficientDataError);
  const GridSpec g{1.0, 8, 0.0, 1.0, 16};
  const SolutionField f = SolutionField::zeros(g, 1);
  // lag 8 needs 17 nodes
  EXPECT_THROW(structure_function({f}, Direction::Spatial, 2.0, {8}), DomainError);
  // too few increments for the default minimum of 100
  EXPECT_THROW(structure_function({f}, Direction::Temporal, 2.0, {1, 2}), InsufficientDataError);
}

TEST(Report, MarginAndVerdict) {
  StructureFunction sf;
  sf.direction = Direction::Spatial;
  ExponentFit fit;
  fit.slope = 0.43;
  const HolderReport r = holder_report(OperatorKind::Heat, 0.25, sf, fit, 0.1);
  EXPECT_NEAR(r.margin, 0.03, 1e-12);
  EXPECT_TRUE(r.pass);
  fit.slope = 0.65;
  EXPECT_FALSE(holder_report(OperatorKind::Heat, 0.25, sf, fit, 0.1).pass);
}

TEST(Optimality, SpatialPinch) {
  const auto xs = log_spaced(0.01, 1.0, 7);
  for (auto op : {OperatorKind::Heat, OperatorKind::Wave}) {
    const OptimalityReport r = optimality_check(op, 0.25, 1.0, xs);
    EXPECT_TRUE(r.pass) << to_string(op);
    EXPECT_GT(r.minRatio, 0.0);
    EXPECT_LT(r.maxRatio / r.minRatio, 50.0);
  }
  EXPECT_THROW(optimality_check(OperatorKind::Heat, 0.25, 1.0, {0.1, 0.2}), DomainError);
}

TEST(Optimality, TemporalExponents) {
  const TemporalOptimalityReport h = temporal_optimality_check(OperatorKind::Heat, 0.25, 0.5, 1.0);
  EXPECT_NEAR(h.fit.slope, 0.25, 0.05);
  EXPECT_TRUE(h.lowerBoundHolds);
  const TemporalOptimalityReport w = temporal_optimality_check(OperatorKind::Wave, 0.25, 0.5, 1.0);
  EXPECT_NEAR(w.fit.slope, 0.5, 0.05);
  EXPECT_THROW(temporal_optimality_check(OperatorKind::Heat, 0.25, 1.0, 1.0), DomainError);
}
