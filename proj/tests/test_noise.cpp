#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "roughsheet/isometry.hpp"
#include "roughsheet/noise.hpp"

using namespace roughsheet;

TEST(Covariance, SheetCovarianceFormula) {
  // E W(t,x) W(s,y) for one component
  const double H = 0.3;
  const double v = fbs_covariance(1.0, 0.5, 2.0, -0.25, H, 0, 0);
  const double expected =
      1.0 * 0.5 * (std::pow(0.5, 2 * H) + std::pow(0.25, 2 * H) - std::pow(0.75, 2 * H));
  EXPECT_NEAR(v, expected, 1e-15);
  EXPECT_EQ(fbs_covariance(1.0, 0.5, 2.0, -0.25, H, 0, 1), 0.0);
}

TEST(Covariance, FgnBlockIdentity) {
  // sum_{|k| <= K} (K + 1 - |k|) c(k) = ((K + 1) dx)^{2H}
  for (double H : {0.1, 0.25, 0.4, 0.5}) {
    const double dx = 0.03;
    const long long K = 7;
    double s = 0.0;
    for (long long k = -K; k <= K; ++k) s += static_cast<double>(K + 1 - std::llabs(k)) * fgn_autocovariance(k, H, dx);
    EXPECT_NEAR(s, std::pow((K + 1) * dx, 2 * H), 1e-13) << H;
  }
}

TEST(Covariance, FgnSignsForRoughNoise) {
  EXPECT_LT(fgn_autocovariance(1, 0.25, 1.0), 0.0);
  EXPECT_NEAR(fgn_autocovariance(3, 0.5, 1.0), 0.0, 1e-15);
  EXPECT_NEAR(fgn_autocovariance(0, 0.25, 0.01), std::pow(0.01, 0.5), 1e-15);
}

TEST(Sampler, HurstRangeEnforced) {
  const GridSpec g{1.0, 2, 0.0, 1.0, 16};
  EXPECT_THROW(SheetSampler(g, 0.7), DomainError);
  EXPECT_THROW(SheetSampler(g, 0.0), DomainError);
  EXPECT_NO_THROW(SheetSampler(g, 0.5));
}

TEST(Sampler, DeterministicInSeed) {
  const GridSpec g{1.0, 5, -1.0, 1.0, 64};
  const SheetSampler s(g, 0.2);
  const NoiseSheet a = s.sample(2, 42), b = s.sample(2, 42), c = s.sample(2, 43);
  EXPECT_EQ(a.increments, b.increments);
  EXPECT_NE(a.increments, c.increments);
  EXPECT_EQ(a.increments.size(), 2u * 5u * 64u);
}

TEST(Sampler, SmallMonteCarloLaw) {
  // lag-0 and lag-1 products, rows of one sheet are independent
  const GridSpec g{1.0, 4, 0.0, 1.0, 32};
  const double H = 0.25;
  const SheetSampler s(g, H);
  const int R = 4000;
  double v0 = 0.0, v1 = 0.0, cross = 0.0;
  for (int r = 0; r < R; ++r) {
    const NoiseSheet sh = s.sample(1, 1000 + r);
    for (std::size_t k = 0; k + 1 < g.nX; ++k) {
      v0 += sh.at(0, 1, k) * sh.at(0, 1, k);
      v1 += sh.at(0, 2, k) * sh.at(0, 2, k + 1);
      cross += sh.at(0, 0, k) * sh.at(0, 3, k);
    }
  }
  const double n = R * (g.nX - 1.0);
  const double c0 = g.dt() * fgn_autocovariance(0, H, g.dx());
  const double c1 = g.dt() * fgn_autocovariance(1, H, g.dx());
  EXPECT_NEAR(v0 / n, c0, 0.05 * c0);
  EXPECT_NEAR(v1 / n, c1, 0.1 * std::abs(c1));
  EXPECT_NEAR(cross / n, 0.0, 0.05 * c0);
}

TEST(Wiener, LinearInTheIntegrand) {
  const GridSpec g{1.0, 4, -2.0, 2.0, 64};
  const NoiseSheet sh = sample_sheet(g, 0.3, 1, 9);
  auto f = [](double t, double x) { return t * x; };
  auto h = [](double, double x) { return std::cos(x); };
  auto fh = [](double t, double x) { return 2.0 * t * x - 3.0 * std::cos(x); };
  EXPECT_NEAR(wiener_integral(fh, sh), 2.0 * wiener_integral(f, sh) - 3.0 * wiener_integral(h, sh), 1e-12);
}

TEST(Wiener, ChecksShapes) {
  const GridSpec g{1.0, 2, 0.0, 1.0, 16};
  const NoiseSheet sh = sample_sheet(g, 0.3, 1, 1);
  EXPECT_THROW(wiener_integral(std::vector<double>(5, 1.0), sh), DomainError);
  EXPECT_THROW(wiener_integral(std::vector<double>(32, 1.0), sh, 1), DomainError);
}

TEST(Wiener, IsometryRunSmall) {
  // 4000 replicas: a loose version of the full Monte Carlo check
  const auto res = isometry_check(isometry_family(), 0.25, {1.0, 2, -8.0, 8.0, 1024}, 4000, 77);
  for (const auto& r : res) {
    if (r.name == "zero") {
      EXPECT_EQ(r.variance, 0.0);
      EXPECT_EQ(r.target, 0.0);
      continue;
    }
    EXPECT_LT(std::abs(r.z), 4.0) << r.name;
    EXPECT_NEAR(r.fourthMomentRatio, 1.0, 0.15) << r.name;
  }
}

TEST(Wiener, TooFewReplicasIsInsufficientData) {
  EXPECT_THROW(isometry_check(isometry_family(), 0.25, {1.0, 2, -8.0, 8.0, 256}, 10, 1), InsufficientDataError);
}
