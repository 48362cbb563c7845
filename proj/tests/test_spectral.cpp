#include <cmath>
#include <complex>
#include <numbers>

#include <gtest/gtest.h>

#include "frozen_oracles.hpp"
#include "roughsheet/isometry.hpp"
#include "roughsheet/spectral.hpp"

using namespace roughsheet;

TEST(Density, NormalisingConstant) {
  EXPECT_NEAR(make_density(0.1).cH, frozen::kCH_010, 1e-15);
  EXPECT_NEAR(make_density(0.25).cH, frozen::kCH_025, 1e-15);
  EXPECT_NEAR(make_density(0.4).cH, frozen::kCH_040, 1e-15);
}

TEST(Density, BrownianLimitIsFlat) {
  const SpectralDensity d = make_density(0.5);
  EXPECT_NEAR(d.cH, 1.0 / (2.0 * std::numbers::pi), 1e-15);
  EXPECT_EQ(d.weight(3.0), 1.0);
}

TEST(Kernel, TimeIntegratedKernelSmallArgument) {
  // continuity across the series / closed-form switch
  for (double t : {0.5, 3.0}) {
    const double xi = 1.0 / t;
    EXPECT_NEAR(time_integrated_kernel(OperatorKind::Wave, t, xi * (1 - 1e-12)),
                time_integrated_kernel(OperatorKind::Wave, t, xi * (1 + 1e-12)), 1e-10);
  }
  EXPECT_NEAR(time_integrated_kernel(OperatorKind::Wave, 2.0, 0.0), 8.0 / 3.0, 1e-15);
  EXPECT_NEAR(time_integrated_kernel(OperatorKind::Heat, 2.0, 0.0), 2.0, 1e-15);
}

TEST(Kernel, MatchesTimeQuadrature) {
  for (auto op : {OperatorKind::Heat, OperatorKind::Wave})
    for (double xi : {0.01, 0.3, 2.0, 11.0}) {
      const double t = 1.3;
      const auto r = adaptive_integrate(
          [&](double s) {
            const double g = green_fourier(op, s, xi);
            return g * g;
          },
          1e-300, t, 1e-15, 1e-13, 16);
      EXPECT_NEAR(time_integrated_kernel(op, t, xi), r.value, 1e-12 * std::max(1.0, r.value)) << xi;
    }
}

TEST(Variance, HeatMatchesFrozenOracleAndClosedForm) {
  const SpectralDensity d = make_density(0.25);
  EXPECT_NEAR(variance_integral(OperatorKind::Heat, 1.0, d), frozen::kHeatVariance_t1_H025, 1e-9);
  EXPECT_NEAR(heat_variance_closed_form(1.0, d), frozen::kHeatVariance_t1_H025, 1e-13);
  EXPECT_NEAR(frozen::kHeatVariance_t1_H025, frozen::kHeatVarianceBrute_t1_H025, 1e-14);
}

TEST(Variance, WaveMatchesFrozenOracle) {
  EXPECT_NEAR(variance_integral(OperatorKind::Wave, 1.0, make_density(0.25)), frozen::kWaveVariance_t1_H025, 1e-9);
}

TEST(Variance, ExactScaling) {
  for (double H : {0.1, 0.25, 0.4}) {
    const SpectralDensity d = make_density(H);
    for (auto op : {OperatorKind::Heat, OperatorKind::Wave}) {
      const double p = op == OperatorKind::Heat ? H : 1.0 + 2.0 * H;
      const double v1 = variance_integral(op, 0.3, d), v2 = variance_integral(op, 2.7, d);
      EXPECT_NEAR(std::log(v2 / v1) / std::log(9.0), p, 1e-8) << H;
    }
  }
}

TEST(Variance, LargeTimesConverge) {
  for (double H : {0.1, 0.25, 0.4})
    for (double t : {4.2, 10.0, 40.0})
      EXPECT_NO_THROW(variance_integral(OperatorKind::Wave, t, make_density(H))) << H << " " << t;
}

TEST(Variance, RejectsNonPositiveTime) {
  EXPECT_THROW(variance_integral(OperatorKind::Heat, 0.0, make_density(0.25)), DomainError);
}

TEST(Gap, MatchesFrozenOracles) {
  const SpectralDensity d = make_density(0.25);
  EXPECT_NEAR(covariance_gap(OperatorKind::Wave, 1.0, 0.5, d), frozen::kWaveGap_t1_H025_x05, 1e-9);
  EXPECT_NEAR(covariance_gap(OperatorKind::Heat, 1.0, 0.5, d), frozen::kHeatGap_t1_H025_x05, 1e-9);
  // and the independent Monte Carlo estimate agrees with the analytic one
  EXPECT_NEAR(frozen::kWaveGap_t1_H025_x05, frozen::kWaveGapMonteCarlo_t1_H025_x05,
              4.0 * frozen::kWaveGapMonteCarloSE);
}

TEST(Gap, PositiveAndVanishingLikeX2H) {
  const SpectralDensity d = make_density(0.1);
  for (auto op : {OperatorKind::Heat, OperatorKind::Wave})
    for (double x : {1e-3, 0.1, 1.0, 5.0}) EXPECT_GT(covariance_gap(op, 0.7, x, d), 0.0);
  // small-x behaviour: ratio over six decades is 10^{-6 * 2H}
  const double ratio = covariance_gap(OperatorKind::Heat, 0.7, 1e-9, d) / covariance_gap(OperatorKind::Heat, 0.7, 1e-3, d);
  EXPECT_NEAR(ratio, std::pow(1e-6, 0.2), 1e-3);
}

TEST(Gap, NegativeCorrelationBeyondTheLightCone) {
  // rough noise (H < 1/2) is negatively correlated at a distance, so past 2t
  // the wave gap exceeds the variance and then relaxes towards it
  const SpectralDensity d = make_density(0.25);
  const double v = variance_integral(OperatorKind::Wave, 0.5, d);
  const double near = covariance_gap(OperatorKind::Wave, 0.5, 1.5, d);
  const double far = covariance_gap(OperatorKind::Wave, 0.5, 12.0, d);
  EXPECT_GT(near, v);
  EXPECT_GT(far, v);
  EXPECT_LT(far - v, near - v);
  // Brownian noise has independent increments: exact zero correlation
  EXPECT_NEAR(covariance_gap(OperatorKind::Wave, 0.5, 1.5, make_density(0.5)),
              variance_integral(OperatorKind::Wave, 0.5, make_density(0.5)), 1e-8);
}

TEST(Increment, NewNoiseTermIsTheVarianceOfTheLag) {
  const SpectralDensity d = make_density(0.25);
  const auto iv = increment_variance(OperatorKind::Heat, 0.5, 0.5 + 1.0 / 64.0, d);
  EXPECT_NEAR(iv.I1, variance_integral(OperatorKind::Heat, 1.0 / 64.0, d), 1e-14);
  EXPECT_GT(iv.I2, 0.0);
  EXPECT_EQ(increment_variance(OperatorKind::Heat, 0.0, 0.3, d).I2, 0.0);
  EXPECT_THROW(increment_variance(OperatorKind::Heat, 0.5, 0.5, d), DomainError);
}

TEST(Increment, StationaryDecompositionHeat) {
  // E(u_t - u_s)^2 = V(t) + V(s) - 2 C(s, t), with C by quadrature
  const SpectralDensity d = make_density(0.25);
  const double s = 0.4, t = 0.55;
  HalfLineIntegrand in;
  in.full = [&](double xi) {
    // int_0^s e^{-(t-r) xi^2} e^{-(s-r) xi^2} dr = e^{-(t-s) xi^2} K(s, xi)
    return 2.0 * d.density(xi) * std::exp(-(t - s) * xi * xi) * time_integrated_kernel(OperatorKind::Heat, s, xi);
  };
  const double cov = integrate_half_line(in, {}).value;
  const double expected = variance_integral(OperatorKind::Heat, t, d) + variance_integral(OperatorKind::Heat, s, d) -
                          2.0 * cov;
  EXPECT_NEAR(increment_variance(OperatorKind::Heat, s, t, d).total(), expected, 1e-9);
}

TEST(Energy, NormEquivalenceGaussian) {
  for (double H : {0.1, 0.25, 0.4}) {
    const SpectralDensity d = make_density(H);
    const double w = weighted_energy(
        [](double xi) { return std::complex<double>(std::sqrt(std::numbers::pi) * std::exp(-xi * xi / 4.0)); }, d);
    const double e = difference_energy([](double y) { return std::exp(-y * y); }, d);
    EXPECT_NEAR(w / e, 1.0, 1e-6) << H;
  }
}

TEST(Energy, DivergenceBoundary) {
  for (auto op : {OperatorKind::Heat, OperatorKind::Wave}) {
    EXPECT_THROW(kernel_energy(op, 1.0, 1.0), NumericalError);
    EXPECT_THROW(kernel_energy(op, 1.0, -1.0), NumericalError);
    EXPECT_NO_THROW(kernel_energy(op, 1.0, 0.9));
    EXPECT_NO_THROW(kernel_energy(op, 1.0, -0.9));
  }
}

TEST(Energy, KernelEnergyAtCriticalWeightMatchesVariance) {
  // alpha = 1 - 2H with c_H reproduces the variance integral
  const double H = 0.25;
  const SpectralDensity d = make_density(H);
  for (auto op : {OperatorKind::Heat, OperatorKind::Wave})
    EXPECT_NEAR(d.cH * kernel_energy(op, 0.8, 1.0 - 2.0 * H), variance_integral(op, 0.8, d), 1e-9);
}

TEST(Isometry, TargetsMatchFrozenOracles) {
  const auto family = isometry_family();
  const char* names[3] = {"gauss", "odd-step", "wave-packet"};
  for (int h = 0; h < 3; ++h)
    for (int q = 0; q < 3; ++q)
      EXPECT_NEAR(isometry_target(find_integrand(family, names[q]), frozen::kIsometryH[h]) / frozen::kIsometry[h][q],
                  1.0, 1e-8)
          << names[q] << " H=" << frozen::kIsometryH[h];
  EXPECT_EQ(isometry_target(find_integrand(family, "zero"), 0.25), 0.0);
}

TEST(Isometry, FourierPairsOfTheFamily) {
  // gHat against a direct transform of g
  for (const auto& phi : isometry_family()) {
    for (double xi : {0.0, 0.7, 2.5}) {
      std::complex<double> s = 0.0;
      const double h = 1e-3;
      for (double y = -12.0; y <= 12.0; y += h) s += std::polar(phi.g(y) * h, -xi * y);
      EXPECT_NEAR(std::abs(s - phi.gHat(xi)), 0.0, 1e-9) << phi.name << " " << xi;
    }
  }
}
