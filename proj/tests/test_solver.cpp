#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "roughsheet/solver.hpp"

using namespace roughsheet;

namespace {

const GridSpec kSmall{1.0, 64, -4.0, 4.0, 256};

double middle(const SolutionField& f, std::size_t slot, std::size_t c = 0) {
  return f.at(c, slot, f.grid.nX / 2);
}

}  // namespace

TEST(Spectral, DiscreteVarianceMatchesIntegral) {
  for (auto op : {OperatorKind::Heat, OperatorKind::Wave}) {
    const SpectralConvolution s(op, 0.25, kSmall);
    const SpectralDensity d = make_density(0.25);
    for (std::size_t n : {16u, 64u}) {
      const double exact = variance_integral(op, kSmall.time(n), d);
      EXPECT_NEAR(s.discrete_variance(n) / exact, 1.0, 2e-3) << to_string(op) << " n=" << n;
    }
    EXPECT_EQ(s.discrete_variance(0), 0.0);
  }
}

TEST(Spectral, CutoffBelowRequirementIsAConfigurationError) {
  SpectralOptions o;
  o.cutoff = 10.0;
  EXPECT_THROW(SpectralConvolution(OperatorKind::Heat, 0.25, kSmall, o), ConfigurationError);
}

TEST(Spectral, DeterministicAndStartsAtZero) {
  const SpectralConvolution s(OperatorKind::Wave, 0.3, kSmall);
  const SolutionField a = s.sample(2, identity_matrix(2), 5), b = s.sample(2, identity_matrix(2), 5);
  EXPECT_EQ(a.values, b.values);
  for (std::size_t j = 0; j < kSmall.nX; ++j) EXPECT_EQ(a.at(1, 0, j), 0.0);
  EXPECT_NE(a.values, s.sample(2, identity_matrix(2), 6).values);
}

TEST(Spectral, SigmaMixesComponents) {
  const SpectralConvolution s(OperatorKind::Heat, 0.25, kSmall);
  const SolutionField z = s.sample(2, identity_matrix(2), 11);
  const SolutionField u = s.sample(2, {1.0, 2.0, 0.0, 3.0}, 11);
  for (std::size_t j : {3u, 100u})
    for (std::size_t slot : {10u, 64u}) {
      EXPECT_NEAR(u.at(0, slot, j), z.at(0, slot, j) + 2.0 * z.at(1, slot, j), 1e-12);
      EXPECT_NEAR(u.at(1, slot, j), 3.0 * z.at(1, slot, j), 1e-12);
    }
}

TEST(Spectral, TimeSubsetHasTheSameLaw) {
  // two far-apart times only: the empirical variance still tracks the integral
  const SpectralConvolution s(OperatorKind::Heat, 0.25, kSmall);
  const int R = 400;
  double m16 = 0.0, m64 = 0.0;
  for (int r = 0; r < R; ++r) {
    const SolutionField f = s.sample(1, {1.0}, 300 + r, {16, 64});
    ASSERT_EQ(f.slots(), 2u);
    for (std::size_t j = 0; j < kSmall.nX; j += 16) {
      m16 += f.at(0, 0, j) * f.at(0, 0, j);
      m64 += f.at(0, 1, j) * f.at(0, 1, j);
    }
  }
  const double n = R * 16.0;
  EXPECT_NEAR(m16 / n / s.discrete_variance(16), 1.0, 0.1);
  EXPECT_NEAR(m64 / n / s.discrete_variance(64), 1.0, 0.1);
  EXPECT_THROW(s.sample(1, {1.0}, 1, {65}), DomainError);
}

TEST(Direct, NodeEvaluationMatchesFullField) {
  const GridSpec g{0.25, 16, -6.0, 6.0, 256};
  for (auto op : {OperatorKind::Heat, OperatorKind::Wave}) {
    const auto [lo, hi] = DirectConvolution::window_nodes(g, -1.0, 1.0);
    const DirectConvolution dc(op, 0.25, g, lo, hi);
    const NoiseSheet sheet = sample_sheet(g, 0.25, 1, 21);
    const SolutionField f = dc.full_field(sheet, {1.0});
    for (std::size_t n : {1u, 7u, 16u})
      for (std::size_t j : {lo, (lo + hi) / 2, hi - 1})
        EXPECT_NEAR(dc.at_node(sheet, 0, n, j), f.at(0, n, j), 1e-10) << to_string(op);
  }
}

TEST(Direct, WindowMustKeepTheBuffer) {
  const GridSpec g{1.0, 16, -4.0, 4.0, 128};
  // heat needs 8 sqrt(1) = 8 on both sides, impossible on [-4, 4]
  EXPECT_THROW(stochastic_convolution_direct(OperatorKind::Heat, sample_sheet(g, 0.25, 1, 1), -0.5, 0.5, {1.0}),
               DomainError);
  EXPECT_NO_THROW(stochastic_convolution_direct(OperatorKind::Wave, sample_sheet(g, 0.25, 1, 1), -0.5, 0.5, {1.0}));
}

TEST(Drift, ConstantDriftHeat) {
  // int_0^t G_{t-s} * c ds = c t
  const GridSpec g{1.0, 32, -4.0, 4.0, 64};
  const SolutionField u = SolutionField::zeros(g, 1);
  const SolutionField D = drift_field(OperatorKind::Heat, u, DriftSpec::constant(0.7));
  for (std::size_t n : {1u, 10u, 32u}) EXPECT_NEAR(middle(D, n), 0.7 * g.time(n), 1e-12);
}

TEST(Drift, ConstantDriftWave) {
  // left-endpoint rule over a kernel of mass t - s: c (t^2/2 + t dt/2)
  const GridSpec g{1.0, 32, -4.0, 4.0, 512};
  const SolutionField u = SolutionField::zeros(g, 1);
  const SolutionField D = drift_field(OperatorKind::Wave, u, DriftSpec::constant(0.7));
  for (std::size_t n : {1u, 10u, 32u}) {
    const double t = g.time(n);
    EXPECT_NEAR(middle(D, n), 0.7 * (0.5 * t * t + 0.5 * t * g.dt()), 1e-10) << n;
  }
}

TEST(Drift, PointwiseAgreesWithField) {
  const GridSpec g{0.5, 16, -8.0, 8.0, 256};
  const SolutionField u = stochastic_convolution_spectral(OperatorKind::Wave, 0.25, g, 1, {1.0}, 3);
  const DriftSpec b = DriftSpec::sine();
  const SolutionField D = drift_field(OperatorKind::Wave, u, b);
  const auto p = drift_convolution(OperatorKind::Wave, u, b, g.time(16), g.x(128));
  EXPECT_NEAR(p[0], D.at(0, 16, 128), 1e-3);
}

TEST(Drift, LipschitzDeclarationIsChecked) {
  DriftSpec bad = DriftSpec::linear(2.0);
  bad.lipschitzConstant = 1.0;
  EXPECT_THROW(bad.validate(1), DomainError);
  EXPECT_NO_THROW(DriftSpec::sine().validate(3));
  EXPECT_THROW(DriftSpec::from_name("cube"), DomainError);
}

TEST(Picard, ZeroDriftConvergesInOneStep) {
  ModelSpec m;
  m.op = OperatorKind::Heat;
  const PicardResult r = picard_solve(m, kSmall, 9, PicardConfig{});
  ASSERT_EQ(r.distances.size(), 1u);
  EXPECT_EQ(r.distances[0], 0.0);
  const SolutionField noise = SpectralConvolution(OperatorKind::Heat, 0.25, kSmall).sample(1, {1.0}, 9);
  EXPECT_EQ(r.field.values, noise.values);
}

TEST(Picard, SineDriftContracts) {
  ModelSpec m;
  m.op = OperatorKind::Wave;
  m.drift = DriftSpec::sine();
  const PicardResult r = picard_solve(m, {1.0, 32, -4.0, 4.0, 128}, 4, PicardConfig{});
  ASSERT_GE(r.distances.size(), 4u);
  for (std::size_t k = 2; k < r.distances.size(); ++k)
    if (r.distances[k - 1] > 1e-13) {
      EXPECT_LT(r.distances[k] / r.distances[k - 1], 0.9) << k;
    }
}

TEST(Picard, LinearDecayReachesExponential) {
  // u' = -u, u(0) = 1 with no noise
  ModelSpec m;
  m.op = OperatorKind::Heat;
  m.sigma = {0.0};
  m.drift = DriftSpec::linear(-1.0);
  m.init = InitialData::constant(1.0);
  const GridSpec g{1.0, 512, -2.0, 2.0, 32};
  const PicardResult r = picard_solve(m, g, 1, PicardConfig{});
  for (std::size_t n : {128u, 512u}) EXPECT_NEAR(middle(r.field, n), std::exp(-g.time(n)), 1e-3);
}

TEST(Picard, NonconvergenceCarriesHistory) {
  ModelSpec m;
  m.drift = DriftSpec::sine();
  PicardConfig c;
  c.maxIters = 3;
  try {
    picard_solve(m, kSmall, 2, c);
    FAIL() << "expected NonConvergenceError";
  } catch (const NonConvergenceError& e) {
    EXPECT_EQ(e.distances().size(), 2u);
  }
}

TEST(Ensemble, IndependentOfThreadCount) {
  ModelSpec m;
  m.op = OperatorKind::Wave;
  EnsembleOptions o1, o3;
  o3.threads = 3;
  const auto a = ensemble_run(m, kSmall, 5, 100, o1);
  const auto b = ensemble_run(m, kSmall, 5, 100, o3);
  for (std::size_t r = 0; r < 5; ++r) {
    EXPECT_EQ(a[r].values, b[r].values);
    EXPECT_EQ(a[r].seed, 100 + r);
  }
}

TEST(Ensemble, DriftNeedsPicard) {
  ModelSpec m;
  m.drift = DriftSpec::sine();
  EXPECT_THROW(EnsembleRunner(m, kSmall, {}), ConfigurationError);
  EnsembleOptions o;
  o.method = Method::Picard;
  EXPECT_NO_THROW(EnsembleRunner(m, kSmall, o));
  EXPECT_THROW(EnsembleRunner(ModelSpec{}, kSmall, {}).picard_replica(1), ConfigurationError);
}

TEST(Ensemble, MemoryBudgetGivesPartialResults) {
  EnsembleOptions o;
  o.memoryBudgetBytes = 3 * (kSmall.nT + 1) * kSmall.nX * sizeof(double);
  try {
    ensemble_run(ModelSpec{}, kSmall, 10, 1, o);
    FAIL() << "expected PartialResultsError";
  } catch (const PartialResultsError& e) {
    EXPECT_EQ(e.completed(), 3u);
  }
}

TEST(Ensemble, InitialDataIsAdded) {
  ModelSpec m;
  m.init = InitialData::constant(2.0);
  m.op = OperatorKind::Heat;
  EnsembleRunner with(m, kSmall, {});
  EnsembleRunner without(ModelSpec{}, kSmall, {});
  const SolutionField a = with.replica(8), b = without.replica(8);
  for (std::size_t q = 0; q < a.values.size(); q += 97) EXPECT_NEAR(a.values[q] - b.values[q], 2.0, 1e-12);
}
