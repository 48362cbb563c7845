#pragma once

// Monte Carlo check of the Wiener-integral isometry: the variance of
// sum phi(cell) * increment over sampled sheets against the spectral energy
// int_0^T c_H int |F phi(s, .)(xi)|^2 |xi|^{1-2H} d xi ds.
//
// Test integrands are separable, phi(s, y) = a(s) g(y), with a piecewise
// constant on the two halves of [0, 1] so the time integral is exact on any
// grid with an even number of steps.

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "roughsheet/errors.hpp"
#include "roughsheet/noise.hpp"
#include "roughsheet/spectral.hpp"

namespace roughsheet {

struct IsometryIntegrand {
  std::string name;
  double firstHalf = 1.0;   // a(s) for s < 1/2
  double secondHalf = 1.0;  // a(s) for s >= 1/2
  std::function<double(double)> g;
  std::function<std::complex<double>(double)> gHat;

  double time_factor() const { return 0.5 * (firstHalf * firstHalf + secondHalf * secondHalf); }
  double operator()(double s, double y) const { return (s < 0.5 ? firstHalf : secondHalf) * g(y); }
};

inline std::vector<IsometryIntegrand> isometry_family() {
  const double r2pi = std::sqrt(2.0 * std::numbers::pi);
  std::vector<IsometryIntegrand> f;
  f.push_back({"gauss", 1.0, 1.0, [](double y) { return std::exp(-y * y); },
               [](double xi) { return std::complex<double>(std::sqrt(std::numbers::pi) * std::exp(-xi * xi / 4.0)); }});
  f.push_back({"odd-step", 1.0, 2.0, [](double y) { return y * std::exp(-y * y / 2.0); },
               [r2pi](double xi) { return std::complex<double>(0.0, -xi * r2pi * std::exp(-xi * xi / 2.0)); }});
  f.push_back({"wave-packet", 1.0, 0.0, [](double y) { return std::exp(-y * y / 2.0) * std::cos(2.0 * y); },
               [r2pi](double xi) {
                 return std::complex<double>(0.5 * r2pi *
                                             (std::exp(-(xi - 2.0) * (xi - 2.0) / 2.0) +
                                              std::exp(-(xi + 2.0) * (xi + 2.0) / 2.0)));
               }});
  f.push_back({"zero", 0.0, 0.0, [](double) { return 0.0; }, [](double) { return std::complex<double>(0.0); }});
  return f;
}

inline const IsometryIntegrand& find_integrand(const std::vector<IsometryIntegrand>& family, const std::string& name) {
  for (const auto& f : family)
    if (f.name == name) return f;
  throw DomainError("unknown test integrand '" + name + "'");
}

/// Spectral side of the isometry on [0, 1].
inline double isometry_target(const IsometryIntegrand& phi, double H, const QuadratureSpec& quad = {}) {
  if (phi.time_factor() == 0.0) return 0.0;
  return phi.time_factor() * weighted_energy(phi.gHat, make_density(H), quad);
}

struct IsometryResult {
  std::string name;
  double H = 0.0;
  double target = 0.0;
  double mean = 0.0;
  double variance = 0.0;
  double stdError = 0.0;  // of the variance estimate
  double z = 0.0;
  double relativeGap = 0.0;
  double fourthMomentRatio = 0.0;  // E X^4 / (3 (E X^2)^2)
  std::size_t replicas = 0;
};

/// Grid on [0, 1] x [xMin, xMax] with nT even. All integrands share each
/// sampled sheet.
inline std::vector<IsometryResult> isometry_check(const std::vector<IsometryIntegrand>& family, double H,
                                                  const GridSpec& grid, std::size_t replicas, std::uint64_t seed,
                                                  std::size_t minReplicas = 100) {
  if (replicas < minReplicas)
    throw InsufficientDataError("isometry: need at least " + std::to_string(minReplicas) + " replicas", replicas);
  if (grid.tMax != 1.0 || grid.nT % 2 != 0) throw DomainError("isometry: grid must cover [0, 1] with an even nT");
  const SheetSampler sampler(grid, H);
  std::vector<std::vector<double>> tab;
  for (const auto& phi : family) tab.push_back(tabulate_on_cells(std::cref(phi), grid));
  const std::size_t m = family.size();
  std::vector<double> s1(m, 0.0), s2(m, 0.0), s4(m, 0.0);
  for (std::size_t r = 0; r < replicas; ++r) {
    const NoiseSheet sheet = sampler.sample(1, seed + r);
    for (std::size_t q = 0; q < m; ++q) {
      const double x = wiener_integral(tab[q], sheet);
      s1[q] += x;
      s2[q] += x * x;
      s4[q] += x * x * x * x;
    }
  }
  std::vector<IsometryResult> out;
  const auto R = static_cast<double>(replicas);
  for (std::size_t q = 0; q < m; ++q) {
    IsometryResult res;
    res.name = family[q].name;
    res.H = H;
    res.replicas = replicas;
    res.target = isometry_target(family[q], H);
    res.mean = s1[q] / R;
    // the mean is known to be zero, so the second moment is the variance
    res.variance = s2[q] / R;
    const double m4 = s4[q] / R;
    res.stdError = std::sqrt(std::max(0.0, m4 - res.variance * res.variance) / R);
    if (res.stdError > 0.0) {
      res.z = (res.variance - res.target) / res.stdError;
      res.relativeGap = std::abs(res.variance - res.target) / res.target;
      res.fourthMomentRatio = m4 / (3.0 * res.variance * res.variance);
    } else {
      res.z = res.variance == res.target ? 0.0 : INFINITY;
      res.relativeGap = 0.0;
      res.fourthMomentRatio = 1.0;
    }
    out.push_back(res);
  }
  return out;
}

}  // namespace roughsheet
