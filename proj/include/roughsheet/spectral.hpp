#pragma once

// The spectral measure mu(d xi) = c_H |xi|^{1-2H} d xi of the fractional
// noise and the integrals built from it: energies of test functions, the
// variance of the stochastic convolution, shift energies and the covariance
// gap R(0) - R(x).
//
// Every integrand is even in xi, so integrals over the line are twice the
// half-line integral. Inner time integrals are in closed form:
//   heat  K(t, xi) = (1 - e^{-2 t xi^2}) / (2 xi^2)
//   wave  K(t, xi) = (t/2 - sin(2 t xi) / (4 xi)) / xi^2

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "roughsheet/errors.hpp"
#include "roughsheet/kernels.hpp"
#include "roughsheet/quadrature.hpp"

namespace roughsheet {

struct SpectralDensity {
  double H = 0.25;
  double cH = 0.0;
  double CH = 0.0;

  // |xi|^{1-2H}
  double weight(double xi) const { return H == 0.5 ? 1.0 : std::pow(std::abs(xi), 1.0 - 2.0 * H); }
  double density(double xi) const { return cH * weight(xi); }
};

inline SpectralDensity make_density(double H) {
  if (!(H > 0.0 && H <= 0.5)) throw DomainError("spectral density: H must lie in (0, 1/2]");
  SpectralDensity d;
  d.H = H;
  d.cH = std::tgamma(2.0 * H + 1.0) * std::sin(std::numbers::pi * H) / (2.0 * std::numbers::pi);
  d.CH = H * (1.0 - 2.0 * H) / 2.0;
  return d;
}

/// K(t, xi) = int_0^t |F G_theta(xi)|^2 d theta.
inline double time_integrated_kernel(OperatorKind op, double t, double xi) {
  if (t <= 0.0) return 0.0;
  xi = std::abs(xi);
  switch (op) {
    case OperatorKind::Heat: {
      const double a = 2.0 * t * xi * xi;
      if (a < 1e-300) return t;
      return -std::expm1(-a) / (2.0 * xi * xi);
    }
    case OperatorKind::Wave: {
      const double z = t * xi;
      if (z < 1e-8) return t * t * t / 3.0;
      if (z < 1.0) {
        // 2z - sin 2z by its series, the closed form cancels badly here
        const double w = 2.0 * z, w2 = w * w;
        double term = w * w2 / 6.0, sum = term;
        for (int k = 2; k < 30 && std::abs(term) > 1e-18 * sum; ++k) {
          term *= -w2 / static_cast<double>((2 * k) * (2 * k + 1));
          sum += term;
        }
        return t * t * t * sum / (4.0 * z * z * z);
      }
      return (0.5 * t - std::sin(2.0 * z) / (4.0 * xi)) / (xi * xi);
    }
  }
  return 0.0;
}

namespace detail {

inline void require_time(double t, const char* where) {
  if (!(t > 0.0) || !std::isfinite(t)) throw DomainError(std::string(where) + ": time must be positive");
}

// Integrand of the form weight(xi) * K(T, xi) * extra(xi) on (0, inf) for
// extra == 1, with the tail decomposition of K.
inline void add_kernel_tail(HalfLineIntegrand& in, OperatorKind op, double T,
                            std::function<double(double)> weight) {
  if (op == OperatorKind::Heat) {
    in.tail.push_back({0.0, Trig::Cos, [weight, T](double xi) {
                         return weight(xi) * time_integrated_kernel(OperatorKind::Heat, T, xi);
                       }});
  } else {
    in.tail.push_back({0.0, Trig::Cos, [weight, T](double xi) { return weight(xi) * 0.5 * T / (xi * xi); }});
    in.add_sin(2.0 * T, [weight](double xi) { return -weight(xi) / (4.0 * xi * xi * xi); });
  }
}

}  // namespace detail

/// c_H int |gHat(xi)|^2 |xi|^{1-2H} d xi.
inline double weighted_energy(const std::function<std::complex<double>(double)>& gHat,
                              const SpectralDensity& density, const QuadratureSpec& quad = {}) {
  HalfLineIntegrand in;
  in.full = [&gHat, &density](double xi) {
    return density.density(xi) * (std::norm(gHat(xi)) + std::norm(gHat(-xi)));
  };
  return integrate_half_line(in, quad).value;
}

/// int |gHat(xi)|^2 |xi|^alpha d xi without the c_H factor, for any alpha.
/// Divergent integrals raise NumericalError.
inline double weighted_energy_exponent(const std::function<std::complex<double>(double)>& gHat,
                                       double alpha, const QuadratureSpec& quad = {}) {
  HalfLineIntegrand in;
  in.full = [&gHat, alpha](double xi) {
    return std::pow(xi, alpha) * (std::norm(gHat(xi)) + std::norm(gHat(-xi)));
  };
  return integrate_half_line(in, quad).value;
}

/// int_0^t int |F G_theta(xi)|^2 |xi|^alpha d xi d theta. Finite exactly when
/// -1 < alpha < 1; otherwise the quadrature reports divergence.
inline double kernel_energy(OperatorKind op, double t, double alpha, const QuadratureSpec& quad = {}) {
  detail::require_time(t, "kernel_energy");
  auto weight = [alpha](double xi) { return 2.0 * std::pow(xi, alpha); };
  HalfLineIntegrand in;
  in.full = [=](double xi) { return weight(xi) * time_integrated_kernel(op, t, xi); };
  detail::add_kernel_tail(in, op, t, weight);
  return integrate_half_line(in, quad).value;
}

/// C_H int int |g(x) - g(y)|^2 / |x - y|^{2-2H} dx dy, with g treated as zero
/// outside [-supportRadius, supportRadius]. The inner integrals start from
/// panels of width <= 1/2, so g should not have features much narrower.
inline double difference_energy(const std::function<double(double)>& g, const SpectralDensity& density,
                                 const QuadratureSpec& quad = {}, double supportRadius = 64.0) {
  if (!(density.H < 0.5)) throw DomainError("difference_energy: requires H < 1/2");
  if (!(supportRadius >= 0.5)) throw DomainError("difference_energy: support radius must be >= 1/2");
  quad.validate();
  const double R = supportRadius;
  const double H = density.H;
  auto gc = [&g, R](double y) { return std::abs(y) <= R ? g(y) : 0.0; };
  auto panels = [](double a, double b) { return static_cast<std::size_t>(std::ceil(2.0 * (b - a))); };
  const double innerRel = 0.01 * quad.relTol;
  const double innerAbs = 1e-3 * quad.absTol;

  const QuadResult mass = adaptive_integrate([&](double y) { return gc(y) * gc(y); }, -R, R, innerAbs, innerRel,
                                           panels(-R, R));
  if (!mass.converged) throw NumericalError("difference_energy: L2 mass did not converge", mass.value, mass.error);

  // D(z) = int (g(y+z) - g(y))^2 dy, split at the clipping points.
  auto D = [&](double z) {
    if (z >= 2.0 * R) return 2.0 * mass.value;
    double cuts[4] = {-R - z, -R, R - z, R};
    std::sort(std::begin(cuts), std::end(cuts));
    double total = 0.0;
    for (int i = 0; i < 3; ++i) {
      if (cuts[i + 1] <= cuts[i]) continue;
      const QuadResult r = adaptive_integrate(
          [&](double y) {
            const double d = gc(y + z) - gc(y);
            return d * d;
          },
          cuts[i], cuts[i + 1], innerAbs, innerRel, panels(cuts[i], cuts[i + 1]));
      if (!r.converged) throw NumericalError("difference_energy: inner integral did not converge", r.value, r.error);
      total += r.value;
    }
    return total;
  };
  if (density.CH == 0.0) return 0.0;
  HalfLineIntegrand in;
  in.full = [&](double z) { return 2.0 * density.CH * D(z) * std::pow(z, 2.0 * H - 2.0); };
  in.cutoff = 2.0 * R;
  in.analyticTail = 2.0 * density.CH * 2.0 * mass.value * std::pow(2.0 * R, 2.0 * H - 1.0) / (1.0 - 2.0 * H);
  return integrate_half_line(in, quad).value;
}

/// int_0^t int |F G_theta(xi)|^2 mu(d xi) d theta: the variance of the
/// stochastic convolution at a point. Scales exactly as t^H (heat) and
/// t^{1+2H} (wave).
inline double variance_integral(OperatorKind op, double t, const SpectralDensity& density,
                                const QuadratureSpec& quad = {}) {
  detail::require_time(t, "variance_integral");
  auto weight = [density](double xi) { return 2.0 * density.density(xi); };
  HalfLineIntegrand in;
  in.full = [=](double xi) { return weight(xi) * time_integrated_kernel(op, t, xi); };
  detail::add_kernel_tail(in, op, t, weight);
  return integrate_half_line(in, quad).value;
}

/// Heat closed form c_H 2^H Gamma(1-H) t^H / (2H).
inline double heat_variance_closed_form(double t, const SpectralDensity& density) {
  const double H = density.H;
  return density.cH * std::pow(2.0, H) * std::tgamma(1.0 - H) * std::pow(t, H) / (2.0 * H);
}

/// int_0^T int |F G_{t+h}(xi) - F G_t(xi)|^2 mu(d xi) dt.
inline double temporal_shift_energy(OperatorKind op, double h, double T, const SpectralDensity& density,
                                    const QuadratureSpec& quad = {}) {
  if (!(h > 0.0)) throw DomainError("temporal_shift_energy: shift must be positive");
  detail::require_time(T, "temporal_shift_energy");
  auto weight = [density](double xi) { return 2.0 * density.density(xi); };
  HalfLineIntegrand in;
  if (op == OperatorKind::Heat) {
    in.full = [=](double xi) {
      const double a = -std::expm1(-h * xi * xi);
      return weight(xi) * a * a * time_integrated_kernel(OperatorKind::Heat, T, xi);
    };
    return integrate_half_line(in, quad).value;
  }
  // 4 sin^2(h xi/2)/xi^2 * (T/2 + (sin(A xi) - sin(h xi)) / (4 xi)), A = 2T + h
  const double A = 2.0 * T + h;
  in.full = [=](double xi) {
    const double s = std::sin(0.5 * h * xi);
    double bracket;
    if (A * xi < 1e-3) {
      // (sin(A xi) - sin(h xi)) / (4 xi) = (A - h)/4 - (A^3 - h^3) xi^2 / 24 + ...
      bracket = 0.5 * T + 0.25 * (A - h) - (A * A * A - h * h * h) * xi * xi / 24.0;
    } else {
      bracket = 0.5 * T + (std::sin(A * xi) - std::sin(h * xi)) / (4.0 * xi);
    }
    double pre;
    if (h * xi < 1e-4) {
      pre = h * h * (1.0 - h * h * xi * xi / 12.0);
    } else {
      pre = 4.0 * s * s / (xi * xi);
    }
    return weight(xi) * pre * bracket;
  };
  auto amp = [weight](double c, int power) {
    return [weight, c, power](double xi) { return c * weight(xi) / std::pow(xi, power); };
  };
  in.tail.push_back({0.0, Trig::Cos, amp(T, 2)});
  in.add_cos(h, amp(-T, 2));
  in.add_sin(A, amp(0.5, 3));
  in.add_sin(h, amp(-0.5, 3));
  in.add_sin(A + h, amp(-0.25, 3));
  in.add_sin(A - h, amp(-0.25, 3));
  in.add_sin(2.0 * h, amp(0.25, 3));
  return integrate_half_line(in, quad).value;
}

/// int_0^T int (1 - cos(xi h)) |F G_t(xi)|^2 mu(d xi) dt. Even in h.
inline double spatial_shift_energy(OperatorKind op, double h, double T, const SpectralDensity& density,
                                   const QuadratureSpec& quad = {}) {
  detail::require_time(T, "spatial_shift_energy");
  h = std::abs(h);
  if (h == 0.0) return 0.0;
  auto weight = [density](double xi) { return 2.0 * density.density(xi); };
  HalfLineIntegrand in;
  in.full = [=](double xi) {
    const double s = std::sin(0.5 * h * xi);
    return weight(xi) * 2.0 * s * s * time_integrated_kernel(op, T, xi);
  };
  if (op == OperatorKind::Heat) {
    auto k = [=](double xi) { return weight(xi) * time_integrated_kernel(OperatorKind::Heat, T, xi); };
    in.tail.push_back({0.0, Trig::Cos, k});
    in.add_cos(h, [k](double xi) { return -k(xi); });
  } else {
    auto amp = [weight](double c, int power) {
      return [weight, c, power](double xi) { return c * weight(xi) / std::pow(xi, power); };
    };
    // (1 - cos h xi)(T/(2 xi^2) - sin(2T xi)/(4 xi^3))
    in.tail.push_back({0.0, Trig::Cos, amp(0.5 * T, 2)});
    in.add_cos(h, amp(-0.5 * T, 2));
    in.add_sin(2.0 * T, amp(-0.25, 3));
    in.add_sin(2.0 * T + h, amp(0.125, 3));
    in.add_sin(2.0 * T - h, amp(0.125, 3));
  }
  return integrate_half_line(in, quad).value;
}

/// R(0) - R(x) for R(x) = E[u(t,0) u(t,x)] of the stochastic convolution.
inline double covariance_gap(OperatorKind op, double t, double x, const SpectralDensity& density,
                             const QuadratureSpec& quad = {}) {
  detail::require_time(t, "covariance_gap");
  return spatial_shift_energy(op, x, t, density, quad);
}

struct IncrementVariance {
  double I1 = 0.0;  // contribution of (s, t]
  double I2 = 0.0;  // contribution of [0, s]
  double total() const { return I1 + I2; }
};

/// Variance of u(t,x) - u(s,x) for the stochastic convolution, split into
/// the new-noise part I1 and the memory part I2.
inline IncrementVariance increment_variance(OperatorKind op, double s, double t, const SpectralDensity& density,
                                            const QuadratureSpec& quad = {}) {
  if (!(s >= 0.0 && s < t)) throw DomainError("increment_variance: requires 0 <= s < t");
  IncrementVariance r;
  r.I1 = variance_integral(op, t - s, density, quad);
  if (s > 0.0) r.I2 = temporal_shift_energy(op, t - s, s, density, quad);
  return r;
}

}  // namespace roughsheet
