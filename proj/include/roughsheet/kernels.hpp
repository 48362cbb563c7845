#pragma once

// Green's functions of the heat and wave operators on the real line, their
// Fourier transforms, and the deterministic (homogeneous) part of the mild
// solution.
//
// Fourier convention used everywhere in the library:
//   F g(xi) = \int e^{-i xi x} g(x) dx.

#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "roughsheet/errors.hpp"

namespace roughsheet {

enum class OperatorKind { Heat, Wave };

inline std::string_view to_string(OperatorKind op) {
  switch (op) {
    case OperatorKind::Heat: return "heat";
    case OperatorKind::Wave: return "wave";
  }
  return "?";
}

inline OperatorKind parse_operator(std::string_view name) {
  if (name == "heat" || name == "Heat" || name == "she") return OperatorKind::Heat;
  if (name == "wave" || name == "Wave" || name == "swe") return OperatorKind::Wave;
  throw DomainError("unknown operator '" + std::string(name) + "' (expected heat|wave)");
}

/// Deterministic initial data u(0,.) = u0 and, for the wave operator,
/// u_t(0,.) = v0. An empty v0 means v0 == 0.
///
/// The Hölder metadata is a declaration; validate() spot-checks it on a
/// window.
struct InitialData {
  std::function<double(double)> u0;
  std::function<double(double)> v0;
  double holderExponent = 1.0;
  double holderConstant = 0.0;
  double bound = 0.0;
  std::string name = "custom";
  // Exact heat evolution (t, x) -> (G_t * u0)(x) when known in closed form;
  // otherwise the heat part of homogeneous_solution uses quadrature.
  std::function<double(double, double)> heatEvolution;
  bool identicallyZero = false;

  bool hasVelocity() const { return static_cast<bool>(v0); }

  double position(double x) const { return u0 ? u0(x) : 0.0; }
  double velocity(double x) const { return v0 ? v0(x) : 0.0; }

  // Checks the declared Hölder and sup bounds on n equispaced points of
  // [lo, hi], over all pairs at dyadic index distances.
  void validate(double lo, double hi, std::size_t n = 257) const {
    if (!(holderExponent > 0.0 && holderExponent <= 1.0))
      throw DomainError("initial data: Hölder exponent must lie in (0, 1]");
    if (holderConstant < 0.0 || bound < 0.0)
      throw DomainError("initial data: Hölder constant and bound must be nonnegative");
    if (!(lo < hi) || n < 2) throw DomainError("initial data: empty validation window");
    const double step = (hi - lo) / static_cast<double>(n - 1);
    std::vector<double> xs(n), us(n), vs(n);
    for (std::size_t i = 0; i < n; ++i) {
      xs[i] = lo + step * static_cast<double>(i);
      us[i] = position(xs[i]);
      vs[i] = velocity(xs[i]);
      const double slack = 1e-12 * (1.0 + bound);
      if (std::abs(us[i]) > bound + slack || std::abs(vs[i]) > bound + slack)
        throw DomainError("initial data exceeds declared bound at x = " + std::to_string(xs[i]));
    }
    for (std::size_t gap = 1; gap < n; gap *= 2) {
      const double dist = std::pow(step * static_cast<double>(gap), holderExponent);
      for (std::size_t i = 0; i + gap < n; ++i) {
        const double allowed = holderConstant * dist * (1.0 + 1e-9) + 1e-12;
        if (std::abs(us[i + gap] - us[i]) > allowed || std::abs(vs[i + gap] - vs[i]) > allowed)
          throw DomainError("initial data violates declared Hölder bound near x = " +
                            std::to_string(xs[i]));
      }
    }
  }

  static InitialData zero() {
    InitialData d;
    d.u0 = [](double) { return 0.0; };
    d.heatEvolution = [](double, double) { return 0.0; };
    d.name = "zero";
    d.identicallyZero = true;
    return d;
  }

  static InitialData constant(double c) {
    InitialData d;
    d.u0 = [c](double) { return c; };
    d.heatEvolution = [c](double, double) { return c; };
    d.bound = std::abs(c);
    d.name = "constant";
    return d;
  }

  /// Lacunary Weierstrass sum amplitude * sum_n 2^{-alpha n} cos(2^n x + phase_n):
  /// exactly alpha-Hölder, bounded, and cheap to evaluate anywhere. Velocity
  /// is zero.
  static InitialData weierstrass(double alpha, double amplitude, int octaves = 24) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("weierstrass: alpha must lie in (0, 1)");
    std::vector<double> weights(static_cast<std::size_t>(octaves));
    std::vector<double> phases(weights.size());
    double total = 0.0;
    for (int n = 0; n < octaves; ++n) {
      weights[static_cast<std::size_t>(n)] = amplitude * std::pow(2.0, -alpha * n);
      // golden-ratio phases avoid coherent alignment between octaves
      phases[static_cast<std::size_t>(n)] =
          2.0 * std::numbers::pi * std::fmod(0.6180339887498949 * (n + 1), 1.0);
      total += weights[static_cast<std::size_t>(n)];
    }
    InitialData d;
    d.u0 = [weights, phases](double x) {
      double s = 0.0;
      double freq = 1.0;
      for (std::size_t n = 0; n < weights.size(); ++n, freq *= 2.0)
        s += weights[n] * std::cos(freq * x + phases[n]);
      return s;
    };
    // each octave is a heat eigenfunction: cos(k x + p) decays as e^{-k^2 t}
    d.heatEvolution = [weights, phases](double t, double x) {
      double s = 0.0;
      double freq = 1.0;
      for (std::size_t n = 0; n < weights.size(); ++n, freq *= 2.0) {
        const double decay = std::exp(-freq * freq * t);
        if (decay < 1e-300) break;
        s += weights[n] * decay * std::cos(freq * x + phases[n]);
      }
      return s;
    };
    d.holderExponent = alpha;
    // sum_n 2^{-alpha n} min(2, 2^n h) <= h^alpha * (a + b), split at 2^n h = 2.
    const double r = std::pow(2.0, 1.0 - alpha);
    const double a = r * r / (r - 1.0);
    const double b = 2.0 * std::pow(2.0, -alpha) / (1.0 - std::pow(2.0, -alpha));
    d.holderConstant = std::max(std::abs(amplitude) * (a + b), 2.0 * total);
    d.bound = total;
    d.name = "weierstrass";
    return d;
  }
};

inline void require_positive_time(double t, const char* where) {
  if (!(t > 0.0)) throw DomainError(std::string(where) + ": time must be positive");
}

/// G_t(x): heat kernel (4 pi t)^{-1/2} exp(-x^2/(4t)), or half the light-cone
/// indicator for the wave operator (zero on the cone boundary |x| = t).
inline double green_value(OperatorKind op, double t, double x) {
  require_positive_time(t, "green_value");
  switch (op) {
    case OperatorKind::Heat:
      return std::exp(-x * x / (4.0 * t)) / std::sqrt(4.0 * std::numbers::pi * t);
    case OperatorKind::Wave:
      return std::abs(x) < t ? 0.5 : 0.0;
  }
  return 0.0;
}

/// F G_t(xi): exp(-t xi^2) for heat, sin(t xi)/xi for wave (t at xi = 0).
inline double green_fourier(OperatorKind op, double t, double xi) {
  require_positive_time(t, "green_fourier");
  switch (op) {
    case OperatorKind::Heat:
      return std::exp(-t * xi * xi);
    case OperatorKind::Wave: {
      const double z = t * xi;
      if (std::abs(z) < 1e-4) return t * (1.0 - z * z / 6.0);
      return std::sin(z) / xi;
    }
  }
  return 0.0;
}

/// omega(t, x): solution of the homogeneous equation with the given data.
/// Heat uses adaptive Gauss-Kronrod over +-10 standard deviations of the
/// kernel; wave uses d'Alembert's formula.
inline double homogeneous_solution(OperatorKind op, const InitialData& init, double t, double x,
                                   double tolerance = 1e-10) {
  if (t < 0.0) throw DomainError("homogeneous_solution: time must be nonnegative");
  if (t == 0.0) return init.position(x);
  using boost::math::quadrature::gauss_kronrod;
  switch (op) {
    case OperatorKind::Heat: {
      if (init.heatEvolution) return init.heatEvolution(t, x);
      const double sd = std::sqrt(2.0 * t);
      auto f = [&](double z) {
        return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi) * init.position(x + sd * z);
      };
      double err = 0.0;
      double l1 = 0.0;
      const double v = gauss_kronrod<double, 31>::integrate(f, -10.0, 10.0, 20, tolerance, &err, &l1);
      if (err > tolerance * std::max(1.0, l1))
        throw NumericalError("homogeneous_solution: heat quadrature did not converge", v, err);
      return v;
    }
    case OperatorKind::Wave: {
      double v = 0.5 * (init.position(x + t) + init.position(x - t));
      if (init.hasVelocity()) {
        double err = 0.0;
        double l1 = 0.0;
        const double integral = gauss_kronrod<double, 31>::integrate(
            [&](double eta) { return init.velocity(eta); }, x - t, x + t, 20, tolerance, &err, &l1);
        if (err > tolerance * std::max(1.0, l1))
          throw NumericalError("homogeneous_solution: velocity quadrature did not converge",
                               integral, err);
        v += 0.5 * integral;
      }
      return v;
    }
  }
  return 0.0;
}

}  // namespace roughsheet
