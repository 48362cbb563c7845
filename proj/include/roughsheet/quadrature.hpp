#pragma once

// Half-line quadrature for the spectral integrals: integrands on (0, inf)
// that behave like a power of xi near 0 and like a sum of power-law
// amplitudes times cos/sin(omega xi) at infinity.
//
// The line is split into three parts:
//   (0, 1]          dyadic shells toward 0, geometric extrapolation;
//   [1, cutoff]     globally adaptive Gauss-Kronrod on the full integrand;
//   [cutoff, inf)   per tail term: dyadic shells with geometric extrapolation
//                   when omega == 0, half-period sums with repeated averaging
//                   of partial sums when omega > 0.
// A series whose shells stop shrinking is reported as divergent.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "roughsheet/errors.hpp"

namespace roughsheet {

struct QuadratureSpec {
  double relTol = 1e-10;
  double absTol = 1e-13;
  // Start of the tail treatment (>= 1).
  double cutoff = 64.0;
  // Shell / block budget for each series before declaring nonconvergence.
  int maxRefinements = 200;

  void validate() const {
    constexpr double floor = 100.0 * std::numeric_limits<double>::epsilon();
    if (!(relTol >= floor) || !(absTol >= floor))
      throw DomainError("quadrature tolerances must be at least 100 machine epsilons");
    if (!(cutoff >= 1.0)) throw DomainError("quadrature cutoff must be >= 1");
    if (maxRefinements < 8) throw DomainError("quadrature maxRefinements must be >= 8");
  }
};

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
  bool converged = true;
};

enum class Trig { Cos, Sin };

/// amplitude(xi) * trig(frequency * xi); frequency == 0 means no oscillation
/// (the trig factor is dropped).
struct TailTerm {
  double frequency = 0.0;
  Trig phase = Trig::Cos;
  std::function<double(double)> amplitude;

  double operator()(double xi) const {
    const double a = amplitude(xi);
    if (frequency == 0.0) return a;
    return a * (phase == Trig::Cos ? std::cos(frequency * xi) : std::sin(frequency * xi));
  }
};

struct HalfLineIntegrand {
  std::function<double(double)> full;
  // Decomposition of `full` valid on [cutoff, inf). Empty: `full` itself is
  // treated as a single non-oscillatory term.
  std::vector<TailTerm> tail;
  // Closed-form value of the integral over [cutoff, inf); overrides `tail`.
  std::optional<double> analyticTail;
  // Overrides QuadratureSpec::cutoff when set.
  std::optional<double> cutoff;

  // Adds amplitude * sin(frequency xi) with any sign of frequency.
  void add_sin(double frequency, std::function<double(double)> amplitude) {
    if (frequency == 0.0) return;
    if (frequency < 0.0) {
      tail.push_back({-frequency, Trig::Sin, [a = std::move(amplitude)](double x) { return -a(x); }});
    } else {
      tail.push_back({frequency, Trig::Sin, std::move(amplitude)});
    }
  }
  void add_cos(double frequency, std::function<double(double)> amplitude) {
    tail.push_back({std::abs(frequency), frequency == 0.0 ? Trig::Cos : Trig::Cos, std::move(amplitude)});
  }
};

namespace detail {

struct Panel {
  double a;
  double b;
  double value;
  double error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

template <class F>
Panel gk_panel(const F& f, double a, double b) {
  using boost::math::quadrature::gauss_kronrod;
  double err = 0.0;
  const double v = gauss_kronrod<double, 21>::integrate(f, a, b, 0, 0.0, &err);
  // without recursion Boost reports the error of the rule on [-1, 1]
  err *= 0.5 * (b - a);
  // Floor the estimate at rounding level so that smooth panels settle.
  const double floor = 50.0 * std::numeric_limits<double>::epsilon() * std::abs(v);
  return {a, b, v, std::max(err, floor)};
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod (21-point rule from Boost.Math): starts
/// from `initialPanels` equal panels and bisects the panel with the largest
/// error estimate until error <= max(absTol, relTol |value|) or maxPanels is
/// reached. A single panel can miss features much narrower than itself, so
/// callers integrating over wide ranges pass enough initial panels.
template <class F>
QuadResult adaptive_integrate(const F& f, double a, double b, double absTol, double relTol,
                              std::size_t initialPanels = 1, std::size_t maxPanels = 20000) {
  if (a == b) return {};
  std::vector<detail::Panel> heap;
  initialPanels = std::max<std::size_t>(initialPanels, 1);
  double value = 0.0;
  double error = 0.0;
  for (std::size_t i = 0; i < initialPanels; ++i) {
    const double lo = a + (b - a) * static_cast<double>(i) / static_cast<double>(initialPanels);
    const double hi = i + 1 == initialPanels
                          ? b
                          : a + (b - a) * static_cast<double>(i + 1) / static_cast<double>(initialPanels);
    heap.push_back(detail::gk_panel(f, lo, hi));
    value += heap.back().value;
    error += heap.back().error;
  }
  std::make_heap(heap.begin(), heap.end());
  // the floor keeps rounding noise in the integrand from stalling refinement
  while (error > std::max({absTol, relTol * std::abs(value), 1e-14 * std::abs(value)})) {
    if (heap.size() >= maxPanels) return {value, error, false};
    std::pop_heap(heap.begin(), heap.end());
    const detail::Panel worst = heap.back();
    heap.pop_back();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) return {value, error, false};
    const detail::Panel left = detail::gk_panel(f, worst.a, mid);
    const detail::Panel right = detail::gk_panel(f, mid, worst.b);
    value += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    heap.push_back(left);
    std::push_heap(heap.begin(), heap.end());
    heap.push_back(right);
    std::push_heap(heap.begin(), heap.end());
  }
  // Recompute the sums to shed accumulated rounding from the running updates.
  value = 0.0;
  error = 0.0;
  for (const auto& p : heap) {
    value += p.value;
    error += p.error;
  }
  return {value, error, true};
}

/// Sums shell(0) + shell(1) + ... where the shells shrink geometrically
/// (power-law integrands over dyadic shells). Once the ratio of consecutive
/// shells is stable and below 0.999 the remainder is added in closed form.
/// `relTol` is measured against the running sum of the series.
template <class Shell>
QuadResult geometric_series(const Shell& shell, double absBudget, double relTol, int maxShells) {
  double sum = 0.0;
  double err = 0.0;
  std::vector<double> v;
  v.reserve(static_cast<std::size_t>(maxShells));
  constexpr double kMaxRatio = 0.999;
  for (int k = 0; k < maxShells; ++k) {
    const QuadResult s = shell(k);
    if (!s.converged) return {sum + s.value, err + s.error + std::abs(s.value), false};
    sum += s.value;
    err += s.error;
    v.push_back(s.value);
    const double budget = std::max(absBudget, relTol * std::abs(sum));
    if (k < 2) continue;
    const double c2 = v[static_cast<std::size_t>(k)];
    const double c1 = v[static_cast<std::size_t>(k - 1)];
    const double c0 = v[static_cast<std::size_t>(k - 2)];
    if (c2 == 0.0 && c1 == 0.0) return {sum, err, true};
    if (c1 != 0.0 && c0 != 0.0) {
      const double q = c2 / c1;
      const double qPrev = c1 / c0;
      if (q >= 0.0 && q < kMaxRatio && std::abs(q - qPrev) <= 0.25 * (1.0 - q)) {
        const double tail = c2 * q / (1.0 - q);
        const double tailErr =
            std::abs(tail) * std::abs(q - qPrev) / (1.0 - q) + 1e-14 * std::abs(tail);
        if (tailErr <= 0.5 * budget) return {sum + tail, err + tailErr, true};
      }
      // Rapidly vanishing shells with erratic ratios (e.g. Gaussian tails).
      if (std::abs(c2) <= 1e-3 * budget && std::abs(c1) <= 1e-3 * budget && std::abs(q) < 0.5)
        return {sum, err + 2.0 * std::abs(c2), true};
    }
  }
  const double last = v.empty() ? 0.0 : std::abs(v.back());
  return {sum, err + last * static_cast<double>(maxShells), false};
}

/// Integral of amplitude(xi) * trig(omega xi) over [start, inf), summed over
/// half periods. The partial sums are smoothed by repeated pairwise averaging
/// over a trailing window, which converges quickly for slowly varying
/// amplitudes.
inline QuadResult oscillatory_tail(const TailTerm& term, double start, double absBudget,
                                   double relTol, int maxBlocks) {
  const double omega = term.frequency;
  const double halfPeriod = std::numbers::pi / omega;
  // zeros: cos at (n + 1/2) pi / omega, sin at n pi / omega
  const double offset = term.phase == Trig::Cos ? 0.5 : 0.0;
  double n = std::ceil(start / halfPeriod - offset);
  double z = (n + offset) * halfPeriod;
  auto f = [&term](double x) { return term(x); };
  const double pieceRel = 0.01 * relTol;
  QuadResult first = adaptive_integrate(f, start, z, 0.01 * absBudget, pieceRel);
  if (!first.converged) return {first.value, first.error, false};

  std::vector<double> partial;
  partial.push_back(first.value);
  double err = first.error;
  static constexpr std::size_t kWindow = 24;
  auto accelerate = [&partial](std::size_t count) {
    const std::size_t m = std::min<std::size_t>(count, kWindow);
    std::vector<double> row(partial.begin() + static_cast<std::ptrdiff_t>(count - m),
                            partial.begin() + static_cast<std::ptrdiff_t>(count));
    for (std::size_t level = 1; level < m; ++level)
      for (std::size_t j = 0; j + level < m; ++j) row[j] = 0.5 * (row[j] + row[j + 1]);
    return row.front();
  };
  double previous = std::numeric_limits<double>::quiet_NaN();
  const int total = std::max(4 * maxBlocks, 64);
  for (int block = 0; block < total; ++block) {
    const double a = z;
    z += halfPeriod;
    const QuadResult piece = adaptive_integrate(f, a, z, 0.01 * absBudget, pieceRel);
    if (!piece.converged) return {partial.back() + piece.value, err + piece.error, false};
    partial.push_back(partial.back() + piece.value);
    err += piece.error;
    if (partial.size() < kWindow + 1 || partial.size() % 4 != 0) continue;
    const double estimate = accelerate(partial.size());
    if (!std::isnan(previous)) {
      const double diff = std::abs(estimate - previous);
      const double budget = std::max(absBudget, relTol * std::abs(estimate));
      if (diff <= 0.5 * budget) return {estimate, err + diff, true};
    }
    previous = estimate;
  }
  return {partial.back(), err + std::abs(partial.back() - previous), false};
}

namespace detail {

inline void check_tail_decomposition(const HalfLineIntegrand& in, double cutoff) {
  if (in.tail.empty() || in.analyticTail) return;
  for (double scale : {1.0, 1.37, 3.11, 17.9}) {
    const double x = cutoff * scale;
    const double direct = in.full(x);
    double sum = 0.0;
    double magnitude = 0.0;
    for (const auto& t : in.tail) {
      const double v = t(x);
      sum += v;
      magnitude += std::abs(v);
    }
    if (std::abs(direct - sum) > 1e-9 * std::max(magnitude, std::abs(direct)) + 1e-300)
      throw std::logic_error("tail decomposition does not reproduce the integrand at xi = " +
                             std::to_string(x));
  }
}

}  // namespace detail

/// Integral of `in.full` over (0, inf).
inline QuadResult integrate_half_line(const HalfLineIntegrand& in, const QuadratureSpec& spec) {
  spec.validate();
  const double cutoff = in.cutoff.value_or(spec.cutoff);
  if (!(cutoff >= 1.0)) throw DomainError("integrate_half_line: cutoff must be >= 1");
  detail::check_tail_decomposition(in, cutoff);

  const QuadResult core =
      cutoff > 1.0 ? adaptive_integrate(in.full, 1.0, cutoff, 0.1 * spec.absTol, 0.1 * spec.relTol,
                                        static_cast<std::size_t>(std::ceil(cutoff - 1.0)))
                   : QuadResult{};
  if (!core.converged)
    throw NumericalError("quadrature: core panel did not converge", core.value, core.error);

  std::vector<TailTerm> terms = in.tail;
  if (terms.empty() && !in.analyticTail) terms.push_back({0.0, Trig::Cos, in.full});

  // Budgets are first sized from the core, then tightened once if the total
  // turns out smaller (cancellation between tail terms).
  double scale = std::max(std::abs(core.value), spec.absTol);
  QuadResult total;
  for (int attempt = 0; attempt < 3; ++attempt) {
    const std::size_t parts = terms.size() + 1;
    const double budget = std::max(spec.absTol, spec.relTol * scale) / (4.0 * static_cast<double>(parts));
    const double relPart = spec.relTol / (4.0 * static_cast<double>(parts));

    const QuadResult inner = geometric_series(
        [&](int k) {
          const double hi = std::ldexp(1.0, -k);
          return adaptive_integrate(in.full, 0.5 * hi, hi, 0.1 * budget, 0.1 * relPart);
        },
        budget, relPart, std::min(spec.maxRefinements, 1000));
    if (!inner.converged)
      throw NumericalError("quadrature: integrand not summable at xi -> 0", inner.value, inner.error);

    total = {core.value + inner.value, core.error + inner.error, true};
    if (in.analyticTail) {
      total.value += *in.analyticTail;
    } else {
      for (const auto& term : terms) {
        QuadResult t;
        if (term.frequency == 0.0) {
          auto g = [&term](double x) { return term.amplitude(x); };
          t = geometric_series(
              [&](int k) {
                const double lo = std::ldexp(cutoff, k);
                return adaptive_integrate(g, lo, 2.0 * lo, 0.1 * budget, 0.1 * relPart);
              },
              budget, relPart, std::min(spec.maxRefinements, 1000));
        } else {
          t = oscillatory_tail(term, cutoff, budget, relPart, spec.maxRefinements);
        }
        if (!t.converged)
          throw NumericalError("quadrature: tail series did not converge (integral divergent or "
                               "too slowly convergent)",
                               total.value + t.value, t.error);
        total.value += t.value;
        total.error += t.error;
      }
    }
    const double allowed = std::max(spec.absTol, spec.relTol * std::abs(total.value));
    if (total.error <= allowed) return total;
    if (std::abs(total.value) >= scale) break;
    scale = std::max(std::abs(total.value), spec.absTol);
  }
  throw NumericalError("quadrature: requested tolerance not reached", total.value, total.error);
}

}  // namespace roughsheet
