#pragma once

// Empirical Hölder exponents: structure functions of an ensemble, log-log
// fits, and the quadrature-only optimality checks for the stochastic
// convolution.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "roughsheet/errors.hpp"
#include "roughsheet/kernels.hpp"
#include "roughsheet/solver.hpp"
#include "roughsheet/spectral.hpp"

namespace roughsheet {

/// Heat: |t-s|^{1/2} + |x-y|; wave: |t-s| + |x-y|.
inline double metric(OperatorKind op, double t, double x, double s, double y) {
  const double dt = std::abs(t - s);
  return (op == OperatorKind::Heat ? std::sqrt(dt) : dt) + std::abs(x - y);
}

enum class Direction { Spatial, Temporal };

inline std::string_view to_string(Direction d) { return d == Direction::Spatial ? "spatial" : "temporal"; }

inline Direction parse_direction(std::string_view s) {
  if (s == "spatial" || s == "space" || s == "x") return Direction::Spatial;
  if (s == "temporal" || s == "time" || s == "t") return Direction::Temporal;
  throw DomainError("unknown direction '" + std::string(s) + "' (expected spatial|temporal)");
}

/// Slope of the p-th structure function predicted for exponent min(alpha, H):
/// p*e in space, p*e/2 (heat) or p*e (wave) in time.
inline double theoretical_slope(OperatorKind op, Direction dir, double p, double H, double alpha = 1.0) {
  const double e = std::min(alpha, H);
  if (dir == Direction::Spatial) return p * e;
  return op == OperatorKind::Heat ? 0.5 * p * e : p * e;
}

/// Integer lags (in cells or steps) spaced by sqrt(2) from lo to hi inclusive.
inline std::vector<std::size_t> half_dyadic_lags(std::size_t lo, std::size_t hi) {
  if (lo < 1 || hi < lo) throw DomainError("lag range must satisfy 1 <= lo <= hi");
  std::vector<std::size_t> out;
  for (int k = 0;; ++k) {
    const auto v = static_cast<std::size_t>(std::llround(std::pow(2.0, 0.5 * k)));
    if (v > hi) break;
    if (v >= lo && (out.empty() || out.back() != v)) out.push_back(v);
  }
  return out;
}

struct StructureFunction {
  Direction direction = Direction::Spatial;
  double p = 2.0;
  std::vector<double> lags;  // physical units
  std::vector<double> values;
  std::vector<double> stdErrors;  // across replicas
  std::vector<std::size_t> sampleCounts;
};

/// Streams replicas and accumulates mean |increment|^p (Euclidean norm over
/// components) for several p at once. Base points:
///  * spatial: the listed time slots; nodes j with j - maxLag and j + maxLag
///    both inside the evaluation window;
///  * temporal: times t_n >= baseTimeFraction * tMax with t_{n+lag} stored;
///    every spaceStride-th window node.
/// Per-replica means are kept so standard errors and cross-moments between
/// orders use replica-level independence.
class StructureAccumulator {
 public:
  struct Options {
    Direction direction = Direction::Spatial;
    std::vector<double> orders = {2.0};
    std::vector<std::size_t> lags;  // in cells (spatial) or steps (temporal)
    std::vector<std::size_t> timeSlots;  // spatial: time indices to use; default the last
    double baseTimeFraction = 0.5;
    std::size_t spaceStride = 1;
  };

  explicit StructureAccumulator(Options o) : o_(std::move(o)) {
    if (o_.lags.empty()) throw DomainError("structure function: no lags");
    if (!std::is_sorted(o_.lags.begin(), o_.lags.end()) || o_.lags.front() == 0)
      throw DomainError("structure function: lags must be positive and increasing");
    for (double p : o_.orders)
      if (!(p >= 1.0)) throw DomainError("structure function: moment order must be >= 1");
    if (o_.spaceStride == 0) o_.spaceStride = 1;
    if (!(o_.baseTimeFraction >= 0.0 && o_.baseTimeFraction < 1.0))
      throw DomainError("structure function: base time fraction must lie in [0, 1)");
  }

  const Options& options() const { return o_; }
  std::size_t replicas() const { return replicaMeans_.size(); }

  void add(const SolutionField& f) {
    if (!haveGrid_) {
      grid_ = f.grid;
      haveGrid_ = true;
    } else if (!(grid_ == f.grid)) {
      throw DomainError("structure function: replicas on different grids");
    }
    const std::size_t maxLag = o_.lags.back();
    const std::size_t nL = o_.lags.size(), nP = o_.orders.size();
    std::vector<double> sums(nL * nP, 0.0);
    std::vector<std::size_t> counts(nL, 0);
    const std::size_t d = f.d;
    auto accumulate = [&](std::size_t l, const double* a, const double* b, std::size_t stride) {
      double s2 = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        const double diff = a[c * stride] - b[c * stride];
        s2 += diff * diff;
      }
      const double norm = std::sqrt(s2);
      for (std::size_t q = 0; q < nP; ++q) {
        const double p = o_.orders[q];
        sums[l * nP + q] += p == 2.0 ? s2 : (p == 4.0 ? s2 * s2 : std::pow(norm, p));
      }
      ++counts[l];
    };
    const std::size_t plane = f.slots() * f.grid.nX;
    if (o_.direction == Direction::Spatial) {
      if (f.jLo + 2 * maxLag >= f.jHi) throw DomainError("structure function: largest lag does not fit the window");
      const std::size_t jFirst = f.jLo + maxLag, jLast = f.jHi - 1 - maxLag;  // inclusive
      std::vector<std::size_t> slots;
      if (o_.timeSlots.empty()) {
        slots.push_back(f.slots() - 1);
      } else {
        for (std::size_t n : o_.timeSlots) slots.push_back(f.slot_of(n));
      }
      for (std::size_t s : slots)
        for (std::size_t l = 0; l < nL; ++l)
          for (std::size_t j = jFirst; j <= jLast; ++j)
            accumulate(l, f.values.data() + s * f.grid.nX + j + o_.lags[l], f.values.data() + s * f.grid.nX + j, plane);
    } else {
      const double t0 = o_.baseTimeFraction * f.grid.tMax;
      for (std::size_t l = 0; l < nL; ++l) {
        const std::size_t lag = o_.lags[l];
        for (std::size_t s = 0; s < f.slots(); ++s) {
          const std::size_t n = f.times[s];
          if (f.grid.time(n) < t0 - 1e-12 * f.grid.tMax) continue;
          auto it = std::lower_bound(f.times.begin(), f.times.end(), n + lag);
          if (it == f.times.end() || *it != n + lag) continue;
          const std::size_t s2 = static_cast<std::size_t>(it - f.times.begin());
          for (std::size_t j = f.jLo; j < f.jHi; j += o_.spaceStride)
            accumulate(l, f.values.data() + s2 * f.grid.nX + j, f.values.data() + s * f.grid.nX + j, plane);
        }
      }
    }
    std::vector<double> means(nL * nP, 0.0);
    for (std::size_t l = 0; l < nL; ++l)
      for (std::size_t q = 0; q < nP; ++q)
        means[l * nP + q] = counts[l] ? sums[l * nP + q] / static_cast<double>(counts[l]) : 0.0;
    replicaMeans_.push_back(std::move(means));
    if (counts_.empty()) counts_.assign(nL, 0);
    for (std::size_t l = 0; l < nL; ++l) counts_[l] += counts[l];
  }

  /// Structure function of order orders[q]. Throws InsufficientDataError if
  /// a lag has fewer than minSamples increments.
  StructureFunction result(std::size_t q = 0, std::size_t minSamples = 100) const {
    if (replicaMeans_.empty()) throw InsufficientDataError("structure function: empty ensemble", 0);
    if (q >= o_.orders.size()) throw DomainError("structure function: order index out of range");
    StructureFunction sf;
    sf.direction = o_.direction;
    sf.p = o_.orders[q];
    const double unit = o_.direction == Direction::Spatial ? grid_.dx() : grid_.dt();
    const std::size_t nP = o_.orders.size();
    const auto R = static_cast<double>(replicaMeans_.size());
    for (std::size_t l = 0; l < o_.lags.size(); ++l) {
      if (counts_[l] < minSamples)
        throw InsufficientDataError("structure function: lag " + std::to_string(o_.lags[l]) + " has only " +
                                        std::to_string(counts_[l]) + " increment samples (need " +
                                        std::to_string(minSamples) + ")",
                                    counts_[l]);
      double m = 0.0, m2 = 0.0;
      for (const auto& r : replicaMeans_) {
        m += r[l * nP + q];
        m2 += r[l * nP + q] * r[l * nP + q];
      }
      m /= R;
      const double var = R > 1 ? std::max(0.0, (m2 - R * m * m) / (R - 1.0)) : 0.0;
      sf.lags.push_back(static_cast<double>(o_.lags[l]) * unit);
      sf.values.push_back(m);
      sf.stdErrors.push_back(std::sqrt(var / R));
      sf.sampleCounts.push_back(counts_[l]);
    }
    return sf;
  }

  /// Sample covariance, across replicas, of the means of orders qa and qb at
  /// lag l, divided by the replica count (covariance of the two estimates).
  double estimate_covariance(std::size_t l, std::size_t qa, std::size_t qb) const {
    const std::size_t nP = o_.orders.size();
    const auto R = static_cast<double>(replicaMeans_.size());
    if (R < 2) return 0.0;
    double ma = 0.0, mb = 0.0;
    for (const auto& r : replicaMeans_) {
      ma += r[l * nP + qa];
      mb += r[l * nP + qb];
    }
    ma /= R;
    mb /= R;
    double c = 0.0;
    for (const auto& r : replicaMeans_) c += (r[l * nP + qa] - ma) * (r[l * nP + qb] - mb);
    return c / (R - 1.0) / R;
  }

 private:
  Options o_;
  GridSpec grid_;
  bool haveGrid_ = false;
  std::vector<std::vector<double>> replicaMeans_;
  std::vector<std::size_t> counts_;
};

/// One-shot structure function of an in-memory ensemble.
inline StructureFunction structure_function(const std::vector<SolutionField>& ensemble, Direction direction, double p,
                                            const std::vector<std::size_t>& lags,
                                            StructureAccumulator::Options base = {}) {
  if (ensemble.empty()) throw InsufficientDataError("structure function: empty ensemble", 0);
  base.direction = direction;
  base.orders = {p};
  base.lags = lags;
  StructureAccumulator acc(base);
  for (const auto& f : ensemble) acc.add(f);
  return acc.result(0);
}

struct ExponentFit {
  double slope = 0.0;
  double intercept = 0.0;
  double stdErr = 0.0;
  double rSquared = 0.0;
  std::size_t points = 0;
};

/// Least squares on (log lag, log value) over lags in [lagLo, lagHi].
inline ExponentFit fit_power_law(const std::vector<double>& lags, const std::vector<double>& values, double lagLo,
                                 double lagHi) {
  if (lags.size() != values.size()) throw DomainError("fit: lags and values differ in length");
  std::vector<double> X, Y;
  for (std::size_t i = 0; i < lags.size(); ++i) {
    if (lags[i] < lagLo * (1.0 - 1e-12) || lags[i] > lagHi * (1.0 + 1e-12)) continue;
    if (!(values[i] > 0.0))
      throw DomainError("fit: nonpositive value " + std::to_string(values[i]) + " at lag " + std::to_string(lags[i]));
    if (!(lags[i] > 0.0)) throw DomainError("fit: nonpositive lag " + std::to_string(lags[i]));
    X.push_back(std::log(lags[i]));
    Y.push_back(std::log(values[i]));
  }
  const std::size_t n = X.size();
  if (n < 4) throw InsufficientDataError("fit: need at least 4 lags in range", n);
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += X[i];
    my += Y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (X[i] - mx) * (X[i] - mx);
    sxy += (X[i] - mx) * (Y[i] - my);
    syy += (Y[i] - my) * (Y[i] - my);
  }
  ExponentFit fit;
  fit.points = n;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = Y[i] - fit.intercept - fit.slope * X[i];
    sse += r * r;
  }
  fit.stdErr = std::sqrt(sse / static_cast<double>(n - 2) / sxx);
  fit.rSquared = syy > 0.0 ? std::clamp(1.0 - sse / syy, 0.0, 1.0) : 1.0;
  return fit;
}

inline ExponentFit fit_exponent(const StructureFunction& sf, double lagLo, double lagHi) {
  return fit_power_law(sf.lags, sf.values, lagLo, lagHi);
}

struct HolderReport {
  OperatorKind op = OperatorKind::Heat;
  double H = 0.0;
  Direction direction = Direction::Spatial;
  double p = 2.0;
  ExponentFit fitted;
  double theoretical = 0.0;
  double tolerance = 0.1;
  bool pass = false;
  // tolerance - |slope - theoretical|; negative on failure
  double margin = 0.0;
};

inline HolderReport holder_report(OperatorKind op, double H, const StructureFunction& sf, const ExponentFit& fit,
                                  double tolerance, double alpha = 1.0) {
  HolderReport r;
  r.op = op;
  r.H = H;
  r.direction = sf.direction;
  r.p = sf.p;
  r.fitted = fit;
  r.theoretical = theoretical_slope(op, sf.direction, sf.p, H, alpha);
  r.tolerance = tolerance;
  r.margin = tolerance - std::abs(fit.slope - r.theoretical);
  r.pass = r.margin >= 0.0;
  return r;
}

// ---------------------------------------------------------------------------
// quadrature-only optimality checks

struct OptimalityReport {
  OperatorKind op = OperatorKind::Heat;
  double H = 0.0;
  double t = 0.0;
  std::vector<double> xs;
  std::vector<double> ratios;  // covariance_gap / x^{2H}
  double minRatio = 0.0;
  double maxRatio = 0.0;
  ExponentFit fit;  // of covariance_gap against x
  bool pass = false;
};

/// r(x) = covariance_gap(op, t, x) / |x|^{2H} on xGrid; passes iff
/// min r > 0 and max r / min r < maxSpread.
inline OptimalityReport optimality_check(OperatorKind op, double H, double t, const std::vector<double>& xGrid,
                                         const QuadratureSpec& quad = {}, double maxSpread = 50.0) {
  if (!(t > 0.0)) throw DomainError("optimality_check: t must be positive");
  if (xGrid.size() < 4) throw DomainError("optimality_check: need at least 4 points");
  const SpectralDensity density = make_density(H);
  OptimalityReport r;
  r.op = op;
  r.H = H;
  r.t = t;
  std::vector<double> gaps;
  for (double x : xGrid) {
    if (!(x > 0.0)) throw DomainError("optimality_check: points must be positive");
    const double g = covariance_gap(op, t, x, density, quad);
    r.xs.push_back(x);
    gaps.push_back(g);
    r.ratios.push_back(g / std::pow(x, 2.0 * H));
  }
  r.minRatio = *std::min_element(r.ratios.begin(), r.ratios.end());
  r.maxRatio = *std::max_element(r.ratios.begin(), r.ratios.end());
  r.pass = r.minRatio > 0.0 && r.maxRatio / r.minRatio < maxSpread;
  if (r.minRatio > 0.0) r.fit = fit_power_law(r.xs, gaps, r.xs.front(), r.xs.back());
  return r;
}

inline std::vector<double> log_spaced(double lo, double hi, std::size_t n) {
  if (!(lo > 0.0 && hi > lo) || n < 2) throw DomainError("log_spaced: need 0 < lo < hi and n >= 2");
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i)
    v[i] = lo * std::pow(hi / lo, static_cast<double>(i) / static_cast<double>(n - 1));
  return v;
}

struct TemporalOptimalityReport {
  OperatorKind op = OperatorKind::Heat;
  double H = 0.0;
  double t0 = 0.0;
  std::vector<double> lags;
  std::vector<double> I1, I2, total;
  ExponentFit fit;
  double expected = 0.0;
  double tolerance = 0.05;
  // heat only: I2 / (bound constant * h^H) on lags h <= t0 / ln 2
  std::vector<double> lowerBoundRatios;
  bool lowerBoundHolds = true;
  bool pass = false;
};

/// Lower-bound constant for the heat memory term: I2 >= c_H (1 - e^{-1})^2
/// h^H / (4H) once h <= t0 / ln 2.
inline double heat_memory_bound_constant(const SpectralDensity& density) {
  const double a = -std::expm1(-1.0);
  return density.cH * a * a / (4.0 * density.H);
}

/// Variance of u(t0 + h, x) - u(t0, x) over h = 2^{-k}, k in [kLo, kHi];
/// fitted exponent must be H (heat) or 2H (wave) within tolerance.
inline TemporalOptimalityReport temporal_optimality_check(OperatorKind op, double H, double t0, double T,
                                                          const QuadratureSpec& quad = {}, int kLo = 8,
                                                          int kHi = 16, double tolerance = 0.05) {
  if (!(t0 > 0.0 && t0 < T)) throw DomainError("temporal_optimality_check: requires 0 < t0 < T");
  if (kLo > kHi - 3) throw DomainError("temporal_optimality_check: need at least 4 dyadic lags");
  const SpectralDensity density = make_density(H);
  TemporalOptimalityReport r;
  r.op = op;
  r.H = H;
  r.t0 = t0;
  r.tolerance = tolerance;
  r.expected = op == OperatorKind::Heat ? H : 2.0 * H;
  const double bound = heat_memory_bound_constant(density);
  for (int k = kLo; k <= kHi; ++k) {
    const double h = std::ldexp(1.0, -k);
    if (t0 + h > T) continue;
    const IncrementVariance iv = increment_variance(op, t0, t0 + h, density, quad);
    r.lags.push_back(h);
    r.I1.push_back(iv.I1);
    r.I2.push_back(iv.I2);
    r.total.push_back(iv.total());
    if (op == OperatorKind::Heat && h <= t0 / std::log(2.0)) {
      const double ratio = iv.I2 / (bound * std::pow(h, H));
      r.lowerBoundRatios.push_back(ratio);
      if (ratio < 1.0) r.lowerBoundHolds = false;
    }
  }
  r.fit = fit_power_law(r.lags, r.total, r.lags.back(), r.lags.front());
  r.pass = std::abs(r.fit.slope - r.expected) <= tolerance && r.lowerBoundHolds;
  return r;
}

}  // namespace roughsheet
