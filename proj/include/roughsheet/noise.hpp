#pragma once

// Fractional Brownian sheet, white in time and fractional (Hurst H <= 1/2) in
// space, sampled as cell increments on a grid. Each spatial row is fractional
// Gaussian noise drawn exactly by circulant embedding (Davies-Harte); rows
// are independent and scaled by sqrt(dt).

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "roughsheet/errors.hpp"
#include "roughsheet/fft.hpp"
#include "roughsheet/grid.hpp"
#include "roughsheet/random.hpp"

namespace roughsheet {

inline void require_hurst(double H) {
  if (!(H > 0.0 && H <= 0.5)) throw DomainError("H must satisfy 0 < H ≤ 0.5");
}

/// E[W_i(t,x) W_j(s,y)] = delta_ij (t ^ s)(|x|^{2H} + |y|^{2H} - |x-y|^{2H})/2.
inline double fbs_covariance(double t, double x, double s, double y, double H, std::size_t i, std::size_t j) {
  require_hurst(H);
  if (t < 0.0 || s < 0.0) throw DomainError("fbs_covariance: times must be nonnegative");
  if (i != j) return 0.0;
  const double p = 2.0 * H;
  return std::min(t, s) * 0.5 * (std::pow(std::abs(x), p) + std::pow(std::abs(y), p) - std::pow(std::abs(x - y), p));
}

/// Covariance of two spatial fBm increments of width dx, k cells apart.
inline double fgn_autocovariance(long long k, double H, double dx) {
  require_hurst(H);
  if (!(dx > 0.0)) throw DomainError("fgn_autocovariance: dx must be positive");
  const double p = 2.0 * H;
  const double a = std::abs(static_cast<double>(k));
  if (a == 0.0) return std::pow(dx, p);
  return 0.5 * std::pow(dx, p) * (std::pow(a + 1.0, p) + std::pow(a - 1.0, p) - 2.0 * std::pow(a, p));
}

struct NoiseSheet {
  GridSpec grid;
  double H = 0.25;
  std::size_t d = 1;
  std::uint64_t seed = 0;
  // (component, time cell, space cell), row-major
  std::vector<double> increments;

  std::size_t index(std::size_t c, std::size_t i, std::size_t k) const { return (c * grid.nT + i) * grid.nX + k; }
  double& at(std::size_t c, std::size_t i, std::size_t k) { return increments[index(c, i, k)]; }
  double at(std::size_t c, std::size_t i, std::size_t k) const { return increments[index(c, i, k)]; }
  const double* row(std::size_t c, std::size_t i) const { return increments.data() + index(c, i, 0); }
  double* row(std::size_t c, std::size_t i) { return increments.data() + index(c, i, 0); }

  static NoiseSheet zeros(const GridSpec& grid, double H, std::size_t d) {
    NoiseSheet s;
    s.grid = grid;
    s.H = H;
    s.d = d;
    s.increments.assign(d * grid.nT * grid.nX, 0.0);
    return s;
  }
};

/// Circulant-embedding sampler for one (grid, H). Construction computes the
/// embedding eigenvalues once; sampling is const and thread-safe.
class SheetSampler {
 public:
  SheetSampler(const GridSpec& grid, double H) : grid_(grid), H_(H) {
    grid.validate();
    require_hurst(H);
    const std::size_t n = grid.nX;
    const std::size_t m = 2 * n;
    std::vector<std::complex<double>> c(m);
    for (std::size_t j = 0; j <= n; ++j) c[j] = fgn_autocovariance(static_cast<long long>(j), H, grid.dx());
    for (std::size_t j = 1; j < n; ++j) c[m - j] = c[j];
    plan_ = std::make_shared<FftPlan>(m, FftPlan::Direction::Forward);
    plan_->execute(c);
    double maxEig = 0.0;
    for (const auto& v : c) maxEig = std::max(maxEig, v.real());
    scale_.resize(m);
    for (std::size_t k = 0; k < m; ++k) {
      double lambda = c[k].real();
      // fGn with H <= 1/2 embeds with nonnegative eigenvalues; allow rounding.
      if (lambda < -1e-10 * maxEig)
        throw NumericalError("circulant embedding produced a negative eigenvalue", lambda, 1e-10 * maxEig);
      lambda = std::max(lambda, 0.0);
      scale_[k] = std::sqrt(lambda / static_cast<double>(m));
    }
  }

  const GridSpec& grid() const { return grid_; }
  double H() const { return H_; }

  /// Two independent unit-time fGn rows from one transform; rows are
  /// determined by (seed, component, pair).
  void sample_row_pair(std::uint64_t seed, std::size_t component, std::size_t pair, double* rowA,
                       double* rowB, std::vector<std::complex<double>>& work) const {
    const std::size_t m = scale_.size();
    work.resize(m);
    NormalStream normal(seed, {0x5348454554ULL, component, pair});
    for (std::size_t k = 0; k < m; ++k) {
      const double a = normal();
      const double b = normal();
      work[k] = {scale_[k] * a, scale_[k] * b};
    }
    plan_->execute(work);
    for (std::size_t k = 0; k < grid_.nX; ++k) {
      rowA[k] = work[k].real();
      if (rowB) rowB[k] = work[k].imag();
    }
  }

  NoiseSheet sample(std::size_t d, std::uint64_t seed) const {
    if (d == 0) throw DomainError("sample_sheet: d must be positive");
    NoiseSheet sheet = NoiseSheet::zeros(grid_, H_, d);
    sheet.seed = seed;
    std::vector<std::complex<double>> work;
    const double sdt = std::sqrt(grid_.dt());
    for (std::size_t c = 0; c < d; ++c) {
      for (std::size_t i = 0; i < grid_.nT; i += 2) {
        double* b = i + 1 < grid_.nT ? sheet.row(c, i + 1) : nullptr;
        sample_row_pair(seed, c, i / 2, sheet.row(c, i), b, work);
      }
      for (std::size_t i = 0; i < grid_.nT; ++i) {
        double* r = sheet.row(c, i);
        for (std::size_t k = 0; k < grid_.nX; ++k) r[k] *= sdt;
      }
    }
    return sheet;
  }

 private:
  GridSpec grid_;
  double H_;
  std::shared_ptr<FftPlan> plan_;
  std::vector<double> scale_;
};

inline NoiseSheet sample_sheet(const GridSpec& grid, double H, std::size_t d, std::uint64_t seed) {
  return SheetSampler(grid, H).sample(d, seed);
}

/// phi tabulated at the cell centers, (time cell, space cell) row-major.
inline std::vector<double> tabulate_on_cells(const std::function<double(double, double)>& phi, const GridSpec& grid) {
  std::vector<double> v(grid.nT * grid.nX);
  for (std::size_t i = 0; i < grid.nT; ++i)
    for (std::size_t k = 0; k < grid.nX; ++k) v[i * grid.nX + k] = phi(grid.cellTime(i), grid.cellX(k));
  return v;
}

/// sum over cells of phi(cell center) * increment, for one component.
inline double wiener_integral(const std::vector<double>& phiOnCells, const NoiseSheet& sheet, std::size_t component = 0) {
  if (phiOnCells.size() != sheet.grid.nT * sheet.grid.nX)
    throw DomainError("wiener_integral: tabulated integrand does not match the sheet grid");
  if (component >= sheet.d) throw DomainError("wiener_integral: component out of range");
  const double* w = sheet.row(component, 0);
  double s = 0.0;
  for (std::size_t n = 0; n < phiOnCells.size(); ++n) s += phiOnCells[n] * w[n];
  return s;
}

inline double wiener_integral(const std::function<double(double, double)>& phi, const NoiseSheet& sheet,
                              std::size_t component = 0) {
  return wiener_integral(tabulate_on_cells(phi, sheet.grid), sheet, component);
}

}  // namespace roughsheet
