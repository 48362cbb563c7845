#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include "roughsheet/errors.hpp"

namespace roughsheet {

/// Time-space grid. Cells are [t_i, t_{i+1}) x [x_k, x_{k+1}) for
/// i < nT, k < nX; nodes are t_n = n dt (n = 0..nT) and x_j = xMin + j dx
/// (j = 0..nX-1).
struct GridSpec {
  double tMax = 1.0;
  std::size_t nT = 1;
  double xMin = -1.0;
  double xMax = 1.0;
  std::size_t nX = 2;

  double dt() const { return tMax / static_cast<double>(nT); }
  double dx() const { return (xMax - xMin) / static_cast<double>(nX); }
  double time(std::size_t n) const { return tMax * static_cast<double>(n) / static_cast<double>(nT); }
  double x(std::size_t j) const { return xMin + dx() * static_cast<double>(j); }
  double cellTime(std::size_t i) const { return (static_cast<double>(i) + 0.5) * dt(); }
  double cellX(std::size_t k) const { return xMin + (static_cast<double>(k) + 0.5) * dx(); }

  void validate() const {
    if (!(tMax > 0.0) || !std::isfinite(tMax)) throw DomainError("grid: tMax must be positive");
    if (nT == 0) throw DomainError("grid: nT must be positive");
    if (!(xMin < xMax) || !std::isfinite(xMin) || !std::isfinite(xMax))
      throw DomainError("grid: requires xMin < xMax");
    if (nX < 2 || (nX & (nX - 1)) != 0) throw DomainError("grid: nX must be a power of two (>= 2)");
  }

  bool operator==(const GridSpec&) const = default;
};

}  // namespace roughsheet
