#pragma once

// Mild solution of the d-dimensional system
//   L u = b(u) + sigma W',   u(0) = u0 (and u_t(0) = v0 for the wave operator)
// on a time-space grid:
//   u = omega + (drift convolution) + (stochastic convolution).
//
// The stochastic convolution has two constructions:
//  * spectral: every Fourier mode of the field is an exactly simulated
//    Gaussian process (Ornstein-Uhlenbeck for heat, a damped-free oscillator
//    pair for wave); modes beyond the cutoff are aliased into the FFT bins of
//    the output grid with their exact variance.
//  * direct: a Riemann sum of the Green's function against the cells of a
//    sampled noise sheet, which keeps a single realization available for
//    Picard iteration.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <tuple>
#include <vector>

#include "roughsheet/errors.hpp"
#include "roughsheet/fft.hpp"
#include "roughsheet/grid.hpp"
#include "roughsheet/kernels.hpp"
#include "roughsheet/noise.hpp"
#include "roughsheet/random.hpp"
#include "roughsheet/spectral.hpp"

namespace roughsheet {

// ---------------------------------------------------------------------------
// model

struct DriftSpec {
  std::string name = "none";
  std::vector<double> params;
  double lipschitzConstant = 0.0;
  // b(u) for u in R^d written to out; empty means b == 0.
  std::function<void(const double* u, double* out, std::size_t d)> b;

  bool isZero() const { return !b; }

  // Spot-checks the Lipschitz bound on random pairs in [-10, 10]^d.
  void validate(std::size_t d, std::uint64_t seed = 1, int pairs = 256) const {
    if (lipschitzConstant < 0.0) throw DomainError("drift: Lipschitz constant must be nonnegative");
    if (isZero()) return;
    NormalStream rng(seed, {0x4452494654ULL});
    std::vector<double> u(d), v(d), bu(d), bv(d);
    for (int n = 0; n < pairs; ++n) {
      for (std::size_t c = 0; c < d; ++c) {
        u[c] = 20.0 * rng.uniform() - 10.0;
        v[c] = u[c] + (n % 2 ? 1e-3 : 5.0) * (2.0 * rng.uniform() - 1.0);
      }
      b(u.data(), bu.data(), d);
      b(v.data(), bv.data(), d);
      double num = 0.0, den = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        num += (bu[c] - bv[c]) * (bu[c] - bv[c]);
        den += (u[c] - v[c]) * (u[c] - v[c]);
      }
      if (std::sqrt(num) > lipschitzConstant * std::sqrt(den) * (1.0 + 1e-9) + 1e-14)
        throw DomainError("drift '" + name + "' violates its declared Lipschitz constant");
    }
  }

  static DriftSpec none() { return {}; }

  // b(u) = sin(u) componentwise
  static DriftSpec sine() {
    DriftSpec s;
    s.name = "sin";
    s.lipschitzConstant = 1.0;
    s.b = [](const double* u, double* out, std::size_t d) {
      for (std::size_t c = 0; c < d; ++c) out[c] = std::sin(u[c]);
    };
    return s;
  }

  // b(u) = a u
  static DriftSpec linear(double a) {
    DriftSpec s;
    s.name = "linear";
    s.params = {a};
    s.lipschitzConstant = std::abs(a);
    s.b = [a](const double* u, double* out, std::size_t d) {
      for (std::size_t c = 0; c < d; ++c) out[c] = a * u[c];
    };
    return s;
  }

  static DriftSpec constant(double value) {
    DriftSpec s;
    s.name = "constant";
    s.params = {value};
    s.b = [value](const double*, double* out, std::size_t d) {
      for (std::size_t c = 0; c < d; ++c) out[c] = value;
    };
    return s;
  }

  static DriftSpec from_name(const std::string& name, const std::vector<double>& params = {}) {
    auto param = [&](std::size_t i, double fallback) { return i < params.size() ? params[i] : fallback; };
    if (name == "none" || name == "zero") return none();
    if (name == "sin" || name == "sine") return sine();
    if (name == "linear") return linear(param(0, -1.0));
    if (name == "constant") return constant(param(0, 1.0));
    throw DomainError("unknown drift '" + name + "' (expected none|sin|linear|constant)");
  }
};

inline std::vector<double> identity_matrix(std::size_t d) {
  std::vector<double> m(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) m[i * d + i] = 1.0;
  return m;
}

struct ModelSpec {
  OperatorKind op = OperatorKind::Heat;
  std::size_t d = 1;
  std::vector<double> sigma = {1.0};  // d x d, row-major
  DriftSpec drift;
  InitialData init = InitialData::zero();
  double H = 0.25;

  void validate() const {
    if (d == 0) throw DomainError("model: d must be positive");
    if (sigma.size() != d * d) throw DomainError("model: sigma must be d x d");
    for (double s : sigma)
      if (!std::isfinite(s)) throw DomainError("model: sigma entries must be finite");
    require_hurst(H);
    drift.validate(d);
  }
};

struct PicardConfig {
  std::size_t maxIters = 60;
  double supTol = 1e-10;

  void validate() const {
    if (maxIters < 1) throw DomainError("picard: maxIters must be >= 1");
    if (!(supTol > 0.0)) throw DomainError("picard: supTol must be positive");
  }
};

// ---------------------------------------------------------------------------
// solution field

struct SolutionField {
  GridSpec grid;
  std::size_t d = 1;
  // evaluation window [jLo, jHi) in space nodes; values outside it carry
  // boundary effects and are kept only for the iteration
  std::size_t jLo = 0;
  std::size_t jHi = 0;
  // stored node times (indices into 0..nT), increasing
  std::vector<std::size_t> times;
  // (component, slot, space node)
  std::vector<double> values;
  std::string method;
  std::uint64_t seed = 0;

  static SolutionField zeros(const GridSpec& grid, std::size_t d, std::vector<std::size_t> times = {}) {
    SolutionField f;
    f.grid = grid;
    f.d = d;
    f.jHi = grid.nX;
    if (times.empty()) {
      times.resize(grid.nT + 1);
      for (std::size_t n = 0; n <= grid.nT; ++n) times[n] = n;
    }
    f.times = std::move(times);
    f.values.assign(d * f.times.size() * grid.nX, 0.0);
    return f;
  }

  std::size_t slots() const { return times.size(); }
  std::size_t index(std::size_t c, std::size_t slot, std::size_t j) const {
    return (c * times.size() + slot) * grid.nX + j;
  }
  double& at(std::size_t c, std::size_t slot, std::size_t j) { return values[index(c, slot, j)]; }
  double at(std::size_t c, std::size_t slot, std::size_t j) const { return values[index(c, slot, j)]; }
  double* row(std::size_t c, std::size_t slot) { return values.data() + index(c, slot, 0); }
  const double* row(std::size_t c, std::size_t slot) const { return values.data() + index(c, slot, 0); }

  bool allTimes() const { return times.size() == grid.nT + 1; }
  std::size_t slot_of(std::size_t n) const {
    auto it = std::lower_bound(times.begin(), times.end(), n);
    if (it == times.end() || *it != n)
      throw DomainError("solution field: time index " + std::to_string(n) + " not stored");
    return static_cast<std::size_t>(it - times.begin());
  }
  double windowLo() const { return grid.x(jLo); }
  double windowHi() const { return grid.x(jHi - 1); }
};

namespace detail {

inline std::vector<std::size_t> normalize_times(const GridSpec& grid, std::vector<std::size_t> times) {
  if (times.empty()) {
    times.resize(grid.nT + 1);
    for (std::size_t n = 0; n <= grid.nT; ++n) times[n] = n;
    return times;
  }
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  if (times.back() > grid.nT) throw DomainError("requested time index beyond the grid");
  return times;
}

// out = sigma * z per (slot, node), in place over a (component, ...) layout
inline void mix_components(SolutionField& f, const std::vector<double>& sigma) {
  const std::size_t d = f.d;
  bool identity = true;
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b < d; ++b)
      if (sigma[a * d + b] != (a == b ? 1.0 : 0.0)) identity = false;
  if (identity) return;
  const std::size_t plane = f.slots() * f.grid.nX;
  std::vector<double> z(d), u(d);
  for (std::size_t p = 0; p < plane; ++p) {
    for (std::size_t c = 0; c < d; ++c) z[c] = f.values[c * plane + p];
    for (std::size_t a = 0; a < d; ++a) {
      double s = 0.0;
      for (std::size_t b = 0; b < d; ++b) s += sigma[a * d + b] * z[b];
      u[a] = s;
    }
    for (std::size_t c = 0; c < d; ++c) f.values[c * plane + p] = u[c];
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// spectral construction

struct SpectralOptions {
  // mode spacing is 2 pi / (periodMultiplier * domain width)
  std::size_t periodMultiplier = 4;
  // largest explicitly simulated frequency; default max(256, required)
  std::optional<double> cutoff;
  // aliased remainder summed explicitly over this many bin periods, then in
  // closed form
  std::size_t remainderPeriods = 32;
};

class SpectralConvolution {
 public:
  // Smallest cutoff for which modes above it are treated as independent
  // between output times: heat modes decay by e^{-36} per step; wave
  // remainder correlation between neighbouring times stays below ~5%.
  static double required_cutoff(OperatorKind op, double H, double dt) {
    return op == OperatorKind::Heat ? 6.0 / std::sqrt(dt) : 40.0 * H / dt;
  }

  SpectralConvolution(OperatorKind op, double H, const GridSpec& grid, SpectralOptions options = {})
      : op_(op), H_(H), grid_(grid), options_(options) {
    grid.validate();
    require_hurst(H);
    if (options.periodMultiplier < 1) throw ConfigurationError("spectral: period multiplier must be >= 1", 4.0);
    const double required = required_cutoff(op, H, grid.dt());
    if (options.cutoff) {
      if (!(*options.cutoff >= required))
        throw ConfigurationError("spectral: mode cutoff " + std::to_string(*options.cutoff) +
                                     " too small for this time step; use at least " + std::to_string(required),
                                 required);
      cutoff_ = *options.cutoff;
    } else {
      cutoff_ = std::max(256.0, required);
    }
    const SpectralDensity density = make_density(H);
    bins_ = options.periodMultiplier * grid.nX;
    dxi_ = 2.0 * std::numbers::pi / (static_cast<double>(options.periodMultiplier) * (grid.xMax - grid.xMin));
    modes_ = static_cast<std::size_t>(std::ceil(cutoff_ / dxi_)) + 1;
    plan_ = std::make_shared<FftPlan>(bins_, FftPlan::Direction::Backward);

    weight_.resize(modes_);
    for (std::size_t k = 0; k < modes_; ++k) weight_[k] = cell_weight(density, k);
    phase_.resize(modes_);
    for (std::size_t k = 0; k < modes_; ++k) phase_[k] = std::polar(1.0, xi(k) * grid.xMin);
    step_ = transition(grid.dt());
    build_remainder(density);
  }

  OperatorKind op() const { return op_; }
  double H() const { return H_; }
  const GridSpec& grid() const { return grid_; }
  double cutoff() const { return cutoff_; }
  double modeSpacing() const { return dxi_; }
  std::size_t modeCount() const { return modes_; }

  /// Variance the construction assigns to every u(t_n, x): the mode sum plus
  /// the aliased remainder.
  double discrete_variance(std::size_t n) const {
    if (n == 0) return 0.0;
    const double t = grid_.time(n);
    double v = 0.0;
    for (std::size_t k = 0; k < modes_; ++k) v += weight_[k] * time_integrated_kernel(op_, t, xi(k));
    const std::vector<double>& rem = remainder_for(n);
    for (double r : rem) v += r;
    return v;
  }

  /// d independent copies mixed by sigma, at the listed node times (all if
  /// empty). Deterministic in seed.
  SolutionField sample(std::size_t d, const std::vector<double>& sigma, std::uint64_t seed,
                       std::vector<std::size_t> times = {}) const {
    if (sigma.size() != d * d) throw DomainError("spectral: sigma must be d x d");
    times = detail::normalize_times(grid_, std::move(times));
    SolutionField f = SolutionField::zeros(grid_, d, times);
    f.method = "spectral";
    f.seed = seed;
    std::vector<std::complex<double>> work(bins_);
    for (std::size_t c = 0; c < d; ++c) sample_component(f, c, seed, work);
    detail::mix_components(f, sigma);
    return f;
  }

 private:
  // Exact law of each mode over a step of length h: heat modes are AR(1),
  // wave modes rotate (u, u_t) and pick up correlated noise.
  struct Transition {
    std::vector<double> decay, noise;
    std::vector<std::array<double, 4>> rot;
    std::vector<std::array<double, 3>> chol;
  };

  Transition transition(double h) const {
    Transition tr;
    if (op_ == OperatorKind::Heat) {
      tr.decay.resize(modes_);
      tr.noise.resize(modes_);
      for (std::size_t k = 0; k < modes_; ++k) {
        const double x = xi(k);
        tr.decay[k] = std::exp(-x * x * h);
        tr.noise[k] = std::sqrt(weight_[k] * time_integrated_kernel(OperatorKind::Heat, h, x));
      }
      return tr;
    }
    tr.rot.resize(modes_);
    tr.chol.resize(modes_);
    for (std::size_t k = 0; k < modes_; ++k) {
      const double x = xi(k);
      const double c = std::cos(x * h);
      const double sOverXi = green_fourier(OperatorKind::Wave, h, x);  // sin(x h)/x
      tr.rot[k] = {c, sOverXi, -x * x * sOverXi, c};
      const double w = weight_[k];
      const double q11 = w * time_integrated_kernel(OperatorKind::Wave, h, x);
      const double q12 = 0.5 * w * sOverXi * sOverXi;
      const double q22 = w * (0.5 * h + 0.25 * green_fourier(OperatorKind::Wave, 2.0 * h, x));
      const double l11 = std::sqrt(q11);
      const double l21 = l11 > 0.0 ? q12 / l11 : 0.0;
      const double l22 = std::sqrt(std::max(q22 - l21 * l21, 0.0));
      tr.chol[k] = {l11, l21, l22};
    }
    return tr;
  }

  double xi(std::size_t k) const { return dxi_ * static_cast<double>(k); }

  // 2 c_H * integral of xi^{1-2H} over the cell of mode k (half cell at 0)
  double cell_weight(const SpectralDensity& density, std::size_t k) const {
    const double p = 2.0 - 2.0 * density.H;
    const double lo = k == 0 ? 0.0 : xi(k) - 0.5 * dxi_;
    const double hi = xi(k) + 0.5 * dxi_;
    return 2.0 * density.cH * (std::pow(hi, p) - std::pow(lo, p)) / p;
  }

  void build_remainder(const SpectralDensity& density) {
    const std::size_t extra = options_.remainderPeriods * bins_;
    const std::size_t kEnd = modes_ + extra;
    const double xiEnd = xi(kEnd - 1) + 0.5 * dxi_;
    std::vector<double> w(extra);
    for (std::size_t e = 0; e < extra; ++e) w[e] = cell_weight(density, modes_ + e);
    auto fill = [&](double t, std::vector<double>& out) {
      out.assign(bins_, 0.0);
      for (std::size_t e = 0; e < extra; ++e) {
        const std::size_t k = modes_ + e;
        out[k % bins_] += w[e] * time_integrated_kernel(op_, t, xi(k));
      }
      // beyond xiEnd: K ~ c_op / (2 xi^2), spread evenly over the bins
      const double cop = op_ == OperatorKind::Heat ? 1.0 : t;
      const double tail = density.cH * cop * std::pow(xiEnd, -2.0 * density.H) / (2.0 * density.H) /
                          static_cast<double>(bins_);
      for (double& v : out) v += tail;
    };
    const double firstXi = xi(modes_);
    const bool stationary =
        op_ == OperatorKind::Heat && 2.0 * grid_.dt() * firstXi * firstXi > 69.0;  // e^{-69} < 1e-30
    if (stationary) {
      remainder_.resize(1);
      fill(grid_.dt(), remainder_[0]);
    } else {
      remainder_.resize(grid_.nT);
      for (std::size_t n = 1; n <= grid_.nT; ++n) fill(grid_.time(n), remainder_[n - 1]);
    }
    for (auto& r : remainder_)
      for (double& v : r) v = std::max(v, 0.0);
  }

  const std::vector<double>& remainder_for(std::size_t n) const {
    return remainder_.size() == 1 ? remainder_[0] : remainder_[n - 1];
  }

  void sample_component(SolutionField& f, std::size_t c, std::uint64_t seed,
                        std::vector<std::complex<double>>& work) const {
    NormalStream normal(seed, {0x4d4f444553ULL, c});
    std::vector<double> a(modes_, 0.0), b(modes_, 0.0);
    std::vector<double> va, vb;
    if (op_ == OperatorKind::Wave) {
      va.assign(modes_, 0.0);
      vb.assign(modes_, 0.0);
    }
    std::size_t slot = 0;
    if (f.times[0] == 0) ++slot;  // zero field at t = 0
    std::size_t prev = 0;
    std::map<std::size_t, Transition> jumps;
    for (; slot < f.times.size(); ++slot) {
      const std::size_t n = f.times[slot];
      const std::size_t gap = n - prev;
      prev = n;
      if (gap != 1 && !jumps.count(gap)) jumps.emplace(gap, transition(static_cast<double>(gap) * grid_.dt()));
      const Transition& tr = gap == 1 ? step_ : jumps.at(gap);
      if (op_ == OperatorKind::Heat) {
        for (std::size_t k = 0; k < modes_; ++k) {
          a[k] = tr.decay[k] * a[k] + tr.noise[k] * normal();
          b[k] = tr.decay[k] * b[k] + tr.noise[k] * normal();
        }
      } else {
        for (std::size_t k = 0; k < modes_; ++k) {
          const auto& r = tr.rot[k];
          const auto& l = tr.chol[k];
          const double n1 = normal(), n2 = normal(), n3 = normal(), n4 = normal();
          const double za = r[0] * a[k] + r[1] * va[k] + l[0] * n1;
          const double wa = r[2] * a[k] + r[3] * va[k] + l[1] * n1 + l[2] * n2;
          const double zb = r[0] * b[k] + r[1] * vb[k] + l[0] * n3;
          const double wb = r[2] * b[k] + r[3] * vb[k] + l[1] * n3 + l[2] * n4;
          a[k] = za;
          va[k] = wa;
          b[k] = zb;
          vb[k] = wb;
        }
      }
      std::fill(work.begin(), work.end(), std::complex<double>(0.0, 0.0));
      work[0] += a[0] * phase_[0];  // the zero mode has no sine part
      for (std::size_t k = 1; k < modes_; ++k) work[k % bins_] += std::complex<double>(a[k], -b[k]) * phase_[k];
      const std::vector<double>& rem = remainder_for(n);
      NormalStream remNormal(seed, {0x52454dULL, c, n});
      for (std::size_t bin = 0; bin < bins_; ++bin) {
        const double s = std::sqrt(rem[bin]);
        const double re = remNormal();
        const double im = remNormal();
        work[bin] += std::complex<double>(s * re, s * im);
      }
      plan_->execute(work);
      double* out = f.row(c, slot);
      for (std::size_t j = 0; j < grid_.nX; ++j) out[j] = work[j].real();
    }
  }

  OperatorKind op_;
  double H_;
  GridSpec grid_;
  SpectralOptions options_;
  double cutoff_ = 0.0;
  double dxi_ = 0.0;
  std::size_t modes_ = 0;
  std::size_t bins_ = 0;
  std::shared_ptr<FftPlan> plan_;
  std::vector<double> weight_;
  std::vector<std::complex<double>> phase_;
  Transition step_;
  std::vector<std::vector<double>> remainder_;
};

inline SolutionField stochastic_convolution_spectral(OperatorKind op, double H, const GridSpec& grid, std::size_t d,
                                                     const std::vector<double>& sigma, std::uint64_t seed,
                                                     const SpectralOptions& options = {}) {
  return SpectralConvolution(op, H, grid, options).sample(d, sigma, seed);
}

// ---------------------------------------------------------------------------
// direct construction

/// Width kept free of evaluation points at each end of the noise window.
inline double required_buffer(OperatorKind op, double tMax) {
  return op == OperatorKind::Heat ? 8.0 * std::sqrt(tMax) : tMax;
}

class DirectConvolution {
 public:
  /// Evaluation window [jLo, jHi) must keep required_buffer(op, tMax) from
  /// both ends of the sheet window.
  DirectConvolution(OperatorKind op, double H, const GridSpec& grid, std::size_t jLo, std::size_t jHi)
      : op_(op), H_(H), grid_(grid), jLo_(jLo), jHi_(jHi) {
    grid.validate();
    require_hurst(H);
    if (!(jLo < jHi && jHi <= grid.nX)) throw DomainError("direct: empty or out-of-range evaluation window");
    const double buffer = required_buffer(op, grid.tMax);
    const double eps = 1e-9 * grid.dx();
    if (grid.x(jLo) - grid.xMin < buffer - eps || grid.xMax - grid.x(jHi - 1) < buffer - eps)
      throw DomainError("direct: evaluation window must stay " + std::to_string(buffer) +
                        " inside the noise window (" + std::string(to_string(op)) + " buffer)");
    buffer_ = buffer;
    build_tables();
  }

  /// Window [lo, hi] in space coordinates; nodes inside it form the window.
  static std::pair<std::size_t, std::size_t> window_nodes(const GridSpec& grid, double lo, double hi) {
    const double dx = grid.dx();
    const auto a = static_cast<std::size_t>(std::max(0.0, std::ceil((lo - grid.xMin) / dx - 1e-9)));
    const auto b = static_cast<std::size_t>(std::max(0.0, std::floor((hi - grid.xMin) / dx + 1e-9))) + 1;
    return {a, std::min(b, grid.nX)};
  }

  /// Effective kernel age for the cell m steps before the evaluation step:
  /// G at this age carries the exact variance of its time slab.
  static double effective_age(OperatorKind op, double H, std::size_t m, double dt) {
    const double beta = op == OperatorKind::Heat ? H : 1.0 + 2.0 * H;
    const double mm = static_cast<double>(m);
    const double slab = (std::pow(mm + 1.0, beta) - std::pow(mm, beta)) / beta;
    return dt * std::pow(slab, 1.0 / (beta - 1.0));
  }

  std::size_t jLo() const { return jLo_; }
  std::size_t jHi() const { return jHi_; }

  /// Unmixed stochastic convolution of one component at node (n, j).
  double at_node(const NoiseSheet& sheet, std::size_t component, std::size_t n, std::size_t j) const {
    check_sheet(sheet);
    if (n > grid_.nT || j >= grid_.nX) throw DomainError("direct: node out of range");
    double s = 0.0;
    const auto nx = static_cast<long long>(grid_.nX);
    for (std::size_t i = 0; i < n; ++i) {
      const Table& tab = tables_[n - 1 - i];
      const double* w = sheet.row(component, i);
      for (long long off = tab.first; off < tab.first + static_cast<long long>(tab.w.size()); ++off) {
        const long long k = static_cast<long long>(j) - off;
        if (k < 0 || k >= nx) continue;
        s += tab.w[static_cast<std::size_t>(off - tab.first)] * w[k];
      }
    }
    return s;
  }

  /// sigma-mixed values at a list of (time index, space index) nodes.
  std::vector<std::vector<double>> at_nodes(const NoiseSheet& sheet, const std::vector<double>& sigma,
                                            const std::vector<std::pair<std::size_t, std::size_t>>& nodes) const {
    const std::size_t d = sheet.d;
    if (sigma.size() != d * d) throw DomainError("direct: sigma must be d x d");
    std::vector<std::vector<double>> out(nodes.size(), std::vector<double>(d, 0.0));
    std::vector<double> z(d);
    for (std::size_t p = 0; p < nodes.size(); ++p) {
      for (std::size_t c = 0; c < d; ++c) z[c] = at_node(sheet, c, nodes[p].first, nodes[p].second);
      for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = 0; b < d; ++b) out[p][a] += sigma[a * d + b] * z[b];
    }
    return out;
  }

  /// Full field at every node via FFT convolutions, sigma-mixed.
  SolutionField full_field(const NoiseSheet& sheet, const std::vector<double>& sigma) const {
    check_sheet(sheet);
    const std::size_t d = sheet.d;
    if (sigma.size() != d * d) throw DomainError("direct: sigma must be d x d");
    const std::size_t nT = grid_.nT;
    const std::size_t nX = grid_.nX;
    const std::size_t m = 2 * nX;
    ensure_kernel_spectra();
    SolutionField f = SolutionField::zeros(grid_, d);
    f.jLo = jLo_;
    f.jHi = jHi_;
    f.method = "direct";
    f.seed = sheet.seed;
    FftPlan forward(m, FftPlan::Direction::Forward);
    FftPlan backward(m, FftPlan::Direction::Backward);
    std::vector<std::vector<std::complex<double>>> rows(nT, std::vector<std::complex<double>>(m));
    std::vector<std::complex<double>> acc(m);
    for (std::size_t c = 0; c < d; ++c) {
      for (std::size_t i = 0; i < nT; ++i) {
        auto& r = rows[i];
        std::fill(r.begin(), r.end(), std::complex<double>(0.0, 0.0));
        const double* w = sheet.row(c, i);
        for (std::size_t k = 0; k < nX; ++k) r[k] = w[k];
        forward.execute(r);
      }
      for (std::size_t n = 1; n <= nT; ++n) {
        std::fill(acc.begin(), acc.end(), std::complex<double>(0.0, 0.0));
        for (std::size_t i = 0; i < n; ++i) {
          const auto& kh = kernelSpectra_[n - 1 - i];
          const auto& r = rows[i];
          for (std::size_t q = 0; q < m; ++q) acc[q] += kh[q] * r[q];
        }
        backward.execute(acc);
        double* out = f.row(c, n);
        for (std::size_t j = 0; j < nX; ++j) out[j] = acc[j].real() / static_cast<double>(m);
      }
    }
    detail::mix_components(f, sigma);
    return f;
  }

 private:
  struct Table {
    long long first = 0;    // offset of w[0]; offset = node index - cell index
    std::vector<double> w;  // cell-averaged kernel
  };

  void check_sheet(const NoiseSheet& sheet) const {
    if (!(sheet.grid == grid_)) throw DomainError("direct: sheet grid differs from the plan grid");
  }

  void build_tables() {
    const double dx = grid_.dx();
    tables_.resize(grid_.nT);
    for (std::size_t m = 0; m < grid_.nT; ++m) {
      const double tau = effective_age(op_, H_, m, grid_.dt());
      Table& tab = tables_[m];
      // node j, cell k: x_j - y ranges over ((off-1) dx, off dx] with off = j - k
      if (op_ == OperatorKind::Heat) {
        const double sd = std::sqrt(2.0 * tau);
        const double reach = std::min(10.0 * sd, buffer_);
        const auto D = static_cast<long long>(std::ceil(reach / dx)) + 1;
        tab.first = -D + 1;
        tab.w.resize(static_cast<std::size_t>(2 * D));
        for (long long off = -D + 1; off <= D; ++off) {
          const double hi = static_cast<double>(off) * dx / (std::numbers::sqrt2 * sd);
          const double lo = static_cast<double>(off - 1) * dx / (std::numbers::sqrt2 * sd);
          // Phi(hi) - Phi(lo), computed on the side with less cancellation
          const double mass = lo >= 0.0 ? 0.5 * (std::erfc(lo) - std::erfc(hi)) : 0.5 * (std::erfc(-hi) - std::erfc(-lo));
          tab.w[static_cast<std::size_t>(off - tab.first)] = mass / dx;
        }
      } else {
        const auto D = static_cast<long long>(std::ceil(tau / dx)) + 1;
        tab.first = -D + 1;
        tab.w.resize(static_cast<std::size_t>(2 * D));
        for (long long off = -D + 1; off <= D; ++off) {
          const double lo = std::max(static_cast<double>(off - 1) * dx, -tau);
          const double hi = std::min(static_cast<double>(off) * dx, tau);
          tab.w[static_cast<std::size_t>(off - tab.first)] = hi > lo ? 0.5 * (hi - lo) / dx : 0.0;
        }
      }
    }
  }

  void ensure_kernel_spectra() const {
    std::call_once(*spectraOnce_, [this] {
      const std::size_t m = 2 * grid_.nX;
      FftPlan forward(m, FftPlan::Direction::Forward);
      kernelSpectra_.assign(grid_.nT, std::vector<std::complex<double>>(m));
      for (std::size_t t = 0; t < grid_.nT; ++t) {
        auto& v = kernelSpectra_[t];
        const Table& tab = tables_[t];
        for (std::size_t q = 0; q < tab.w.size(); ++q) {
          const long long off = tab.first + static_cast<long long>(q);
          const auto pos = static_cast<std::size_t>((off % static_cast<long long>(m) + static_cast<long long>(m)) %
                                                    static_cast<long long>(m));
          v[pos] += tab.w[q];
        }
        forward.execute(v);
      }
    });
  }

  OperatorKind op_;
  double H_;
  GridSpec grid_;
  std::size_t jLo_, jHi_;
  double buffer_ = 0.0;
  std::vector<Table> tables_;
  std::shared_ptr<std::once_flag> spectraOnce_ = std::make_shared<std::once_flag>();
  mutable std::vector<std::vector<std::complex<double>>> kernelSpectra_;
};

inline SolutionField stochastic_convolution_direct(OperatorKind op, const NoiseSheet& sheet, double windowLo,
                                                   double windowHi, const std::vector<double>& sigma) {
  auto [lo, hi] = DirectConvolution::window_nodes(sheet.grid, windowLo, windowHi);
  return DirectConvolution(op, sheet.H, sheet.grid, lo, hi).full_field(sheet, sigma);
}

// ---------------------------------------------------------------------------
// homogeneous part and drift

/// omega(t_n, x_j) at every node, replicated over components.
inline SolutionField homogeneous_field(OperatorKind op, const InitialData& init, const GridSpec& grid, std::size_t d,
                                       std::vector<std::size_t> times = {}) {
  times = detail::normalize_times(grid, std::move(times));
  SolutionField f = SolutionField::zeros(grid, d, times);
  f.method = "homogeneous";
  if (init.identicallyZero) return f;
  for (std::size_t s = 0; s < times.size(); ++s) {
    const double t = grid.time(times[s]);
    double* r = f.row(0, s);
    for (std::size_t j = 0; j < grid.nX; ++j) r[j] = homogeneous_solution(op, init, t, grid.x(j));
    for (std::size_t c = 1; c < d; ++c) std::copy(r, r + grid.nX, f.row(c, s));
  }
  return f;
}

namespace detail {

inline double clamp_sample(const double* v, long long j, long long n) {
  return v[std::clamp<long long>(j, 0, n - 1)];
}

// b(u) at every node of time slot s, (component, space)
inline void drift_row(const SolutionField& u, const DriftSpec& drift, std::size_t slot, std::vector<double>& out) {
  const std::size_t d = u.d, nX = u.grid.nX;
  out.assign(d * nX, 0.0);
  std::vector<double> x(d), y(d);
  for (std::size_t j = 0; j < nX; ++j) {
    for (std::size_t c = 0; c < d; ++c) x[c] = u.at(c, slot, j);
    drift.b(x.data(), y.data(), d);
    for (std::size_t c = 0; c < d; ++c) out[c * nX + j] = y[c];
  }
}

// Node-sampled heat kernel G_dt, normalized to unit mass on the grid.
inline std::vector<double> heat_step_kernel(const GridSpec& grid, long long& half) {
  const double dx = grid.dx();
  const double sd = std::sqrt(2.0 * grid.dt());
  half = static_cast<long long>(std::ceil(10.0 * sd / dx));
  std::vector<double> g(static_cast<std::size_t>(2 * half + 1));
  double sum = 0.0;
  for (long long q = -half; q <= half; ++q) {
    const double x = static_cast<double>(q) * dx;
    g[static_cast<std::size_t>(q + half)] = std::exp(-x * x / (4.0 * grid.dt()));
    sum += g[static_cast<std::size_t>(q + half)];
  }
  for (double& v : g) v /= sum;
  return g;
}

// Integral of the piecewise-linear interpolant of v (constant beyond the
// ends) from x_0 to x, given prefix integrals at the nodes.
inline double prefix_at(const std::vector<double>& prefix, const double* v, std::size_t n, double dx, double pos) {
  // pos in node units from x_0
  if (pos <= 0.0) return pos * dx * v[0];
  const double last = static_cast<double>(n - 1);
  if (pos >= last) return prefix[n - 1] + (pos - last) * dx * v[n - 1];
  const auto k = static_cast<std::size_t>(pos);
  const double f = pos - static_cast<double>(k);
  const double slope = v[k + 1] - v[k];
  return prefix[k] + dx * f * (v[k] + 0.5 * slope * f);
}

}  // namespace detail

/// Drift convolution at every node: left-endpoint rule in time, trapezoid in
/// space. Heat steps by the semigroup D_{n+1} = G_dt * (D_n + dt b(u_n));
/// wave integrates b(u) over the light cone of each node. Values beyond the
/// grid ends are taken as constant continuations.
inline SolutionField drift_field(OperatorKind op, const SolutionField& u, const DriftSpec& drift) {
  if (!u.allTimes()) throw DomainError("drift convolution: the history must contain every time step");
  const GridSpec& grid = u.grid;
  const std::size_t d = u.d, nX = grid.nX, nT = grid.nT;
  SolutionField D = SolutionField::zeros(grid, d);
  D.jLo = u.jLo;
  D.jHi = u.jHi;
  D.method = "drift";
  if (drift.isZero()) return D;
  const double dt = grid.dt();
  std::vector<double> bu;
  if (op == OperatorKind::Heat) {
    long long half = 0;
    const std::vector<double> g = detail::heat_step_kernel(grid, half);
    std::vector<double> src(nX);
    const auto n = static_cast<long long>(nX);
    for (std::size_t step = 0; step < nT; ++step) {
      detail::drift_row(u, drift, step, bu);
      for (std::size_t c = 0; c < d; ++c) {
        const double* prev = D.row(c, step);
        for (std::size_t j = 0; j < nX; ++j) src[j] = prev[j] + dt * bu[c * nX + j];
        double* next = D.row(c, step + 1);
        for (long long j = 0; j < n; ++j) {
          double s = 0.0;
          for (long long q = -half; q <= half; ++q)
            s += g[static_cast<std::size_t>(q + half)] * detail::clamp_sample(src.data(), j - q, n);
          next[j] = s;
        }
      }
    }
    return D;
  }
  // wave: D(t_n, x) = sum_{i<n} dt * 1/2 * int_{x - (n-i)dt}^{x + (n-i)dt} b(u(t_i, .))
  const double dx = grid.dx();
  std::vector<std::vector<double>> prefix(nT * d, std::vector<double>(nX));
  std::vector<std::vector<double>> values(nT * d);
  for (std::size_t i = 0; i < nT; ++i) {
    detail::drift_row(u, drift, i, bu);
    for (std::size_t c = 0; c < d; ++c) {
      auto& v = values[i * d + c];
      v.assign(bu.begin() + static_cast<std::ptrdiff_t>(c * nX), bu.begin() + static_cast<std::ptrdiff_t>((c + 1) * nX));
      auto& p = prefix[i * d + c];
      p[0] = 0.0;
      for (std::size_t j = 1; j < nX; ++j) p[j] = p[j - 1] + 0.5 * dx * (v[j - 1] + v[j]);
    }
  }
  for (std::size_t n = 1; n <= nT; ++n) {
    for (std::size_t c = 0; c < d; ++c) {
      double* out = D.row(c, n);
      for (std::size_t j = 0; j < nX; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double reach = static_cast<double>(n - i) * dt / dx;
          const auto& v = values[i * d + c];
          const auto& p = prefix[i * d + c];
          const double pj = static_cast<double>(j);
          s += 0.5 * (detail::prefix_at(p, v.data(), nX, dx, pj + reach) -
                      detail::prefix_at(p, v.data(), nX, dx, pj - reach));
        }
        out[j] = dt * s;
      }
    }
  }
  return D;
}

/// Drift convolution at a single point (t_n, x) in R^d, by direct summation
/// with the same quadrature rules. The kernel support must lie inside the
/// grid window.
inline std::vector<double> drift_convolution(OperatorKind op, const SolutionField& uHistory, const DriftSpec& drift,
                                             double t, double x) {
  const GridSpec& grid = uHistory.grid;
  const std::size_t d = uHistory.d;
  const double nReal = t / grid.dt();
  const auto n = static_cast<std::size_t>(std::llround(nReal));
  if (t < 0.0 || std::abs(nReal - static_cast<double>(n)) > 1e-9 || n > grid.nT)
    throw DomainError("drift_convolution: t must be a grid time covered by the history");
  if (!uHistory.allTimes()) throw DomainError("drift_convolution: the history must contain every time step");
  std::vector<double> out(d, 0.0);
  if (drift.isZero() || n == 0) return out;
  const double reach = op == OperatorKind::Heat ? 8.0 * std::sqrt(t) : t;
  if (x - reach < grid.xMin || x + reach > grid.x(grid.nX - 1))
    throw DomainError("drift_convolution: history window too narrow for the kernel support at this point");
  std::vector<double> bu;
  const double dx = grid.dx();
  for (std::size_t i = 0; i < n; ++i) {
    detail::drift_row(uHistory, drift, i, bu);
    const double age = grid.time(n) - grid.time(i);
    for (std::size_t c = 0; c < d; ++c) {
      const double* v = bu.data() + c * grid.nX;
      if (op == OperatorKind::Heat) {
        double s = 0.0, mass = 0.0;
        for (std::size_t j = 0; j < grid.nX; ++j) {
          const double g = green_value(OperatorKind::Heat, age, x - grid.x(j));
          s += g * v[j];
          mass += g;
        }
        out[c] += grid.dt() * s / mass;
      } else {
        std::vector<double> p(grid.nX);
        for (std::size_t j = 1; j < grid.nX; ++j) p[j] = p[j - 1] + 0.5 * dx * (v[j - 1] + v[j]);
        const double pos = (x - grid.xMin) / dx;
        out[c] += grid.dt() * 0.5 *
                  (detail::prefix_at(p, v, grid.nX, dx, pos + age / dx) - detail::prefix_at(p, v, grid.nX, dx, pos - age / dx));
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Picard iteration

struct PicardResult {
  SolutionField field;
  // sup-distances between consecutive iterates, starting with |u^2 - u^1|
  std::vector<double> distances;
};

inline double sup_distance(const SolutionField& a, const SolutionField& b) {
  const std::size_t plane = a.slots() * a.grid.nX;
  double worst = 0.0;
  for (std::size_t p = 0; p < plane; ++p) {
    double s = 0.0;
    for (std::size_t c = 0; c < a.d; ++c) {
      const double diff = a.values[c * plane + p] - b.values[c * plane + p];
      s += diff * diff;
    }
    worst = std::max(worst, s);
  }
  return std::sqrt(worst);
}

/// u^0 = omega + offset, u^{k+1} = omega + drift(u^k) + noise, on a fixed
/// noise field (already mixed by sigma). Throws NonConvergenceError with the
/// distance history if maxIters passes without reaching supTol.
inline PicardResult picard_iterate(const ModelSpec& model, const SolutionField& noise, const PicardConfig& config,
                                   double initialOffset = 0.0) {
  model.validate();
  config.validate();
  if (!noise.allTimes() || noise.d != model.d) throw DomainError("picard: noise field must hold every time, d components");
  SolutionField omega = homogeneous_field(model.op, model.init, noise.grid, model.d);
  SolutionField base = omega;
  for (std::size_t q = 0; q < base.values.size(); ++q) base.values[q] += noise.values[q];
  SolutionField u = omega;
  for (double& v : u.values) v += initialOffset;
  PicardResult result;
  for (std::size_t iter = 0; iter < config.maxIters; ++iter) {
    SolutionField next = drift_field(model.op, u, model.drift);
    for (std::size_t q = 0; q < next.values.size(); ++q) next.values[q] += base.values[q];
    if (iter > 0) {
      const double dist = sup_distance(next, u);
      result.distances.push_back(dist);
      if (dist < config.supTol) {
        next.jLo = noise.jLo;
        next.jHi = noise.jHi;
        next.method = "picard";
        next.seed = noise.seed;
        result.field = std::move(next);
        return result;
      }
    }
    u = std::move(next);
  }
  throw NonConvergenceError("picard iteration did not reach supTol within maxIters", result.distances);
}

/// Picard solve on the direct stochastic convolution of a sampled sheet.
inline PicardResult picard_solve(const ModelSpec& model, const NoiseSheet& sheet, double windowLo, double windowHi,
                                 const PicardConfig& config, double initialOffset = 0.0) {
  if (sheet.d != model.d) throw DomainError("picard: sheet has the wrong number of components");
  if (sheet.H != model.H) throw DomainError("picard: sheet H differs from the model H");
  SolutionField noise = stochastic_convolution_direct(model.op, sheet, windowLo, windowHi, model.sigma);
  return picard_iterate(model, noise, config, initialOffset);
}

/// Picard solve on the spectral stochastic convolution drawn from `seed`.
inline PicardResult picard_solve(const ModelSpec& model, const GridSpec& grid, std::uint64_t seed,
                                 const PicardConfig& config, const SpectralOptions& options = {},
                                 double initialOffset = 0.0) {
  model.validate();
  SolutionField noise = SpectralConvolution(model.op, model.H, grid, options).sample(model.d, model.sigma, seed);
  return picard_iterate(model, noise, config, initialOffset);
}

// ---------------------------------------------------------------------------
// ensembles

enum class Method { Spectral, Direct, Picard };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::Spectral: return "spectral";
    case Method::Direct: return "direct";
    case Method::Picard: return "picard";
  }
  return "?";
}

inline Method parse_method(std::string_view s) {
  if (s == "spectral") return Method::Spectral;
  if (s == "direct") return Method::Direct;
  if (s == "picard") return Method::Picard;
  throw DomainError("unknown method '" + std::string(s) + "' (expected spectral|direct|picard)");
}

struct EnsembleOptions {
  Method method = Method::Spectral;
  std::size_t threads = 1;
  // evaluation window in space coordinates; the whole grid if unset
  std::optional<std::pair<double, double>> window;
  std::vector<std::size_t> times;  // stored times (all if empty); spectral only
  SpectralOptions spectral;
  PicardConfig picard;
  std::size_t memoryBudgetBytes = std::size_t{2} << 30;
};

/// Builds the per-replica solver once and produces replica r from seed
/// baseSeed + r. Thread-safe after construction.
class EnsembleRunner {
 public:
  EnsembleRunner(ModelSpec model, GridSpec grid, EnsembleOptions options)
      : model_(std::move(model)), grid_(grid), options_(std::move(options)) {
    model_.validate();
    grid_.validate();
    if (!model_.drift.isZero() && options_.method != Method::Picard)
      throw ConfigurationError("a nonzero drift requires the picard method");
    if (options_.method != Method::Spectral && !options_.times.empty())
      throw ConfigurationError("time subsets are only supported by the spectral method");
    jLo_ = 0;
    jHi_ = grid_.nX;
    if (options_.window) std::tie(jLo_, jHi_) = DirectConvolution::window_nodes(grid_, options_.window->first, options_.window->second);
    if (options_.method == Method::Direct) {
      direct_ = std::make_shared<DirectConvolution>(model_.op, model_.H, grid_, jLo_, jHi_);
      sampler_ = std::make_shared<SheetSampler>(grid_, model_.H);
    } else {
      spectral_ = std::make_shared<SpectralConvolution>(model_.op, model_.H, grid_, options_.spectral);
    }
    if (!model_.init.identicallyZero && options_.method != Method::Picard)
      omega_ = std::make_shared<SolutionField>(homogeneous_field(model_.op, model_.init, grid_, model_.d, options_.times));
  }

  const ModelSpec& model() const { return model_; }
  const GridSpec& grid() const { return grid_; }
  const EnsembleOptions& options() const { return options_; }

  std::size_t field_bytes() const {
    const std::size_t slots = options_.times.empty() ? grid_.nT + 1 : options_.times.size();
    return model_.d * slots * grid_.nX * sizeof(double);
  }

  SolutionField replica(std::uint64_t seed) const {
    SolutionField f;
    switch (options_.method) {
      case Method::Spectral:
        f = spectral_->sample(model_.d, model_.sigma, seed, options_.times);
        break;
      case Method::Direct:
        f = direct_->full_field(sampler_->sample(model_.d, seed), model_.sigma);
        break;
      case Method::Picard:
        f = picard_replica(seed).field;
        break;
    }
    if (omega_)
      for (std::size_t q = 0; q < f.values.size(); ++q) f.values[q] += omega_->values[q];
    f.jLo = jLo_;
    f.jHi = jHi_;
    f.seed = seed;
    f.method = std::string(to_string(options_.method));
    return f;
  }

  /// Picard replica with its distance history (picard method only).
  PicardResult picard_replica(std::uint64_t seed) const {
    if (options_.method != Method::Picard) throw ConfigurationError("picard_replica needs the picard method");
    SolutionField noise = spectral_->sample(model_.d, model_.sigma, seed);
    PicardResult r = picard_iterate(model_, noise, options_.picard);
    r.field.jLo = jLo_;
    r.field.jHi = jHi_;
    r.field.seed = seed;
    return r;
  }

  /// Calls fn(r, field) for every replica; calls may run concurrently but
  /// each replica is computed exactly once and independently of scheduling.
  template <class Fn>
  void for_each(std::size_t nReplicas, std::uint64_t baseSeed, Fn&& fn) const {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failureMutex;
    auto worker = [&] {
      for (;;) {
        const std::size_t r = next.fetch_add(1);
        if (r >= nReplicas) return;
        try {
          fn(r, replica(baseSeed + r));
        } catch (...) {
          std::lock_guard lock(failureMutex);
          if (!failure) failure = std::current_exception();
          next.store(nReplicas);
          return;
        }
      }
    };
    const std::size_t threads = std::max<std::size_t>(1, std::min(options_.threads, nReplicas));
    if (threads == 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (std::size_t q = 0; q < threads; ++q) pool.emplace_back(worker);
      for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);
  }

 private:
  ModelSpec model_;
  GridSpec grid_;
  EnsembleOptions options_;
  std::size_t jLo_ = 0, jHi_ = 0;
  std::shared_ptr<SpectralConvolution> spectral_;
  std::shared_ptr<DirectConvolution> direct_;
  std::shared_ptr<SheetSampler> sampler_;
  std::shared_ptr<SolutionField> omega_;
};

/// All replicas held in memory. Throws PartialResultsError when they would
/// not fit in the memory budget.
inline std::vector<SolutionField> ensemble_run(const ModelSpec& model, const GridSpec& grid, std::size_t nReplicas,
                                               std::uint64_t baseSeed, const EnsembleOptions& options = {}) {
  if (nReplicas < 1) throw DomainError("ensemble: nReplicas must be >= 1");
  EnsembleRunner runner(model, grid, options);
  const std::size_t fit = std::max<std::size_t>(1, options.memoryBudgetBytes / std::max<std::size_t>(1, runner.field_bytes()));
  const std::size_t count = std::min(fit, nReplicas);
  std::vector<SolutionField> out(count);
  runner.for_each(count, baseSeed, [&](std::size_t r, SolutionField f) { out[r] = std::move(f); });
  if (count < nReplicas)
    throw PartialResultsError("ensemble exceeds the memory budget; stream it with EnsembleRunner::for_each", count);
  return out;
}

}  // namespace roughsheet
