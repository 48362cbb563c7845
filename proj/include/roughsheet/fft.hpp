#pragma once

// Thin RAII wrapper over FFTW's complex 1-D transforms. Plans are created
// once (planning is serialized; FFTW's planner is not thread-safe) and then
// executed from any thread on caller-owned arrays.

#include <complex>
#include <cstddef>
#include <mutex>
#include <stdexcept>
#include <vector>

#include <fftw3.h>

namespace roughsheet {

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

class FftPlan {
 public:
  enum class Direction { Forward, Backward };

  FftPlan(std::size_t n, Direction dir) : n_(n) {
    if (n == 0) throw std::invalid_argument("FftPlan: size must be positive");
    std::vector<std::complex<double>> scratch(n);
    std::lock_guard lock(fftw_planner_mutex());
    auto* p = reinterpret_cast<fftw_complex*>(scratch.data());
    plan_ = fftw_plan_dft_1d(static_cast<int>(n), p, p, dir == Direction::Forward ? FFTW_FORWARD : FFTW_BACKWARD,
                             FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (!plan_) throw std::runtime_error("FftPlan: FFTW planning failed");
  }
  ~FftPlan() {
    if (plan_) {
      std::lock_guard lock(fftw_planner_mutex());
      fftw_destroy_plan(plan_);
    }
  }
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;

  std::size_t size() const { return n_; }

  // Unnormalized transform: out_k = sum_j in_j e^{-+2 pi i jk/n}. In place is fine.
  void execute(std::complex<double>* in, std::complex<double>* out) const {
    fftw_execute_dft(plan_, reinterpret_cast<fftw_complex*>(in), reinterpret_cast<fftw_complex*>(out));
  }
  void execute(std::vector<std::complex<double>>& data) const {
    if (data.size() != n_) throw std::invalid_argument("FftPlan: size mismatch");
    execute(data.data(), data.data());
  }

 private:
  std::size_t n_;
  fftw_plan plan_ = nullptr;
};

}  // namespace roughsheet
