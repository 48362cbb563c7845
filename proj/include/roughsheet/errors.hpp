#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace roughsheet {

// Argument outside the mathematical domain of an operation (t <= 0, H > 1/2,
// evaluation window too close to the noise boundary, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A numerical procedure did not reach its tolerance. Carries what it got.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, double estimate, double errorBound)
      : std::runtime_error(what), estimate_(estimate), errorBound_(errorBound) {}

  double estimate() const noexcept { return estimate_; }
  double errorBound() const noexcept { return errorBound_; }

 private:
  double estimate_;
  double errorBound_;
};

// Inconsistent or insufficient configuration, e.g. a spectral cutoff that
// cannot meet the requested accuracy.
class ConfigurationError : public std::invalid_argument {
 public:
  ConfigurationError(const std::string& what, double suggestedValue = 0.0)
      : std::invalid_argument(what), suggested_(suggestedValue) {}

  double suggestedValue() const noexcept { return suggested_; }

 private:
  double suggested_;
};

class InsufficientDataError : public std::runtime_error {
 public:
  InsufficientDataError(const std::string& what, std::size_t available)
      : std::runtime_error(what), available_(available) {}

  std::size_t available() const noexcept { return available_; }

 private:
  std::size_t available_;
};

// Picard iteration ran out of iterations; the distance history is kept so the
// caller can see how far from contraction it was.
class NonConvergenceError : public std::runtime_error {
 public:
  NonConvergenceError(const std::string& what, std::vector<double> distances)
      : std::runtime_error(what), distances_(std::move(distances)) {}

  const std::vector<double>& distances() const noexcept { return distances_; }

 private:
  std::vector<double> distances_;
};

// A batch stopped early on a resource limit; `completed` units were done.
class PartialResultsError : public std::runtime_error {
 public:
  PartialResultsError(const std::string& what, std::size_t completed)
      : std::runtime_error(what), completed_(completed) {}

  std::size_t completed() const noexcept { return completed_; }

 private:
  std::size_t completed_;
};

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace roughsheet
