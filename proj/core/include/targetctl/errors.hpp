#pragma once

#include <stdexcept>
#include <string>

namespace targetctl {

enum class ErrorKind {
  kInput,
  kExistence,
  kNeedsAugmentation,
  kConsistency,
  kNumerical,
  kDivergence,
};

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Malformed arguments: bad dimensions, non-finite entries, rank-deficient F.
class InputError : public Error {
 public:
  explicit InputError(const std::string& what) : Error(ErrorKind::kInput, what) {}
};

/// A structural condition required for the requested design does not hold.
class ExistenceError : public Error {
 public:
  explicit ExistenceError(const std::string& what) : Error(ErrorKind::kExistence, what) {}
};

/// rank[FA; F] > rank F: an r-pole design is impossible, augment F first.
class NeedsAugmentationError : public Error {
 public:
  explicit NeedsAugmentationError(const std::string& what)
      : Error(ErrorKind::kNeedsAugmentation, what) {}
};

/// Two formulations of the same test disagreed beyond tolerance.
class ConsistencyError : public Error {
 public:
  explicit ConsistencyError(const std::string& what) : Error(ErrorKind::kConsistency, what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(ErrorKind::kNumerical, what) {}
};

/// Raised by the integrator when the state norm leaves the representable
/// range; `time()` is the sample time at which it happened.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, double time)
      : Error(ErrorKind::kDivergence, what), time_(time) {}

  double time() const noexcept { return time_; }

 private:
  double time_;
};

}  // namespace targetctl
