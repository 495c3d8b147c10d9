#pragma once

#include <stdexcept>
#include <string>

namespace crvar {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke a documented precondition (shape mismatch, wrong rank, ...).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// An argument lies outside the mathematical domain of the operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A matrix that must be invertible is (numerically) singular.
class SingularityError : public Error {
 public:
  SingularityError(const std::string& what, int lag = -1)
      : Error(what), lag_(lag) {}
  /// 1-based lag index that triggered the failure, or -1 if not lag-specific.
  int lag() const noexcept { return lag_; }

 private:
  int lag_;
};

/// Numerical breakdown: an intermediate lost definiteness or became non-finite.
class ConditioningError : public Error {
 public:
  ConditioningError(const std::string& what, int lag = -1)
      : Error(what), lag_(lag) {}
  int lag() const noexcept { return lag_; }

 private:
  int lag_;
};

class RankError : public Error {
 public:
  using Error::Error;
};

/// The VAR polynomial has a root on or inside the unit circle.
class NonCausalError : public Error {
 public:
  using Error::Error;
};

}  // namespace crvar
