#pragma once

#include <stdexcept>
#include <string>

namespace msd {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or out-of-contract input: dimension mismatch, invalid PMF,
// improper transfer function, violated relative-degree assumption.
class InputError : public Error {
 public:
  using Error::Error;
};

// A quantity that only exists for stable systems was requested on an
// unstable one (H2 norm, Lyapunov solution, asymptotic variance).
class StabilityError : public Error {
 public:
  using Error::Error;
};

// Spectral density has zeros on the unit circle, so no strictly
// minimum-phase factor exists.
class MarginalFactorizationError : public Error {
 public:
  using Error::Error;
};

// Iterative solver failed (eigenvalues, Lyapunov, Riccati).
class NumericalError : public Error {
 public:
  using Error::Error;
};

enum class RiccatiFailure {
  kNotStabilizable,
  kNotDetectable,
  kSingularInner,
  kNoConvergence,
  kNotStabilizing,
  kResidual,
};

class RiccatiError : public NumericalError {
 public:
  RiccatiError(RiccatiFailure kind, const std::string& what)
      : NumericalError(what), kind_(kind) {}
  RiccatiFailure kind() const noexcept { return kind_; }

 private:
  RiccatiFailure kind_;
};

// A self-check that should hold for any valid input failed.
class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace msd
