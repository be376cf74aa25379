#pragma once

#include <stdexcept>
#include <string>

namespace treecast {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Model parameters violate the channel constraints.
class ConstraintViolation : public Error {
 public:
  using Error::Error;
};

/// |theta| = 1 (noiseless channel) requested without opting in.
class DegenerateChannel : public Error {
 public:
  using Error::Error;
};

/// An exact enumeration or tree simulation would exceed its size budget.
class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

class LevelMismatch : public Error {
 public:
  using Error::Error;
};

class EmptyPool : public Error {
 public:
  using Error::Error;
};

/// A log-space product or posterior evaluated to NaN/inf.
class NonFinite : public Error {
 public:
  using Error::Error;
};

/// Underflow pruning removed more probability mass than allowed.
class PrecisionLoss : public Error {
 public:
  using Error::Error;
};

/// Threshold bisection could not shrink the bracket with consistent signs.
class SolverStall : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IOFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace treecast
