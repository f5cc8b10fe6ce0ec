#pragma once

#include <stdexcept>
#include <string>

namespace bctrl {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// An input violated a documented precondition; `deviation` carries the
/// measured violation (e.g. the largest Hermiticity defect).
class PreconditionError : public Error {
 public:
  PreconditionError(const std::string& what, double deviation)
      : Error(what), deviation_(deviation) {}
  double deviation() const noexcept { return deviation_; }

 private:
  double deviation_;
};

/// The Fourier truncation is too coarse to represent the requested map.
class TruncationError : public Error {
 public:
  TruncationError(const std::string& what, double deviation)
      : Error(what), deviation_(deviation) {}
  double deviation() const noexcept { return deviation_; }

 private:
  double deviation_;
};

/// Propagator refinement hit its subdivision cap before meeting tolerance.
class NonConvergenceError : public Error {
 public:
  NonConvergenceError(const std::string& what, long subdivisions, double gap)
      : Error(what), subdivisions_(subdivisions), gap_(gap) {}
  long subdivisions() const noexcept { return subdivisions_; }
  double gap() const noexcept { return gap_; }

 private:
  long subdivisions_;
  double gap_;
};

/// A measured propagator distance exceeded its certified bound.
class CertificationFailure : public Error {
 public:
  CertificationFailure(const std::string& what, double bound, double measured)
      : Error(what), bound_(bound), measured_(measured) {}
  double bound() const noexcept { return bound_; }
  double measured() const noexcept { return measured_; }

 private:
  double bound_;
  double measured_;
};

/// Experiment configuration failed validation. `field` names the offending key.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& field, const std::string& message)
      : Error(field + ": " + message), field_(field) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace bctrl
