#pragma once

#include <stdexcept>
#include <string>

namespace antenna {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidStack : public Error {
 public:
  using Error::Error;
};

/// Fresnel denominator vanished: the plane-wave state has no valid interface solution.
class InvalidPlaneWave : public Error {
 public:
  using Error::Error;
};

class NumericalAccuracyError : public Error {
 public:
  NumericalAccuracyError(const std::string& what, double residual)
      : Error(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

class InvalidObjective : public Error {
 public:
  using Error::Error;
};

class InfeasibleDomain : public Error {
 public:
  using Error::Error;
};

class CoverageError : public Error {
 public:
  using Error::Error;
};

class ContractViolation : public Error {
 public:
  using Error::Error;
};

class AbsorbingTriplet : public Error {
 public:
  using Error::Error;
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

class UndefinedEfficiency : public Error {
 public:
  using Error::Error;
};

}  // namespace antenna
