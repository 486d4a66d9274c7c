#pragma once

#include <stdexcept>
#include <string>

namespace platoon {

/// Base for all toolkit errors. `kind()` is the machine-readable class name
/// emitted by the CLI.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  [[nodiscard]] virtual const char* kind() const noexcept { return "Error"; }
};

/// Invalid user configuration (ranges, orders, step sizes).
class ConfigError : public Error {
 public:
  using Error::Error;
  [[nodiscard]] const char* kind() const noexcept override { return "ConfigError"; }
};

/// Numerical domain violation, e.g. a magnitude requested for a plant whose
/// denominator vanishes on the imaginary axis.
class DomainError : public Error {
 public:
  using Error::Error;
  [[nodiscard]] const char* kind() const noexcept override { return "DomainError"; }
};

/// The box admits no locally stable gain at the requested parameter point.
class InfeasibleBox : public Error {
 public:
  using Error::Error;
  [[nodiscard]] const char* kind() const noexcept override { return "InfeasibleBox"; }
};

/// A gain vector lies outside the constrained parameterization's image.
class NotInManifold : public Error {
 public:
  NotInManifold(int coordinate, const std::string& what)
      : Error(what), coordinate_(coordinate) {}
  [[nodiscard]] const char* kind() const noexcept override { return "NotInManifold"; }
  /// 1-based index of the first coordinate that failed.
  [[nodiscard]] int coordinate() const noexcept { return coordinate_; }

 private:
  int coordinate_;
};

class Stage1Failed : public Error {
 public:
  Stage1Failed(const std::string& what, double best_norm)
      : Error(what), best_norm_(best_norm) {}
  [[nodiscard]] const char* kind() const noexcept override { return "Stage1Failed"; }
  [[nodiscard]] double best_norm() const noexcept { return best_norm_; }

 private:
  double best_norm_;
};

/// Surrogate-feasible design rejected by the exact-model check.
class CertificationFailed : public Error {
 public:
  using Error::Error;
  [[nodiscard]] const char* kind() const noexcept override { return "CertificationFailed"; }
};

class InternalError : public Error {
 public:
  using Error::Error;
  [[nodiscard]] const char* kind() const noexcept override { return "InternalError"; }
};

}  // namespace platoon
