#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rwre {

enum class ErrorKind {
  InvalidArgument,
  NotNormalized,
  EllipticityViolated,
  NegativeEntry,
  HorizonTooLarge,
  AcceptanceTooLow,
  BallisticityDoubtful,
  TilingViolation,
  OutsideCoveredRegion,
  InsufficientMass,
  TailNotEstimable,
  InvalidConfig,
};

std::string_view to_string(ErrorKind kind) noexcept;

// Single exception type for every failure the lab reports; callers dispatch on kind().
class LabError : public std::runtime_error {
 public:
  LabError(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace rwre
