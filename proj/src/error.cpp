#include "rwre/error.hpp"

namespace rwre {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::NotNormalized: return "NotNormalized";
    case ErrorKind::EllipticityViolated: return "EllipticityViolated";
    case ErrorKind::NegativeEntry: return "NegativeEntry";
    case ErrorKind::HorizonTooLarge: return "HorizonTooLarge";
    case ErrorKind::AcceptanceTooLow: return "AcceptanceTooLow";
    case ErrorKind::BallisticityDoubtful: return "BallisticityDoubtful";
    case ErrorKind::TilingViolation: return "TilingViolation";
    case ErrorKind::OutsideCoveredRegion: return "OutsideCoveredRegion";
    case ErrorKind::InsufficientMass: return "InsufficientMass";
    case ErrorKind::TailNotEstimable: return "TailNotEstimable";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

}  // namespace rwre
