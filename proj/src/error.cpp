#include "tds/error.hpp"

namespace tds {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::SingularPivot: return "SingularPivot";
    case ErrorKind::SingularCorrection: return "SingularCorrection";
    case ErrorKind::SingularMatrix: return "SingularMatrix";
    case ErrorKind::SingularPair: return "SingularPair";
    case ErrorKind::TruncationUnsafe: return "TruncationUnsafe";
    case ErrorKind::NotDominant: return "NotDominant";
    case ErrorKind::OutOfBounds: return "OutOfBounds";
    case ErrorKind::DivisibilityError: return "DivisibilityError";
    case ErrorKind::NoNeighbor: return "NoNeighbor";
    case ErrorKind::TagMismatch: return "TagMismatch";
    case ErrorKind::RankPanic: return "RankPanic";
    case ErrorKind::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

} // namespace tds
