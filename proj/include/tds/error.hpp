#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tds {

/// Failure categories raised by the library. Every throw site uses tds::Error
/// so callers can branch on kind() without parsing messages.
enum class ErrorKind {
    InvalidArgument,
    SingularPivot,
    SingularCorrection,
    SingularMatrix,
    SingularPair,
    TruncationUnsafe,
    NotDominant,
    OutOfBounds,
    DivisibilityError,
    NoNeighbor,
    TagMismatch,
    RankPanic,
    ConfigError,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace tds
