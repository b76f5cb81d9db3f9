#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rbb {

enum class ErrorKind {
    InvalidModel,
    Unsupported,
    DegenerateMinorization,
    NotIrreducible,
    InsufficientRegeneration,
    TooFewPairs,
    EmptySmallSet,
    InvalidGrid,
    InvalidParameter,
    EmptyResample,
    ZeroVariance,
    InvalidLevel,
    InvalidEpsilon,
    EmptyDistribution,
    InvalidConfig,
};

[[nodiscard]] std::string_view to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries one of the kinds above so that
/// callers (the harness in particular) can count specific failure modes.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace rbb
