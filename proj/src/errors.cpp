#include "rbb/errors.hpp"

namespace rbb {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::InvalidModel: return "InvalidModel";
        case ErrorKind::Unsupported: return "Unsupported";
        case ErrorKind::DegenerateMinorization: return "DegenerateMinorization";
        case ErrorKind::NotIrreducible: return "NotIrreducible";
        case ErrorKind::InsufficientRegeneration: return "InsufficientRegeneration";
        case ErrorKind::TooFewPairs: return "TooFewPairs";
        case ErrorKind::EmptySmallSet: return "EmptySmallSet";
        case ErrorKind::InvalidGrid: return "InvalidGrid";
        case ErrorKind::InvalidParameter: return "InvalidParameter";
        case ErrorKind::EmptyResample: return "EmptyResample";
        case ErrorKind::ZeroVariance: return "ZeroVariance";
        case ErrorKind::InvalidLevel: return "InvalidLevel";
        case ErrorKind::InvalidEpsilon: return "InvalidEpsilon";
        case ErrorKind::EmptyDistribution: return "EmptyDistribution";
        case ErrorKind::InvalidConfig: return "InvalidConfig";
    }
    return "Unknown";
}

}  // namespace rbb
