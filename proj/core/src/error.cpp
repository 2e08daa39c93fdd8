#include "hplk/error.hpp"

#include <stdexcept>

#include "hplk/matrix.hpp"

namespace hplk {

std::string_view to_string(ErrorCode c) noexcept {
    switch (c) {
        case ErrorCode::NonSummable: return "NonSummable";
        case ErrorCode::ToleranceUnreachable: return "ToleranceUnreachable";
        case ErrorCode::SeedTooLow: return "SeedTooLow";
        case ErrorCode::ZeroMu: return "ZeroMu";
        case ErrorCode::ResonanceDenominator: return "ResonanceDenominator";
        case ErrorCode::ForbiddenN: return "ForbiddenN";
        case ErrorCode::ResonantParameters: return "ResonantParameters";
        case ErrorCode::InconsistentOmega: return "InconsistentOmega";
        case ErrorCode::ForbiddenL: return "ForbiddenL";
        case ErrorCode::IntegerN: return "IntegerN";
        case ErrorCode::ResonantLine: return "ResonantLine";
        case ErrorCode::EvenL: return "EvenL";
        case ErrorCode::OddL: return "OddL";
        case ErrorCode::RangeExceeded: return "RangeExceeded";
        case ErrorCode::NoBracket: return "NoBracket";
        case ErrorCode::LostTrack: return "LostTrack";
        case ErrorCode::StepUnderflow: return "StepUnderflow";
        case ErrorCode::NotConverged: return "NotConverged";
    }
    return "Unknown";
}

Complex2x2 checked(const Complex2x2& m) {
    if (!m.finite()) throw std::invalid_argument("Complex2x2: non-finite entry");
    return m;
}

}  // namespace hplk
