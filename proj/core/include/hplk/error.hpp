#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hplk {

enum class ErrorCode {
    NonSummable,
    ToleranceUnreachable,
    SeedTooLow,
    ZeroMu,
    ResonanceDenominator,
    ForbiddenN,
    ResonantParameters,
    InconsistentOmega,
    ForbiddenL,
    IntegerN,
    ResonantLine,
    EvenL,
    OddL,
    RangeExceeded,
    NoBracket,
    LostTrack,
    StepUnderflow,
    NotConverged,
};

std::string_view to_string(ErrorCode c) noexcept;

class NumericError : public std::runtime_error {
public:
    NumericError(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace hplk
