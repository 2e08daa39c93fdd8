#pragma once

#include <cmath>

#include "hplk/matrix.hpp"

namespace hplk {

// left-hand side of a functional equation with its natural magnitude
struct EquationValue {
    cplx value{};
    double scale = 1.0;
    double truncation_error = 0.0;
    double normalized() const noexcept { return std::abs(value) / scale; }
    // real part over scale, for sign-change bracketing along real parameter lines
    double signed_normalized() const noexcept { return value.real() / scale; }
};

}  // namespace hplk
