#pragma once

#include <algorithm>
#include <cmath>
#include <complex>

namespace hplk {

using cplx = std::complex<double>;

inline bool is_finite(cplx z) noexcept { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

struct Complex2x2 {
    cplx m11{}, m12{}, m21{}, m22{};

    static constexpr Complex2x2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
    // the limiting projector of every product family: [[1,0],[1,0]]
    static constexpr Complex2x2 projector() { return {1.0, 0.0, 1.0, 0.0}; }

    bool finite() const noexcept {
        return is_finite(m11) && is_finite(m12) && is_finite(m21) && is_finite(m22);
    }
    // max-row-sum operator norm
    double norm() const noexcept {
        return std::max(std::abs(m11) + std::abs(m12), std::abs(m21) + std::abs(m22));
    }
    double max_entry() const noexcept {
        return std::max({std::abs(m11), std::abs(m12), std::abs(m21), std::abs(m22)});
    }
    cplx det() const noexcept { return m11 * m22 - m12 * m21; }
    cplx trace() const noexcept { return m11 + m22; }

    friend Complex2x2 operator*(const Complex2x2& a, const Complex2x2& b) noexcept {
        return {a.m11 * b.m11 + a.m12 * b.m21, a.m11 * b.m12 + a.m12 * b.m22,
                a.m21 * b.m11 + a.m22 * b.m21, a.m21 * b.m12 + a.m22 * b.m22};
    }
    friend Complex2x2 operator+(const Complex2x2& a, const Complex2x2& b) noexcept {
        return {a.m11 + b.m11, a.m12 + b.m12, a.m21 + b.m21, a.m22 + b.m22};
    }
    friend Complex2x2 operator-(const Complex2x2& a, const Complex2x2& b) noexcept {
        return {a.m11 - b.m11, a.m12 - b.m12, a.m21 - b.m21, a.m22 - b.m22};
    }
    friend Complex2x2 operator*(cplx s, const Complex2x2& a) noexcept {
        return {s * a.m11, s * a.m12, s * a.m21, s * a.m22};
    }
    friend bool operator==(const Complex2x2&, const Complex2x2&) = default;
};

// throws std::invalid_argument when an entry is NaN or infinite
Complex2x2 checked(const Complex2x2& m);

}  // namespace hplk
