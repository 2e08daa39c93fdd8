#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>

#include "hplk/error.hpp"

namespace hplk {

// fixed-size state vector over double or std::complex<double>
template <class T, std::size_t N>
struct Vec {
    std::array<T, N> v{};

    T& operator[](std::size_t i) { return v[i]; }
    const T& operator[](std::size_t i) const { return v[i]; }
    friend Vec operator+(Vec a, const Vec& b) {
        for (std::size_t i = 0; i < N; ++i) a.v[i] += b.v[i];
        return a;
    }
    friend Vec operator*(double s, Vec a) {
        for (auto& x : a.v) x *= s;
        return a;
    }
};

struct OdeTolerance {
    double atol = 1e-10;
    double rtol = 0.0;
};

struct OdeStats {
    long accepted = 0;
    long rejected = 0;
    double last_h = 0.0;
};

// Dormand-Prince 5(4) with PI step-size control. rhs(t, y) -> dy/dt.
template <class T, std::size_t N, class Rhs>
Vec<T, N> dopri5(Rhs&& rhs, double t0, double t1, Vec<T, N> y, OdeTolerance tol, OdeStats* stats = nullptr,
                 double h_hint = 0.0) {
    using V = Vec<T, N>;
    constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    constexpr double a21 = 1.0 / 5;
    constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                     a65 = -5103.0 / 18656;
    constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                     a76 = 11.0 / 84;
    constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                     e6 = 22.0 / 525, e7 = -1.0 / 40;

    const double span = t1 - t0;
    if (span == 0.0) return y;
    const double dir = span > 0 ? 1.0 : -1.0;
    double h = h_hint > 0.0 ? std::min(h_hint, std::abs(span)) : std::min(0.01, std::abs(span));
    double t = t0;
    double err_old = 1e-4;
    bool rejected_last = false;
    V k1 = rhs(t, y);

    while (dir * (t1 - t) > 0.0) {
        bool last = false;
        if (h >= std::abs(t1 - t)) {
            h = std::abs(t1 - t);
            last = true;
        }
        if (h < 1e-14 * std::max(1.0, std::abs(t)))
            throw NumericError(ErrorCode::StepUnderflow, "step size underflow");
        const double hs = dir * h;
        const V k2 = rhs(t + c2 * hs, y + (hs * a21) * k1);
        const V k3 = rhs(t + c3 * hs, y + hs * (a31 * k1 + a32 * k2));
        const V k4 = rhs(t + c4 * hs, y + hs * (a41 * k1 + a42 * k2 + a43 * k3));
        const V k5 = rhs(t + c5 * hs, y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        const V k6 = rhs(t + hs, y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        const V ynew = y + hs * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
        const V k7 = rhs(t + hs, ynew);
        const V err = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

        double en = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            const double sc = tol.atol + tol.rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
            en = std::max(en, std::abs(err[i]) / sc);
        }
        if (!std::isfinite(en)) {
            h *= 0.1;
            rejected_last = true;
            continue;
        }
        if (en <= 1.0) {
            t = last ? t1 : t + hs;
            y = ynew;
            k1 = k7;
            double fac = 0.9 * std::pow(std::max(en, 1e-10), -0.17) * std::pow(err_old, 0.04);
            fac = std::clamp(fac, 0.2, rejected_last ? 1.0 : 10.0);
            err_old = std::max(en, 1e-4);
            if (stats) {
                ++stats->accepted;
                if (!last) stats->last_h = h;
            }
            h *= fac;
            rejected_last = false;
        } else {
            h *= std::max(0.2, 0.9 * std::pow(en, -0.2));
            rejected_last = true;
            if (stats) ++stats->rejected;
        }
    }
    return y;
}

}  // namespace hplk
