#include "hplk/bessel.hpp"

#include <cmath>
#include <stdexcept>

#include "hplk/error.hpp"

namespace hplk {

namespace {

template <class T>
T ascending(int k, T x, double sign) {
    const T h = x / 2.0;
    T term = 1.0;
    for (int j = 1; j <= k; ++j) term *= h / static_cast<double>(j);
    const T h2 = sign * h * h;
    T sum = term;
    const double peak = std::abs(h);
    for (int m = 1; m < 1000; ++m) {
        term *= h2 / (static_cast<double>(m) * static_cast<double>(k + m));
        sum += term;
        if (m > peak && std::abs(term) <= 1e-17 * std::abs(sum)) break;
        if (term == T{}) break;
    }
    return sum;
}

}  // namespace

cplx bessel_I(int k, cplx x) {
    if (std::abs(x) > 50.0) throw NumericError(ErrorCode::RangeExceeded, "bessel_I: |x| > 50");
    return ascending<cplx>(std::abs(k), x, 1.0);
}

double bessel_J(int k, double x) {
    if (std::abs(x) > 50.0) throw NumericError(ErrorCode::RangeExceeded, "bessel_J: |x| > 50");
    const int a = std::abs(k);
    const double v = ascending<double>(a, x, -1.0);
    return (k < 0 && (a % 2 == 1)) ? -v : v;
}

double bessel_j_zero(int k, int j, double resolution) {
    if (j < 1) throw std::invalid_argument("bessel_j_zero: j >= 1");
    const double step = 0.05;
    double x0 = 0.5 * step, f0 = bessel_J(k, x0);
    int count = 0;
    for (double x1 = x0 + step; x1 <= 50.0; x1 += step) {
        const double f1 = bessel_J(k, x1);
        if (f0 == 0.0 || (f0 < 0.0) != (f1 < 0.0)) {
            if (++count == j) {
                double a = x0, b = x1, fa = f0;
                while (b - a > resolution * b) {
                    const double m = 0.5 * (a + b);
                    if (m <= a || m >= b) break;
                    const double fm = bessel_J(k, m);
                    if (fm == 0.0) return m;
                    if ((fa < 0.0) == (fm < 0.0)) {
                        a = m;
                        fa = fm;
                    } else {
                        b = m;
                    }
                }
                return 0.5 * (a + b);
            }
        }
        x0 = x1;
        f0 = f1;
    }
    throw NumericError(ErrorCode::RangeExceeded, "bessel_j_zero: zero beyond |x| = 50");
}

}  // namespace hplk
