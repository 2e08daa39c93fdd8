#include "hplk/product.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "hplk/error.hpp"

namespace hplk {

cplx pochhammer(cplx b, long s, long l) {
    if (l < s) throw std::invalid_argument("pochhammer: requires l >= s");
    return pochhammer_range(b, s, l + 1);
}

cplx pochhammer_range(cplx b, long s, long e) {
    if (e < s) throw std::invalid_argument("pochhammer_range: requires e >= s");
    cplx p = 1.0;
    for (long j = s; j < e; ++j) p *= b + static_cast<double>(j);
    return p;
}

Complex2x2 partial_product(const MatrixSequence& seq, long first, long last) {
    Complex2x2 t = Complex2x2::identity();
    for (long j = first; j <= last; ++j) t = t * seq(j);
    return t;
}

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

double s_norm(const Complex2x2& m) { return (m - Complex2x2::projector()).norm(); }

Complex2x2 project(const Complex2x2& t) { return t * Complex2x2::projector(); }

long auto_base(long start) {
    long n = 128;
    while (n < 4 * (std::abs(start) + 16)) n *= 2;
    return n;
}

}  // namespace

TruncatedProduct converging_product(const MatrixSequence& seq, long start, double tol,
                                    const ProductOptions& opt) {
    if (!(tol > 0.0)) throw std::invalid_argument("converging_product: tol must be positive");
    const int L = std::max(2, opt.levels);
    long base = opt.base_factors > 0 ? opt.base_factors : auto_base(start);
    if (base <= start + 32) throw std::invalid_argument("converging_product: base too close to start");
    bool probed = false;
    TruncatedProduct best;
    double best_bound = INFINITY;
    int stalls = 0;

    for (;;) {
        const long last = base << (L - 1);
        if (last > opt.max_factors) {
            if (opt.best_effort && std::isfinite(best_bound)) return best;
            throw NumericError(ErrorCode::ToleranceUnreachable,
                               "truncation would exceed " + std::to_string(opt.max_factors) + " factors");
        }

        std::vector<Complex2x2> v(L);
        Complex2x2 t = Complex2x2::identity();
        double probe1 = 0.0, probe2 = 0.0, s_total = 0.0;
        int level = 0;
        long next = base;
        for (long j = start; j <= last; ++j) {
            const Complex2x2 m = seq(j);
            const double sn = s_norm(m);
            s_total += sn;
            if (j > base - 32 && j <= base) probe1 = std::max(probe1, sn);
            if (j > 2 * base - 32 && j <= 2 * base) probe2 = std::max(probe2, sn);
            t = t * m;
            if (j == next) {
                v[level++] = project(t);
                next *= 2;
            }
        }
        if (!t.finite())
            throw NumericError(ErrorCode::ToleranceUnreachable, "partial product is not finite");
        if (!probed) {
            // O(j^-2) decay gives a ratio near 1/4 between the two probe windows
            if (probe2 > 0.4 * probe1 + 1e-300 && probe2 > 0.0)
                throw NumericError(ErrorCode::NonSummable, "factor deviation from projector does not decay");
            probed = true;
        }
        if (s_total == 0.0) return {v[L - 1], start, last, 0.0};

        // Richardson table in h = 1/N with ratio 2
        std::vector<std::vector<Complex2x2>> tab(L);
        for (int i = 0; i < L; ++i) {
            tab[i].resize(i + 1);
            tab[i][0] = v[i];
            double f = 1.0;
            for (int k = 1; k <= i; ++k) {
                f *= 2.0;
                tab[i][k] = tab[i][k - 1] + (1.0 / (f - 1.0)) * (tab[i][k - 1] - tab[i - 1][k - 1]);
            }
        }
        const Complex2x2 diag = tab[L - 1][L - 1];
        const Complex2x2 diag_prev = tab[L - 2][L - 2];
        const double est = (diag - diag_prev).max_entry();
        const double scale = std::max(1.0, diag.max_entry());
        const double floor = 2.0 * kEps * std::sqrt(static_cast<double>(last - start + 1)) * scale;
        const double bound = opt.safety * est + floor;
        if (floor > tol * scale) {
            if (opt.best_effort) return {diag, start, last, bound};
            throw NumericError(ErrorCode::ToleranceUnreachable, "tolerance below rounding floor");
        }
        if (bound <= tol * scale) return {diag, start, last, bound};
        // doubling should shrink the extrapolated error by far more than 2; otherwise rounding dominates
        stalls = bound > 0.5 * best_bound ? stalls + 1 : 0;
        if (bound < best_bound) {
            best_bound = bound;
            best = {diag, start, last, bound};
        }
        if (stalls >= 2) {
            if (opt.best_effort) return best;
            throw NumericError(ErrorCode::ToleranceUnreachable, "rounding plateau above tolerance");
        }
        base *= 2;
    }
}

double lemma_tail_bound(const MatrixSequence& seq, long start, long n) {
    if (n < start + 32) throw std::invalid_argument("lemma_tail_bound: n too small");
    double sum = 0.0, c = 0.0;
    for (long j = start; j <= n; ++j) {
        const double sn = s_norm(seq(j));
        sum += sn;
        if (j > n - 32) c = std::max(c, static_cast<double>(j) * static_cast<double>(j) * sn);
    }
    const double tail = c / static_cast<double>(n);
    const double C = std::exp(sum + tail) * seq(start).norm();
    return 3.0 * C * tail;
}

cplx ProjectiveRatio::value() const {
    if (infinite()) return {std::numeric_limits<double>::infinity(), 0.0};
    return a1 / a0;
}

std::vector<ProjectiveRatio> projective_backward_solve(const RecurrenceCoeffs& coeffs, long k_hi,
                                                       long k_lo) {
    if (k_lo >= k_hi) throw std::invalid_argument("projective_backward_solve: k_lo >= k_hi");
    const RecurrenceTriple top = coeffs(k_hi);
    if (!(std::abs(top.g) > 2.0 * (std::abs(top.f) + std::abs(top.h))))
        throw NumericError(ErrorCode::SeedTooLow, "contraction test fails at k_hi");
    std::vector<ProjectiveRatio> out(static_cast<size_t>(k_hi - k_lo));
    cplx ak = 1.0, ak1 = 0.0;  // (a_{k_hi} : a_{k_hi+1})
    for (long k = k_hi; k > k_lo; --k) {
        const RecurrenceTriple c = coeffs(k);
        if (c.f == cplx{}) throw std::invalid_argument("projective_backward_solve: f_k = 0 in range");
        const cplx akm1 = -(c.g * ak + c.h * ak1) / c.f;
        const double s = std::max(std::abs(akm1), std::abs(ak));
        ak1 = ak / s;
        ak = akm1 / s;
        out[static_cast<size_t>(k - 1 - k_lo)] = {ak, ak1};
    }
    return out;
}

}  // namespace hplk
