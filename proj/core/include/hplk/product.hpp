#pragma once

#include <functional>
#include <vector>

#include "hplk/matrix.hpp"

namespace hplk {

// prod_{j=s}^{l} (b+j); requires l >= s
cplx pochhammer(cplx b, long s, long l);
// (b)_{s,e} = prod_{j=s}^{e-1} (b+j); equals 1 when e == s; requires e >= s
cplx pochhammer_range(cplx b, long s, long e);

using MatrixSequence = std::function<Complex2x2(long)>;

struct TruncatedProduct {
    Complex2x2 value;
    long first_index = 0;
    long truncation_index = 0;
    double tail_bound = 0.0;
};

struct ProductOptions {
    long max_factors = 1'000'000;
    // first extrapolation level; 0 picks it automatically. Doubling it doubles truncation_index.
    long base_factors = 0;
    int levels = 6;
    double safety = 10.0;
    // on a rounding plateau or at max_factors, return the best estimate with its (larger) bound instead of throwing
    bool best_effort = false;
};

// Infinite product M_start M_{start+1} ... of matrices P + S_k with ||S_k|| = O(k^-2).
// The partial products T_N P are extrapolated in 1/N; tail_bound is an a-posteriori
// estimate of the absolute entry error and satisfies tail_bound <= tol * max(1, |value|).
TruncatedProduct converging_product(const MatrixSequence& seq, long start, double tol,
                                    const ProductOptions& opt = {});

// plain M_first ... M_last
Complex2x2 partial_product(const MatrixSequence& seq, long first, long last);

// Rigorous bound on |M_start...M_n P - limit| from the contracting-product lemma,
// with sum_{j>n} ||S_j|| majorized by c/n, c = max_{n-32<j<=n} j^2 ||S_j||.
double lemma_tail_bound(const MatrixSequence& seq, long start, long n);

struct RecurrenceTriple {
    cplx f, g, h;
};
// k -> (f_k, g_k, h_k) of f_k a_{k-1} + g_k a_k + h_k a_{k+1} = 0
using RecurrenceCoeffs = std::function<RecurrenceTriple(long)>;

// homogeneous pair (a_k : a_{k+1})
struct ProjectiveRatio {
    cplx a0, a1;
    bool infinite() const noexcept { return a0 == cplx{}; }
    cplx value() const;  // a_{k+1}/a_k, complex infinity when infinite()
};

// x_{k_lo}, ..., x_{k_hi-1}, iterating the inverse recurrence downward from x_{k_hi} = 0
std::vector<ProjectiveRatio> projective_backward_solve(const RecurrenceCoeffs& coeffs, long k_hi,
                                                       long k_lo);

}  // namespace hplk
