#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "hplk/equation.hpp"
#include "hplk/matrix.hpp"
#include "hplk/product.hpp"

namespace hplk {

constexpr double kResonanceTol = 1e-9;

// distance from z to the nearest integer, and that integer
double integer_distance(cplx z) noexcept;
long nearest_integer(cplx z) noexcept;
inline bool near_integer(cplx z) noexcept { return integer_distance(z) < kResonanceTol; }

// z^2 E'' + (n z + mu (1 - z^2)) E' + (lambda - mu n z) E = 0, E = z^b sum a_k z^k
struct HeunParams {
    cplx n, lambda, mu, b;

    cplx l() const noexcept { return n - 1.0; }
    bool b_resonant() const noexcept { return near_integer(b); }
    bool bn_resonant() const noexcept { return near_integer(b + n); }
    bool resonant() const noexcept { return b_resonant() || bn_resonant(); }
};

// (f_k, g_k, h_k) of the coefficient recurrence
RecurrenceTriple heun_triple(const HeunParams& p, long k) noexcept;
RecurrenceCoeffs heun_recurrence(const HeunParams& p);
// a'_m = a_{-m}: f'_m = h_{-m}, g'_m = g_{-m}, h'_m = f_{-m}
RecurrenceCoeffs reversed(RecurrenceCoeffs c);

// [[1 + lambda/D, mu^2/D], [1, 0]],  D = (k+b)(k+b+n-1)
Complex2x2 forward_matrix(const HeunParams& p, long k) noexcept;
// [[1 + (lambda-n+2)/E, mu^2 (b-m+n-1)/(E (b-m+n-3))], [1, 0]],  E = (b-m+1)(b-m+n-2)
Complex2x2 backward_matrix(const HeunParams& p, long m) noexcept;
MatrixSequence forward_family(const HeunParams& p);
MatrixSequence backward_family(const HeunParams& p);

// R_first, R_{first+1}, ..., R_last of an infinite product family, obtained from a converged
// R_{last} by R_k = M_k R_{k+1}. Consecutive entries are consistent to rounding.
struct ProductChain {
    long first = 0;
    std::vector<Complex2x2> r;
    double tail_bound = 0.0;  // relative
    const Complex2x2& at(long k) const { return r[static_cast<size_t>(k - first)]; }
};
ProductChain product_chain(const MatrixSequence& seq, long first, long last, double tol);

enum class Direction { forward, backward, two_sided };
enum class Normalization {
    product_entry,
    entire,
    d_matched,
    resonant_matched,
    sharp_image,
    diamond_image,
    polynomial,
    operator_image,
    unnormalized,
};
const char* to_string(Direction d) noexcept;
const char* to_string(Normalization n) noexcept;

// z^exponent * sum_{k} a_k z^k over a finite window
struct SeriesSolution {
    Direction direction = Direction::forward;
    long anchor = 0;       // k0: lowest index of a forward series, highest of a backward one
    long first_index = 0;  // index of coeffs[0]
    cplx exponent{};
    std::vector<cplx> coeffs;
    Normalization normalization = Normalization::unnormalized;
    double truncation_error = 0.0;
    bool open_below = false;  // true series continues below the window
    bool open_above = false;
    int inexact_low = 0;  // edge coefficients that must not be compared
    int inexact_high = 0;

    long last_index() const noexcept { return first_index + static_cast<long>(coeffs.size()) - 1; }
    cplx at(long k) const noexcept {
        return (k < first_index || k > last_index()) ? cplx{} : coeffs[static_cast<size_t>(k - first_index)];
    }
    double max_abs() const noexcept;
};

// max over [k_lo, k_hi] of |f a_{k-1} + g a_k + h a_{k+1}| / (|f a_{k-1}| + |g a_k| + |h a_{k+1}|)
double recurrence_residual(const SeriesSolution& s, const HeunParams& p, long k_lo, long k_hi);

SeriesSolution forward_solution(const HeunParams& p, double tol, long length = 64);
SeriesSolution backward_solution(const HeunParams& p, double tol, long length = 64);

struct EntireSolution {
    SeriesSolution series;
    cplx xi;
};
// Taylor solution of L E = xi (b = 0)
EntireSolution entire_solution(cplx n, cplx lambda, cplx mu, double tol, long length = 64);

struct DVector {
    cplx d0, d1;
    // magnitude of the recurrence terms of the half-series that produced d0, d1
    double m0 = 0.0, m1 = 0.0;
};
struct DVectors {
    DVector plus, minus;
};
DVectors d_vectors(const HeunParams& p, double tol);
// d0+ d1- - d0- d1+, scale m0+ m1- + m0- m1+ (falls back to |d| when the magnitudes are unset)
EquationValue pasting_determinant(const DVectors& d);

// coefficients of z^{-b} L(z^b series) with b = p.b; the input exponent must differ from p.b by an integer
SeriesSolution apply_heun_operator(const SeriesSolution& s, const HeunParams& p);
// max over [k_lo, k_hi] of |(L a)_k|, relative to the largest term magnitude in the window
double operator_residual(const SeriesSolution& s, const HeunParams& p, long k_lo, long k_hi);

// E -> 2 omega z^{-l-1} (E'(1/z) - mu E(1/z)); requires lambda + mu^2 = 1/(4 omega^2)
SeriesSolution sharp_involution(const SeriesSolution& s, const HeunParams& p, cplx omega);
// E -> e^{mu (z + 1/z)} E(-1/z); maps solutions for n onto solutions for 2 - n
SeriesSolution diamond_transform(const SeriesSolution& s, cplx mu);

std::optional<SeriesSolution> assemble_eigenfunction(const HeunParams& p, double tol, long length = 64);
// b = 0, n not an integer, at a root of the resonant pasting equation
SeriesSolution assemble_resonant_eigenfunction(cplx n, cplx lambda, cplx mu, double tol, long length = 64);

// E(z) and E'(z) with the principal branch of z^exponent
std::pair<cplx, cplx> evaluate(const SeriesSolution& s, cplx z);

}  // namespace hplk
