#include "hplk/heun.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hplk/bessel.hpp"
#include "hplk/error.hpp"

namespace hplk {

double integer_distance(cplx z) noexcept {
    return std::hypot(z.real() - std::round(z.real()), z.imag());
}

long nearest_integer(cplx z) noexcept { return std::lround(z.real()); }

RecurrenceTriple heun_triple(const HeunParams& p, long k) noexcept {
    const cplx kb = static_cast<double>(k) + p.b;
    return {-p.mu * (kb + p.n - 1.0), kb * (kb + p.n - 1.0) + p.lambda, p.mu * (kb + 1.0)};
}

RecurrenceCoeffs heun_recurrence(const HeunParams& p) {
    return [p](long k) { return heun_triple(p, k); };
}

RecurrenceCoeffs reversed(RecurrenceCoeffs c) {
    return [c = std::move(c)](long m) {
        const RecurrenceTriple t = c(-m);
        return RecurrenceTriple{t.h, t.g, t.f};
    };
}

Complex2x2 forward_matrix(const HeunParams& p, long k) noexcept {
    const cplx kb = static_cast<double>(k) + p.b;
    const cplx d = kb * (kb + p.n - 1.0);
    return {1.0 + p.lambda / d, p.mu * p.mu / d, 1.0, 0.0};
}

Complex2x2 backward_matrix(const HeunParams& p, long m) noexcept {
    const cplx bm = p.b - static_cast<double>(m);
    const cplx e = (bm + 1.0) * (bm + p.n - 2.0);
    return {1.0 + (p.lambda - p.n + 2.0) / e, p.mu * p.mu * (bm + p.n - 1.0) / (e * (bm + p.n - 3.0)), 1.0,
            0.0};
}

MatrixSequence forward_family(const HeunParams& p) {
    return [p](long k) { return forward_matrix(p, k); };
}

MatrixSequence backward_family(const HeunParams& p) {
    return [p](long m) { return backward_matrix(p, m); };
}

ProductChain product_chain(const MatrixSequence& seq, long first, long last, double tol) {
    if (last < first) throw std::invalid_argument("product_chain: last < first");
    const TruncatedProduct top = converging_product(seq, last, tol);
    ProductChain ch;
    ch.first = first;
    ch.r.resize(static_cast<size_t>(last - first + 1));
    ch.r.back() = top.value;
    for (long k = last - 1; k >= first; --k) {
        const Complex2x2 m = seq(k);
        if (!m.finite())
            throw NumericError(ErrorCode::ResonanceDenominator, "factor " + std::to_string(k) + " is singular");
        ch.r[static_cast<size_t>(k - first)] = m * ch.r[static_cast<size_t>(k - first + 1)];
    }
    ch.tail_bound = top.tail_bound / std::max(1.0, top.value.max_entry());
    return ch;
}

const char* to_string(Direction d) noexcept {
    switch (d) {
        case Direction::forward: return "forward";
        case Direction::backward: return "backward";
        case Direction::two_sided: return "two_sided";
    }
    return "?";
}

const char* to_string(Normalization n) noexcept {
    switch (n) {
        case Normalization::product_entry: return "product_entry";
        case Normalization::entire: return "entire";
        case Normalization::d_matched: return "d_matched";
        case Normalization::resonant_matched: return "resonant_matched";
        case Normalization::sharp_image: return "sharp_image";
        case Normalization::diamond_image: return "diamond_image";
        case Normalization::polynomial: return "polynomial";
        case Normalization::operator_image: return "operator_image";
        case Normalization::unnormalized: return "unnormalized";
    }
    return "?";
}

double SeriesSolution::max_abs() const noexcept {
    double m = 0.0;
    for (const cplx& a : coeffs) m = std::max(m, std::abs(a));
    return m;
}

namespace {

void require_mu(cplx mu) {
    if (mu == cplx{}) throw NumericError(ErrorCode::ZeroMu, "mu must be nonzero");
}

// integer members of {-1-b, 1-b-n}
std::vector<long> resonant_indices(const HeunParams& p) {
    std::vector<long> out;
    if (p.b_resonant()) out.push_back(-1 - nearest_integer(p.b));
    if (p.bn_resonant()) out.push_back(1 - nearest_integer(p.b + p.n));
    return out;
}

long shift_between(cplx from, cplx to) {
    const cplx d = from - to;
    if (integer_distance(d) > kResonanceTol)
        throw std::invalid_argument("series exponent differs from b by a non-integer");
    return nearest_integer(d);
}

}  // namespace

double recurrence_residual(const SeriesSolution& s, const HeunParams& p, long k_lo, long k_hi) {
    const long shift = shift_between(s.exponent, p.b);
    double worst = 0.0;
    for (long k = k_lo; k <= k_hi; ++k) {
        const RecurrenceTriple t = heun_triple(p, k);
        const cplx am = s.at(k - 1 - shift), a0 = s.at(k - shift), ap = s.at(k + 1 - shift);
        const double scale = std::abs(t.f * am) + std::abs(t.g * a0) + std::abs(t.h * ap);
        if (scale == 0.0) continue;
        worst = std::max(worst, std::abs(t.f * am + t.g * a0 + t.h * ap) / scale);
    }
    return worst;
}

SeriesSolution forward_solution(const HeunParams& p, double tol, long length) {
    require_mu(p.mu);
    if (length < 2) throw std::invalid_argument("forward_solution: length < 2");
    SeriesSolution s;
    s.direction = Direction::forward;
    s.exponent = p.b;
    s.normalization = Normalization::product_entry;
    s.open_above = true;
    s.coeffs.resize(static_cast<size_t>(length + 1));
    const MatrixSequence fam = forward_family(p);

    const std::vector<long> res = resonant_indices(p);
    if (res.empty()) {
        const ProductChain ch = product_chain(fam, 0, length, tol);
        cplx factor = 1.0 / p.b;  // mu^k / (b)_{k+1}
        for (long k = 0; k <= length; ++k) {
            if (k > 0) factor *= p.mu / (p.b + static_cast<double>(k));
            s.coeffs[static_cast<size_t>(k)] = factor * ch.at(k).m21;
        }
        s.anchor = s.first_index = 0;
        s.truncation_error = ch.tail_bound;
        return s;
    }

    const long k0 = *std::max_element(res.begin(), res.end());
    const cplx denom = p.mu * (static_cast<double>(k0) + p.b + p.n);
    if (std::abs(denom) < kResonanceTol * std::abs(p.mu))
        throw NumericError(ErrorCode::ResonanceDenominator, "vanishing denominator at k0");
    const ProductChain ch = product_chain(fam, k0 + 2, k0 + length, tol);
    cplx factor = 1.0;  // mu^{k-k0-1} / (b)_{k0+2,k+1}
    s.coeffs[1] = ch.at(k0 + 2).m11;
    for (long k = k0 + 2; k <= k0 + length; ++k) {
        factor *= p.mu / (p.b + static_cast<double>(k));
        s.coeffs[static_cast<size_t>(k - k0)] = factor * ch.at(k).m21;
    }
    const cplx kb = static_cast<double>(k0) + p.b;
    s.coeffs[0] = (((kb + 1.0) * (kb + p.n) + p.lambda) * s.coeffs[1] + p.mu * (kb + 2.0) * s.coeffs[2]) / denom;
    s.anchor = s.first_index = k0;
    s.truncation_error = ch.tail_bound;
    return s;
}

SeriesSolution backward_solution(const HeunParams& p, double tol, long length) {
    require_mu(p.mu);
    if (length < 2) throw std::invalid_argument("backward_solution: length < 2");
    SeriesSolution s;
    s.direction = Direction::backward;
    s.exponent = p.b;
    s.normalization = Normalization::product_entry;
    s.open_below = true;
    s.coeffs.resize(static_cast<size_t>(length + 1));
    const MatrixSequence fam = backward_family(p);
    const cplx c = 2.0 - p.n - p.b;
    // a_{k0-m'} stored at index length - m'
    auto put = [&](long m, long m0, cplx v) { s.coeffs[static_cast<size_t>(length - (m - m0))] = v; };

    const std::vector<long> res = resonant_indices(p);
    if (res.empty()) {
        const ProductChain ch = product_chain(fam, 0, length, tol);
        cplx factor = 1.0 / c;  // mu^m / (2-n-b)_{m+1}
        for (long m = 0; m <= length; ++m) {
            if (m > 0) factor *= p.mu / (c + static_cast<double>(m));
            put(m, 0, factor * ch.at(m).m21);
        }
        s.anchor = 0;
        s.first_index = -length;
        s.truncation_error = ch.tail_bound;
        return s;
    }

    const long k0 = *std::min_element(res.begin(), res.end());
    const long m0 = -k0;
    const ProductChain ch = product_chain(fam, m0 + 1, m0 + length, tol);
    cplx factor = std::pow(p.mu, static_cast<double>(m0)) / (c + static_cast<double>(m0));
    put(m0, m0, factor * ch.at(m0 + 1).m11);
    for (long m = m0 + 1; m <= m0 + length; ++m) {
        factor *= p.mu / (c + static_cast<double>(m));
        put(m, m0, factor * ch.at(m).m21);
    }
    s.anchor = k0;
    s.first_index = k0 - length;
    s.truncation_error = ch.tail_bound;
    return s;
}

EntireSolution entire_solution(cplx n, cplx lambda, cplx mu, double tol, long length) {
    require_mu(mu);
    if (integer_distance(n) < kResonanceTol && nearest_integer(n) <= 0)
        throw NumericError(ErrorCode::ForbiddenN, "n must not be a non-positive integer");
    if (length < 2) throw std::invalid_argument("entire_solution: length < 2");
    const HeunParams p{n, lambda, mu, 0.0};
    const ProductChain ch = product_chain(forward_family(p), 1, length, tol);
    SeriesSolution s;
    s.direction = Direction::forward;
    s.exponent = 0.0;
    s.normalization = Normalization::entire;
    s.open_above = true;
    s.coeffs.resize(static_cast<size_t>(length + 1));
    s.coeffs[0] = ch.at(1).m11;
    cplx factor = 1.0;  // mu^k / k!
    for (long k = 1; k <= length; ++k) {
        factor *= mu / static_cast<double>(k);
        s.coeffs[static_cast<size_t>(k)] = factor * ch.at(k).m21;
    }
    s.truncation_error = ch.tail_bound;
    const cplx xi = lambda * s.coeffs[0] + mu * s.coeffs[1];
    return {std::move(s), xi};
}

namespace {

// largest recurrence term |f_k a_{k-1}| + |g_k a_k| + |h_k a_{k+1}| over [lo, hi]
double term_scale(const SeriesSolution& s, const HeunParams& p, long lo, long hi) {
    double m = 0.0;
    for (long k = lo; k <= hi; ++k) {
        const RecurrenceTriple t = heun_triple(p, k);
        m = std::max(m, std::abs(t.f * s.at(k - 1)) + std::abs(t.g * s.at(k)) + std::abs(t.h * s.at(k + 1)));
    }
    return m;
}

// the d-vectors carry the term scale of their half-series: a d-vector that is small against it means the
// half-series alone nearly solves the equation
DVectors d_from(const SeriesSolution& f, const SeriesSolution& g, const HeunParams& p) {
    const cplx b = p.b, n = p.n, l = p.lambda, mu = p.mu;
    DVectors d;
    d.plus.d0 = mu * (b + 1.0) * f.at(1);
    d.plus.d1 = ((b + 1.0) * (b + n) + l) * f.at(1) + mu * (b + 2.0) * f.at(2);
    d.minus.d0 = (b * (b + n - 1.0) + l) * g.at(0) - mu * (b + n - 1.0) * g.at(-1);
    d.minus.d1 = -mu * (b + n) * g.at(0);
    const double sp = term_scale(f, p, 0, f.last_index() - 1);
    const double sm = term_scale(g, p, g.first_index + 1, 1);
    d.plus.m0 = d.plus.m1 = sp;
    d.minus.m0 = d.minus.m1 = sm;
    return d;
}

}  // namespace

DVectors d_vectors(const HeunParams& p, double tol) {
    if (p.resonant()) throw NumericError(ErrorCode::ResonantParameters, "b or b+n is an integer");
    return d_from(forward_solution(p, tol, 32), backward_solution(p, tol, 32), p);
}

EquationValue pasting_determinant(const DVectors& d) {
    const cplx t1 = d.plus.d0 * d.minus.d1, t2 = d.minus.d0 * d.plus.d1;
    auto mag = [](const cplx& v, double m) { return std::max(std::abs(v), m); };
    EquationValue v;
    v.value = t1 - t2;
    v.scale = mag(d.plus.d0, d.plus.m0) * mag(d.minus.d1, d.minus.m1) +
              mag(d.minus.d0, d.minus.m0) * mag(d.plus.d1, d.plus.m1);
    if (v.scale == 0.0) v.scale = 1.0;
    return v;
}

SeriesSolution apply_heun_operator(const SeriesSolution& s, const HeunParams& p) {
    const long shift = shift_between(s.exponent, p.b);
    SeriesSolution out;
    out.direction = s.direction;
    out.exponent = p.b;
    out.normalization = Normalization::operator_image;
    out.open_below = s.open_below;
    out.open_above = s.open_above;
    out.truncation_error = s.truncation_error;
    if (s.coeffs.empty()) {
        out.first_index = s.first_index + shift;
        return out;
    }
    const long lo = s.first_index + shift - 1, hi = s.last_index() + shift + 1;
    out.first_index = lo;
    out.anchor = s.anchor + shift;
    out.coeffs.resize(static_cast<size_t>(hi - lo + 1));
    for (long k = lo; k <= hi; ++k) {
        const RecurrenceTriple t = heun_triple(p, k);
        out.coeffs[static_cast<size_t>(k - lo)] =
            t.f * s.at(k - 1 - shift) + t.g * s.at(k - shift) + t.h * s.at(k + 1 - shift);
    }
    out.inexact_low = s.open_below ? 2 : 0;
    out.inexact_high = s.open_above ? 2 : 0;
    return out;
}

double operator_residual(const SeriesSolution& s, const HeunParams& p, long k_lo, long k_hi) {
    const long shift = shift_between(s.exponent, p.b);
    double worst = 0.0, scale = 0.0;
    for (long k = k_lo; k <= k_hi; ++k) {
        const RecurrenceTriple t = heun_triple(p, k);
        const cplx am = s.at(k - 1 - shift), a0 = s.at(k - shift), ap = s.at(k + 1 - shift);
        scale = std::max(scale, std::abs(t.f * am) + std::abs(t.g * a0) + std::abs(t.h * ap));
        worst = std::max(worst, std::abs(t.f * am + t.g * a0 + t.h * ap));
    }
    return scale == 0.0 ? 0.0 : worst / scale;
}

SeriesSolution sharp_involution(const SeriesSolution& s, const HeunParams& p, cplx omega) {
    const cplx target = 1.0 / (4.0 * omega * omega);
    if (std::abs(p.lambda + p.mu * p.mu - target) > 1e-12 * std::max(1.0, std::abs(target)))
        throw NumericError(ErrorCode::InconsistentOmega, "lambda + mu^2 != 1/(4 omega^2)");
    const cplx b = s.exponent;
    SeriesSolution out;
    out.exponent = -p.l() - b;
    out.normalization = Normalization::sharp_image;
    out.truncation_error = s.truncation_error;
    out.open_below = s.open_above;
    out.open_above = s.open_below;
    out.inexact_low = s.inexact_high;
    out.inexact_high = s.inexact_low;
    out.direction = s.direction == Direction::forward    ? Direction::backward
                    : s.direction == Direction::backward ? Direction::forward
                                                         : Direction::two_sided;
    const long lo = s.first_index, hi = s.last_index();
    const long jlo = -hi - (s.open_above ? 0 : 1);
    const long jhi = -lo - (s.open_below ? 1 : 0);
    out.first_index = jlo;
    out.anchor = -s.anchor;
    if (jhi < jlo) return out;
    out.coeffs.resize(static_cast<size_t>(jhi - jlo + 1));
    for (long j = jlo; j <= jhi; ++j) {
        out.coeffs[static_cast<size_t>(j - jlo)] =
            2.0 * omega * ((b - static_cast<double>(j)) * s.at(-j) - p.mu * s.at(-j - 1));
    }
    return out;
}

SeriesSolution diamond_transform(const SeriesSolution& s, cplx mu) {
    // I_k(2 mu) for |k| <= P, with P where the terms become negligible
    const cplx x = 2.0 * mu;
    std::vector<cplx> bes;
    const double i0 = std::abs(bessel_I(0, x));
    for (int k = 0;; ++k) {
        const cplx v = bessel_I(k, x);
        bes.push_back(v);
        if (k > 2 && std::abs(v) < 1e-18 * std::max(i0, 1e-300) && k > std::abs(x)) break;
        if (mu == cplx{}) break;
    }
    const long P = static_cast<long>(bes.size()) - 1;
    auto I = [&](long k) -> cplx {
        const long a = std::labs(k);
        return a > P ? cplx{} : bes[static_cast<size_t>(a)];
    };
    const cplx phase = std::exp(cplx{0.0, M_PI} * s.exponent);
    SeriesSolution out;
    out.exponent = -s.exponent;
    out.normalization = Normalization::diamond_image;
    out.direction = Direction::two_sided;
    out.truncation_error = s.truncation_error;
    out.open_below = s.open_above;
    out.open_above = s.open_below;
    out.inexact_low = s.open_above ? static_cast<int>(P) + 2 : 0;
    out.inexact_high = s.open_below ? static_cast<int>(P) + 2 : 0;
    const long lo = s.first_index, hi = s.last_index();
    const long jlo = -hi - P, jhi = -lo + P;
    out.first_index = jlo;
    out.anchor = -s.anchor;
    out.coeffs.resize(static_cast<size_t>(jhi - jlo + 1));
    for (long j = jlo; j <= jhi; ++j) {
        cplx acc{};
        for (long k = std::max(lo, -j - P); k <= std::min(hi, -j + P); ++k) {
            const cplx term = s.at(k) * I(j + k);
            acc += (k % 2 == 0) ? term : -term;
        }
        out.coeffs[static_cast<size_t>(j - jlo)] = phase * acc;
    }
    return out;
}

std::optional<SeriesSolution> assemble_eigenfunction(const HeunParams& p, double tol, long length) {
    if (p.resonant()) throw NumericError(ErrorCode::ResonantParameters, "b or b+n is an integer");
    const double ptol = std::min(tol * 1e-3, 1e-12);
    const SeriesSolution f = forward_solution(p, ptol, length);
    const SeriesSolution g = backward_solution(p, ptol, length);
    const cplx b = p.b;
    const DVectors d = d_from(f, g, p);
    if (pasting_determinant(d).normalized() >= tol) return std::nullopt;

    // alpha d_+ + beta d_- = 0, using the better-conditioned component
    cplx alpha, beta;
    if (std::abs(d.plus.d0) + std::abs(d.minus.d0) >= std::abs(d.plus.d1) + std::abs(d.minus.d1)) {
        alpha = d.minus.d0;
        beta = -d.plus.d0;
    } else {
        alpha = d.minus.d1;
        beta = -d.plus.d1;
    }
    SeriesSolution s;
    s.direction = Direction::two_sided;
    s.exponent = b;
    s.normalization = Normalization::d_matched;
    s.open_below = s.open_above = true;
    s.anchor = 0;
    s.first_index = -length;
    s.coeffs.resize(static_cast<size_t>(2 * length + 1));
    for (long k = -length; k <= length; ++k)
        s.coeffs[static_cast<size_t>(k + length)] = k >= 1 ? alpha * f.at(k) : beta * g.at(k);
    const double m = s.max_abs();
    if (m > 0.0)
        for (cplx& a : s.coeffs) a /= m;
    s.truncation_error = std::max(f.truncation_error, g.truncation_error);
    return s;
}

SeriesSolution assemble_resonant_eigenfunction(cplx n, cplx lambda, cplx mu, double tol, long length) {
    require_mu(mu);
    if (near_integer(n)) throw NumericError(ErrorCode::IntegerN, "n must not be an integer");
    const HeunParams p{n, lambda, mu, 0.0};
    const SeriesSolution g = backward_solution(p, tol, length);
    const EntireSolution e = entire_solution(n, lambda, mu, tol, length);
    if (std::abs(e.xi) <= 1e-14 * std::abs(lambda * e.series.at(0)) + 1e-300)
        throw NumericError(ErrorCode::ResonanceDenominator, "xi vanishes; entire part is already a solution");
    const cplx t = (n - 1.0) * mu * g.at(-1) / e.xi;
    SeriesSolution s;
    s.direction = Direction::two_sided;
    s.exponent = 0.0;
    s.normalization = Normalization::resonant_matched;
    s.open_below = s.open_above = true;
    s.first_index = g.first_index;
    s.anchor = 0;
    const long hi = e.series.last_index();
    s.coeffs.resize(static_cast<size_t>(hi - s.first_index + 1));
    for (long k = s.first_index; k <= hi; ++k)
        s.coeffs[static_cast<size_t>(k - s.first_index)] = k <= -1 ? g.at(k) : t * e.series.at(k);
    const double m = s.max_abs();
    if (m > 0.0)
        for (cplx& a : s.coeffs) a /= m;
    s.truncation_error = std::max(g.truncation_error, e.series.truncation_error);
    return s;
}

std::pair<cplx, cplx> evaluate(const SeriesSolution& s, cplx z) {
    if (z == cplx{}) throw std::invalid_argument("evaluate: z = 0");
    cplx e{}, de{};
    for (long k = s.first_index; k <= s.last_index(); ++k) {
        const cplx a = s.at(k);
        if (a == cplx{}) continue;
        const cplx ex = static_cast<double>(k) + s.exponent;
        const cplx zk = std::pow(z, static_cast<double>(k));
        e += a * zk;
        de += a * ex * zk / z;
    }
    const cplx zb = std::pow(z, s.exponent);
    return {zb * e, zb * de};
}

}  // namespace hplk
