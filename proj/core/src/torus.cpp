#include "hplk/torus.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "hplk/error.hpp"
#include "hplk/io.hpp"
#include "hplk/ode.hpp"

namespace hplk {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

struct PhiField {
    double inv_omega, l, two_mu;
    explicit PhiField(const PhysParams& p) : inv_omega(1.0 / p.omega), l(p.l()), two_mu(2.0 * p.mu()) {}
    Vec<double, 1> operator()(double t, const Vec<double, 1>& y) const {
        return {{-std::sin(y[0]) * inv_omega + l + two_mu * std::cos(t)}};
    }
};

void check_omega(const PhysParams& p) {
    if (!(p.omega > 0.0) || !std::isfinite(p.B) || !std::isfinite(p.A))
        throw std::invalid_argument("PhysParams: omega must be positive and B, A finite");
}

// period map with a carried step-size hint
struct PeriodMap {
    PhiField field;
    OdeTolerance tol;
    double h = 0.0;
    long periods = 0;

    PeriodMap(const PhysParams& p, double flow_tol) : field(p), tol{flow_tol, 0.0} {}
    double operator()(double x) {
        OdeStats st;
        const Vec<double, 1> y = dopri5(field, 0.0, kTwoPi, Vec<double, 1>{{x}}, tol, &st, h);
        if (st.last_h > 0.0) h = st.last_h;
        ++periods;
        return y[0];
    }
};

double default_flow_tol(double tol) { return std::clamp(tol * 1e-3, 1e-12, 1e-7); }


// fundamental matrix over one period of x' = [[1/(2 omega), -a], [a, -1/(2 omega)]] x, a = (l + 2 mu cos tau)/2;
// the angle psi of x obeys psi' = a - sin(2 psi)/(2 omega), so phi = 2 psi is the phase flow
struct PeriodMatrix {
    double m11, m12, m21, m22;
};

PeriodMatrix period_matrix(const PhysParams& p, double tol) {
    const double h = 0.5 / p.omega, l = p.l(), two_mu = 2.0 * p.mu();
    auto rhs = [=](double t, const Vec<double, 4>& y) {
        const double a = 0.5 * (l + two_mu * std::cos(t));
        return Vec<double, 4>{{h * y[0] - a * y[2], h * y[1] - a * y[3], a * y[0] - h * y[2], a * y[1] - h * y[3]}};
    };
    const Vec<double, 4> y = dopri5(rhs, 0.0, kTwoPi, Vec<double, 4>{{1.0, 0.0, 0.0, 1.0}}, OdeTolerance{tol, tol});
    return {y[0], y[1], y[2], y[3]};
}

// distance on the circle between the projective image of phi0 and phi1
double projective_gap(const PeriodMatrix& m, double phi0, double phi1) {
    const double c = std::cos(0.5 * phi0), s = std::sin(0.5 * phi0);
    const double img = 2.0 * std::atan2(m.m21 * c + m.m22 * s, m.m11 * c + m.m12 * s);
    const double d = std::remainder(img - phi1, kTwoPi);
    return std::abs(d);
}

struct MatrixRotation {
    double rho;
    bool locked;
};

// elliptic (tr^2 < 4, computed as (m11 - m22)^2 + 4 m12 m21 < 0 to stay accurate near +-I): rotation of lines by
// theta with the sense of m21, rho = theta/pi mod 1; otherwise a fixed line and integer rho
MatrixRotation matrix_rotation(const PeriodMatrix& m, double coarse) {
    const double d = m.m11 - m.m22;
    const double disc = d * d + 4.0 * m.m12 * m.m21;
    if (disc >= 0.0) return {std::round(coarse), true};
    const double sn = std::sqrt(-disc);
    const double f = std::atan2(m.m21 >= 0.0 ? sn : -sn, m.m11 + m.m22) / M_PI;
    return {f + std::round(coarse - f), false};
}

}  // namespace

double flow_phi(const PhysParams& p, double phi0, double tau_span, double tol) {
    check_omega(p);
    if (tol < 1e-12 || tol > 1e-6) throw std::invalid_argument("flow_phi: tol outside [1e-12, 1e-6]");
    const Vec<double, 1> y = dopri5(PhiField(p), 0.0, tau_span, Vec<double, 1>{{phi0}}, OdeTolerance{tol, 0.0});
    return y[0];
}

LockTest lock_test(const PhysParams& p, int r, double flow_tol, int samples, int iterates) {
    check_omega(p);
    if (samples < 3) throw std::invalid_argument("lock_test: samples < 3");
    if (iterates < 1) throw std::invalid_argument("lock_test: iterates < 1");
    PeriodMap F(p, flow_tol);
    const double shift = kTwoPi * r;
    auto G = [&](double x) {
        double y = x;
        for (int i = 0; i < iterates; ++i) y = F(y);
        return y - x - shift;
    };
    std::vector<double> xs(samples), gs(samples);
    for (int i = 0; i < samples; ++i) {
        xs[i] = -M_PI + kTwoPi * i / samples;
        gs[i] = G(xs[i]);
    }
    LockTest out;
    const auto [imin, imax] = std::minmax_element(gs.begin(), gs.end());
    out.g_min = *imin;
    out.g_max = *imax;
    const double dx = kTwoPi / samples;
    if (out.g_min > 0.0) {
        const double x0 = xs[static_cast<size_t>(imin - gs.begin())];
        boost::uintmax_t it = 60;
        const auto res = boost::math::tools::brent_find_minima(G, x0 - dx, x0 + dx, 30, it);
        out.g_min = std::min(out.g_min, res.second);
    } else if (out.g_max < 0.0) {
        const double x0 = xs[static_cast<size_t>(imax - gs.begin())];
        boost::uintmax_t it = 60;
        const auto res =
            boost::math::tools::brent_find_minima([&](double x) { return -G(x); }, x0 - dx, x0 + dx, 30, it);
        out.g_max = std::max(out.g_max, -res.second);
    }
    out.locked = out.g_min <= 0.0 && out.g_max >= 0.0;
    out.periods_used = F.periods;
    return out;
}

RotationEstimate rotation_number(const PhysParams& p, double tol, const RotationOptions& opt) {
    check_omega(p);
    if (!(tol >= 1e-10)) throw std::invalid_argument("rotation_number: tol must be >= 1e-10");
    if (opt.coarse_periods < 3) throw std::invalid_argument("rotation_number: coarse_periods < 3");
    const double ftol = opt.flow_tol > 0.0 ? opt.flow_tol : default_flow_tol(tol);

    // (phi(2 pi K) - phi(0)) / (2 pi K) is within 1/K of rho; K = coarse_periods fixes the integer part
    PeriodMap F(p, ftol);
    const double first = F(0.0);
    double phi = first;
    for (int k = 1; k < opt.coarse_periods; ++k) phi = F(phi);
    const double coarse = phi / (kTwoPi * opt.coarse_periods);

    // the fractional part is the rotation angle of the period matrix, at two accuracies
    const PeriodMatrix Pa = period_matrix(p, 1e-11), Pb = period_matrix(p, 1e-13);
    if (projective_gap(Pb, 0.0, first) > 1e-6)
        throw NumericError(ErrorCode::NotConverged, "period matrix disagrees with the phase flow");
    const MatrixRotation ra = matrix_rotation(Pa, coarse), rb = matrix_rotation(Pb, coarse);

    RotationEstimate est;
    est.rho = rb.rho;
    est.locked = rb.locked;
    est.uncertainty = std::max(std::abs(ra.rho - rb.rho), 1e-15);
    est.periods_used = F.periods + 2;
    if (est.uncertainty > tol) {
        est.converged = false;
        if (opt.throw_on_failure)
            throw NumericError(ErrorCode::NotConverged, "rotation number uncertainty " + format_double(est.uncertainty));
    }
    return est;
}

EigenvaluePrediction predicted_eigenvalues(const PhysParams& p, const RotationEstimate& rho) {
    const double l = p.l();
    EigenvaluePrediction out;
    out.pair = {std::polar(1.0, M_PI * (rho.rho - l)), std::polar(1.0, -M_PI * (rho.rho + l))};
    if (std::abs(rho.rho - std::round(rho.rho)) < 10.0 * rho.uncertainty) out.alternate = {{-out.pair[0], -out.pair[1]}};
    return out;
}

double pair_distance(const std::array<cplx, 2>& a, const std::array<cplx, 2>& b) {
    const double same = std::max(std::abs(a[0] - b[0]), std::abs(a[1] - b[1]));
    const double swapped = std::max(std::abs(a[0] - b[1]), std::abs(a[1] - b[0]));
    return std::min(same, swapped);
}

std::vector<std::pair<double, double>> poincare_samples(const PhysParams& p, int nsamples, double tol) {
    check_omega(p);
    if (nsamples < 3) throw std::invalid_argument("poincare_samples: nsamples < 3");
    std::vector<std::pair<double, double>> out;
    out.reserve(static_cast<size_t>(nsamples));
    for (int i = 0; i < nsamples; ++i) {
        const double x = -M_PI + kTwoPi * i / nsamples;
        out.emplace_back(x, flow_phi(p, x, kTwoPi, tol));
    }
    return out;
}

double identity_residual(const std::vector<std::pair<double, double>>& samples) {
    if (samples.empty()) return 0.0;
    double mean = 0.0;
    for (const auto& [x, y] : samples) mean += y - x;
    mean /= static_cast<double>(samples.size());
    const double shift = kTwoPi * std::round(mean / kTwoPi);
    double worst = 0.0;
    for (const auto& [x, y] : samples) worst = std::max(worst, std::abs(y - x - shift));
    return worst;
}

std::array<cplx, 2> MonodromyMatrix::eigenvalues() const {
    const cplx half = 0.5 * m.trace();
    const cplx disc = std::sqrt(half * half - m.det());
    return {half + disc, half - disc};
}

MonodromyMatrix monodromy_numeric(const PhysParams& p, double tol) {
    check_omega(p);
    if (tol < 1e-12) throw std::invalid_argument("monodromy_numeric: tol must be >= 1e-12");
    const double half_inv_omega = 0.5 / p.omega, l = p.l(), two_mu = 2.0 * p.mu();
    const cplx I{0.0, 1.0};
    auto rhs = [&](double t, const Vec<cplx, 4>& y) {
        const cplx a = -I * (l + two_mu * std::cos(t));
        return Vec<cplx, 4>{{half_inv_omega * y[1], half_inv_omega * y[0] + a * y[1], half_inv_omega * y[3],
                             half_inv_omega * y[2] + a * y[3]}};
    };
    const Vec<cplx, 4> y0{{1.0, 0.0, 0.0, 1.0}};
    const Vec<cplx, 4> y = dopri5(rhs, 0.0, kTwoPi, y0, OdeTolerance{tol, tol});
    MonodromyMatrix out;
    out.m = Complex2x2{y[0], y[2], y[1], y[3]};
    out.det_error = std::abs(out.m.det() - std::exp(-kTwoPi * I * (l + 1.0)));
    return out;
}

std::array<cplx, 2> heun_to_linear(const PhysParams& p, cplx e, cplx de) {
    const double mu = p.mu();
    const double s = std::exp(-mu);
    const cplx v = s * e;
    const cplx dv = s * (de - mu * e);
    return {v, cplx{0.0, 2.0 * p.omega} * dv};
}

std::vector<std::pair<int, int>> Portrait::boundary_cells() const {
    std::vector<std::pair<int, int>> out;
    for (int ia = 0; ia < a_axis.n; ++ia)
        for (int ib = 0; ib < b_axis.n; ++ib)
            if (flag(ia, ib) & kBoundary) out.emplace_back(ia, ib);
    return out;
}

double Portrait::not_converged_fraction() const {
    if (flags.empty()) return 0.0;
    long c = 0;
    for (auto f : flags) c += (f & kNotConverged) ? 1 : 0;
    return static_cast<double>(c) / static_cast<double>(flags.size());
}

Portrait phase_lock_scan(double omega, GridAxis b, GridAxis a, double tol, int threads) {
    if (!(omega > 0.0)) throw std::invalid_argument("phase_lock_scan: omega must be positive");
    if (b.n < 1 || a.n < 1 || static_cast<long>(b.n) * a.n > 1'000'000)
        throw std::invalid_argument("phase_lock_scan: grid must have 1..1e6 cells");
    if (!(b.hi >= b.lo) || !(a.hi >= a.lo)) throw std::invalid_argument("phase_lock_scan: ranges must be increasing");
    Portrait P;
    P.b_axis = b;
    P.a_axis = a;
    P.omega = omega;
    P.tol = tol;
    const long ncell = static_cast<long>(b.n) * a.n;
    P.cells.resize(static_cast<size_t>(ncell));
    P.flags.assign(static_cast<size_t>(ncell), 0);

    RotationOptions opt;
    opt.throw_on_failure = false;
    std::atomic<long> next{0};
    auto worker = [&] {
        for (long c = next++; c < ncell; c = next++) {
            const int ia = static_cast<int>(c / b.n), ib = static_cast<int>(c % b.n);
            const RotationEstimate e = rotation_number(PhysParams{omega, b.at(ib), a.at(ia)}, tol, opt);
            P.cells[static_cast<size_t>(c)] = e;
            std::uint8_t f = 0;
            if (std::abs(e.rho - std::round(e.rho)) < 3.0 * e.uncertainty) f |= kLocked;
            if (!e.converged) f |= kNotConverged;
            P.flags[static_cast<size_t>(c)] = f;
        }
    };
    int nt = threads > 0 ? threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    nt = static_cast<int>(std::min<long>(nt, ncell));
    if (nt <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < nt; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    // boundary cells: a locked cell next to an unlocked one, or locked cells at different integers
    auto locked_at = [&](int ia, int ib) -> double {
        return (P.flag(ia, ib) & kLocked) ? std::round(P.at(ia, ib).rho) : NAN;
    };
    for (int ia = 0; ia < a.n; ++ia) {
        for (int ib = 0; ib < b.n; ++ib) {
            const double here = locked_at(ia, ib);
            const int nb[4][2] = {{ia - 1, ib}, {ia + 1, ib}, {ia, ib - 1}, {ia, ib + 1}};
            for (const auto& q : nb) {
                if (q[0] < 0 || q[0] >= a.n || q[1] < 0 || q[1] >= b.n) continue;
                const double there = locked_at(q[0], q[1]);
                const bool differ = std::isnan(here) != std::isnan(there) ||
                                    (!std::isnan(here) && !std::isnan(there) && here != there);
                if (differ) P.flags[static_cast<size_t>(ia) * b.n + ib] |= kBoundary;
            }
        }
    }
    return P;
}

double boundary_bisect(const PhysParams& p, int r, double B_in, double B_out, double tol) {
    check_omega(p);
    const double ftol = 1e-11;
    auto locked = [&](double B) { return lock_test(PhysParams{p.omega, B, p.A}, r, ftol).locked; };
    if (!locked(B_in) || locked(B_out))
        throw NumericError(ErrorCode::NoBracket, "boundary_bisect: B_in must be locked at r and B_out unlocked");
    while (std::abs(B_out - B_in) > tol) {
        const double m = 0.5 * (B_in + B_out);
        if (m == B_in || m == B_out) break;
        (locked(m) ? B_in : B_out) = m;
    }
    return 0.5 * (B_in + B_out);
}

double boundary_bisect(const PhysParams& p, int r, Side side, double tol) {
    check_omega(p);
    const double ftol = 1e-11;
    auto locked = [&](double B) { return lock_test(PhysParams{p.omega, B, p.A}, r, ftol).locked; };
    if (!locked(p.B)) throw NumericError(ErrorCode::NoBracket, "boundary_bisect: start point is not locked at r");
    const double dir = side == Side::right ? 1.0 : -1.0;
    double step = 0.02 * p.omega, B_in = p.B;
    const double limit = 10.0 * p.omega + 10.0;
    for (;;) {
        const double B_out = B_in + dir * step;
        if (!locked(B_out)) return boundary_bisect(p, r, B_in, B_out, tol);
        B_in = B_out;
        step *= 1.5;
        if (std::abs(B_in - p.B) > limit) throw NumericError(ErrorCode::NoBracket, "boundary_bisect: no edge found");
    }
}

std::optional<double> find_locked_B(double omega, double A, int r, double lo, double hi, double step) {
    if (!(step > 0.0) || hi < lo) throw std::invalid_argument("find_locked_B: bad range");
    const double c = std::clamp(r * omega, lo, hi);
    for (int i = 0;; ++i) {
        const double off = step * ((i + 1) / 2) * (i % 2 == 0 ? 1.0 : -1.0);
        const double B = c + off;
        if (B < lo - step && c + step * ((i + 2) / 2) > hi + step) break;
        if (B >= lo && B <= hi && lock_test(PhysParams{omega, B, A}, r, 1e-10).locked) return B;
        if (std::abs(off) > (hi - lo) + step) break;
    }
    return std::nullopt;
}

}  // namespace hplk
