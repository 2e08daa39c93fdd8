#include <cmath>
#include <random>

#include "doctest.h"
#include "hplk/error.hpp"
#include "hplk/spectral.hpp"
#include "hplk/torus.hpp"

using namespace hplk;

namespace {

// distance between two unordered eigenvalue pairs
double pair_distance(const std::array<cplx, 2>& a, cplx x, cplx y) {
    return std::min(std::max(std::abs(a[0] - x), std::abs(a[1] - y)), std::max(std::abs(a[0] - y), std::abs(a[1] - x)));
}

double dist_to_identity(const Complex2x2& m) { return (m - Complex2x2::identity()).max_entry(); }

}  // namespace

TEST_CASE("flow examples") {
    CHECK(flow_phi(PhysParams{1.0, 0.0, 0.0}, 0.0, 20.0, 1e-10) == 0.0);
    // rest point arcsin(B omega) for |l omega| <= 1; here omega = 1
    const double phi = flow_phi(PhysParams{1.0, 0.5, 0.0}, 0.3, 2.0 * M_PI * 50.0, 1e-10);
    CHECK(std::abs(phi - std::asin(0.5)) < 1e-6);
    const PhysParams p{1.0, 0.5, 1.3};
    const double a = flow_phi(p, 0.2, 20.0 * M_PI, 1e-9), b = flow_phi(p, 0.2, 20.0 * M_PI, 5e-10);
    CHECK(std::abs(a - b) < 10 * 1e-9);
    CHECK_THROWS_AS(flow_phi(p, 0.0, 1.0, 1e-13), std::invalid_argument);
}

TEST_CASE("rotation number examples") {
    const auto r0 = rotation_number(PhysParams{1.0, 0.5, 0.0}, 1e-8);
    CHECK(std::abs(r0.rho) <= 1e-8);
    CHECK(r0.locked);
    const auto r1 = rotation_number(PhysParams{1.0, std::sqrt(2.0), 0.0}, 1e-8);
    CHECK(std::abs(r1.rho - 1.0) < 1e-6);
    CHECK(r1.uncertainty > 0.0);

    // closed form at A = 0: sqrt(B^2 - omega^2)/omega... in turns per period with l = B/omega
    for (double B : {1.3, 2.2, 3.7}) {
        const double omega = 1.3;
        const double expect = std::sqrt(B * B / (omega * omega) - 1.0 / (omega * omega));
        const auto r = rotation_number(PhysParams{omega, B, 0.0}, 1e-8);
        CHECK(std::abs(r.rho - expect) < 1e-6);
    }

    const auto s = rotation_number(PhysParams{1.0, 0.8, 1.1}, 1e-8);
    const auto s1 = rotation_number(PhysParams{1.0, 0.8, -1.1}, 1e-8);
    const auto s2 = rotation_number(PhysParams{1.0, -0.8, 1.1}, 1e-8);
    CHECK(std::abs(s.rho - s1.rho) < 1e-6);
    CHECK(std::abs(s.rho + s2.rho) < 1e-6);
    CHECK_THROWS_AS(rotation_number(PhysParams{1.0, 0.8, 1.1}, 1e-12), std::invalid_argument);
}

TEST_CASE("Poincare map") {
    // contraction toward 0 at A = B = 0
    for (const auto& [x0, x1] : poincare_samples(PhysParams{1.0, 0.0, 0.0}, 8, 1e-10))
        if (std::abs(x0) < M_PI - 1e-9) CHECK(std::abs(x1) < std::abs(x0) + 1e-12);
    // hyperbolic fixed points inside a lock area: F(x) - x changes sign
    const auto s = poincare_samples(PhysParams{1.0, 0.3, 0.5}, 24, 1e-10);
    bool neg = false, pos = false;
    for (const auto& [x0, x1] : s) (x1 - x0 < 0.0 ? neg : pos) = true;
    CHECK((neg && pos));
    CHECK(identity_residual(s) > 1e-3);
    CHECK_THROWS_AS(poincare_samples(PhysParams{1.0, 0.3, 0.5}, 2, 1e-10), std::invalid_argument);
}

TEST_CASE("monodromy determinant") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> W(0.3, 2.0), Bd(0.0, 4.0), Ad(0.0, 5.0);
    for (int i = 0; i < 10; ++i) {
        const PhysParams p{W(rng), Bd(rng), Ad(rng)};
        const MonodromyMatrix m = monodromy_numeric(p, 1e-10);
        CHECK(m.det_error < 1e-6);
        const cplx expect = std::exp(cplx(0.0, -2.0 * M_PI * (p.l() + 1.0)));
        CHECK(std::abs(m.m.det() - expect) == doctest::Approx(m.det_error));
    }
}

TEST_CASE("eigenvalues and rotation number") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> W(0.5, 2.0), Bd(0.0, 4.0), Ad(0.0, 4.0);
    int checked = 0;
    while (checked < 6) {
        const PhysParams p{W(rng), Bd(rng), Ad(rng)};
        const auto r = rotation_number(p, 1e-8);
        if (r.locked) continue;
        const auto ev = monodromy_numeric(p, 1e-11).eigenvalues();
        const double l = p.l();
        const cplx x = std::exp(cplx(0.0, M_PI * (r.rho - l))), y = std::exp(cplx(0.0, -M_PI * (r.rho + l)));
        CHECK(pair_distance(ev, x, y) < 1e-3);
        ++checked;
    }
}

TEST_CASE("adjacencies are roots of zeta") {
    const double omega = 2.0;
    const auto roots = scan_roots([&](double mu) { return zeta(0.0, omega, mu); }, 0.05, 2.5, 245, 1e-10);
    REQUIRE(!roots.empty());
    for (const Root& r : roots) {
        const PhysParams p{omega, 0.0, 2.0 * omega * r.x};
        CHECK(identity_residual(poincare_samples(p, 16, 1e-11)) < 1e-4);
        CHECK(dist_to_identity(monodromy_numeric(p, 1e-11).m) < 1e-4);
    }
}

TEST_CASE("polynomial-solution points are Jordan cells on a boundary") {
    const double omega = 0.5;
    const auto mus = polynomial_mu_roots(2, omega);
    REQUIRE(mus.size() == 1);
    const PhysParams p{omega, 2.0 * omega, 2.0 * omega * mus[0]};
    const auto r = rotation_number(p, 1e-8);
    CHECK(std::abs(r.rho - std::round(r.rho)) < 1e-6);
    const long rr = std::lround(r.rho);
    CHECK((rr == 0 || rr == 2));
    const MonodromyMatrix m = monodromy_numeric(p, 1e-11);
    CHECK(std::abs(m.m.trace() - 2.0) < 1e-4);
    CHECK(dist_to_identity(m.m) > 1e-3);
    // boundary: the lock state differs on the two sides in B
    const bool lo = lock_test(PhysParams{omega, p.B - 1e-3, p.A}, static_cast<int>(rr), 1e-11).locked;
    const bool hi = lock_test(PhysParams{omega, p.B + 1e-3, p.A}, static_cast<int>(rr), 1e-11).locked;
    CHECK(lo != hi);
}

TEST_CASE("boundary bisection") {
    const double right = boundary_bisect(PhysParams{1.0, 0.0, 0.0}, 0, Side::right, 1e-8);
    const double left = boundary_bisect(PhysParams{1.0, 0.0, 0.0}, 0, Side::left, 1e-8);
    CHECK(std::abs(right - 1.0) < 1e-6);
    CHECK(std::abs(left + 1.0) < 1e-6);

    const auto seed = find_locked_B(1.0, 3.0, 1, 0.0, 3.0, 0.05);
    REQUIRE(seed.has_value());
    const PhysParams p{1.0, *seed, 3.0};
    const double a = boundary_bisect(p, 1, Side::left, 1e-7), b = boundary_bisect(p, 1, Side::right, 1e-7);
    CHECK(b > a);
    for (double B : {a, b}) {
        double best = INFINITY;
        for (const char* tag : {"e0", "e1"})
            for (Sign s : {Sign::plus, Sign::minus}) {
                try {
                    best = std::min(best, curve_equation(tag, s, 1.0)(B, 3.0).normalized());
                } catch (const NumericError&) {
                }
            }
        CHECK(best < 1e-5);
    }
    CHECK_THROWS_AS(boundary_bisect(PhysParams{1.0, 3.0, 0.0}, 0, Side::right, 1e-8), NumericError);
}

TEST_CASE("eigenfunction multiplier matches numerical monodromy") {
    // a point on the rho = 0.5 level curve, then the eigenfunction with multiplier e^{2 pi i b}
    const double omega = 2.0, A = 1.0, r = 0.5;
    const auto eq = curve_equation("pasterho", Sign::plus, omega, r);
    const auto roots = scan_roots([&](double B) { return eq(B, A); }, 0.1, 3.0, 290, 1e-10);
    REQUIRE(!roots.empty());
    const double B = roots.front().x;
    const PhysParams p{omega, B, A};
    const cplx b = (r - p.l()) / 2.0;
    const auto e = assemble_eigenfunction(p.heun(b), 1e-8);
    REQUIRE(e.has_value());
    const auto [E, dE] = evaluate(*e, 1.0);
    const auto w = heun_to_linear(p, E, dE);
    const MonodromyMatrix m = monodromy_numeric(p, 1e-11);
    const cplx mult = std::exp(cplx(0.0, 2.0 * M_PI) * b);
    const cplx w0 = m.m.m11 * w[0] + m.m.m12 * w[1], w1 = m.m.m21 * w[0] + m.m.m22 * w[1];
    const double scale = std::max(std::abs(w[0]), std::abs(w[1]));
    CHECK(std::abs(w0 - mult * w[0]) < 1e-6 * scale);
    CHECK(std::abs(w1 - mult * w[1]) < 1e-6 * scale);
    // and rho = 0.5 at that B
    CHECK(std::abs(rotation_number(p, 1e-8).rho - r) < 1e-4);
}

TEST_CASE("portrait scan") {
    const Portrait pt = phase_lock_scan(1.0, GridAxis{-3.0, 3.0, 25}, GridAxis{0.0, 3.0, 7}, 1e-6, 1);
    CHECK(pt.cells.size() == 25u * 7u);
    CHECK(pt.not_converged_fraction() == 0.0);
    for (int ia = 0; ia < pt.a_axis.n; ++ia)
        for (int ib = 0; ib < pt.b_axis.n; ++ib) {
            const auto& c = pt.at(ia, ib);
            const auto& m = pt.at(ia, pt.b_axis.n - 1 - ib);
            CHECK(std::isfinite(c.rho));
            CHECK(std::abs(c.rho + m.rho) <= 3.0 * (c.uncertainty + m.uncertainty) + 1e-12);
            if (ib > 0) CHECK(c.rho >= pt.at(ia, ib - 1).rho - 3.0 * c.uncertainty);
        }
    CHECK(!pt.boundary_cells().empty());
    // threads do not change the result
    const Portrait p2 = phase_lock_scan(1.0, GridAxis{-3.0, 3.0, 25}, GridAxis{0.0, 3.0, 7}, 1e-6, 3);
    for (size_t i = 0; i < pt.cells.size(); ++i) CHECK(pt.cells[i].rho == p2.cells[i].rho);
}

TEST_CASE("boundary eigenfunctions are sharp-invariant or anti-invariant") {
    const double omega = 1.0, A = 3.0;
    const auto seed = find_locked_B(omega, A, 1, 0.0, 3.0, 0.05);
    REQUIRE(seed.has_value());
    const double edge = boundary_bisect(PhysParams{omega, *seed, A}, 1, Side::right, 1e-7);
    // refine the edge on whichever boundary equation vanishes there
    double B = edge, best = INFINITY;
    for (const char* tag : {"e0", "e1"})
        for (Sign s : {Sign::plus, Sign::minus}) {
            const auto eq = curve_equation(tag, s, omega);
            try {
                const Root r = find_root_1d([&](double x) { return eq(x, A); }, edge - 1e-4, edge + 1e-4, 1e-9);
                if (r.residual < best) best = r.residual, B = r.x;
            } catch (const NumericError&) {
            }
        }
    REQUIRE(best < 1e-9);
    CHECK(std::abs(B - edge) < 1e-4);

    const PhysParams p{omega, B, A};
    const cplx b = (1.0 - p.l()) / 2.0;
    const HeunParams hp = p.heun(b);
    const auto e = assemble_eigenfunction(hp, 1e-6);
    REQUIRE(e.has_value());
    const SeriesSolution s = sharp_involution(*e, hp, omega);
    // exponent -l - b = b - 1: coefficient j of the image pairs with j - 1 of E
    REQUIRE(std::abs(s.exponent - (b - 1.0)) < 1e-12);
    long kmax = 0;
    for (long k = -20; k <= 20; ++k)
        if (std::abs(e->at(k)) > std::abs(e->at(kmax))) kmax = k;
    const cplx c = s.at(kmax + 1) / e->at(kmax);
    CHECK(std::abs(std::abs(c.real()) - 1.0) < 1e-6);
    CHECK(std::abs(c.imag()) < 1e-6);
    for (long k = -20; k <= 20; ++k) CHECK(std::abs(s.at(k + 1) - c * e->at(k)) < 1e-6 * std::abs(e->at(kmax)));
}

TEST_CASE("traced level curve matches rho = 1/2 bisection") {
    const double omega = 2.0, r = 0.5;
    const CurveEquation eq = curve_equation("pasterho", Sign::plus, omega, r);
    const auto seeds = scan_roots([&](double B) { return eq(B, 0.5); }, 1.2, 1.6, 8, 1e-10);
    REQUIRE(seeds.size() == 1);
    TraceOptions opt;
    opt.allow_partial = true;
    const Curve c = trace_curve(eq, "pasterho", Sign::plus, seeds[0].x, 0.5, 3.0, 0.125, 1e-10, opt);
    REQUIRE(c.points.size() >= 10);
    // F^2(x) - x - 2 pi changes sign exactly where rho crosses 1/2
    auto side = [&](double B, double A) {
        const LockTest lt = lock_test(PhysParams{omega, B, A}, 1, 1e-11, 24, 2);
        return lt.locked ? 0 : (lt.g_max < 0.0 ? -1 : 1);
    };
    int checked = 0;
    for (size_t i = 0; i < c.points.size(); i += 4) {
        const CurvePoint& q = c.points[i];
        double lo = q.B - 0.01, hi = q.B + 0.01;
        REQUIRE(side(lo, q.A) < 0);
        REQUIRE(side(hi, q.A) > 0);
        while (hi - lo > 1e-7) {
            const double m = 0.5 * (lo + hi);
            const int s = side(m, q.A);
            if (s == 0) lo = hi = m;
            else (s < 0 ? lo : hi) = m;
        }
        CHECK(std::abs(0.5 * (lo + hi) - q.B) < 1e-4);
        ++checked;
    }
    CHECK(checked >= 3);
}

TEST_CASE("rotation number near a low-order resonance reports an honest uncertainty") {
    // rho close to 7/3: successive Birkhoff levels agree long before the estimate is right
    const double B = -6.0 + 12.0 * 26.0 / 29.0;
    const auto ref = rotation_number(PhysParams{2.0, -B, 7.5}, 1e-8);
    RotationOptions o;
    o.throw_on_failure = false;
    const auto e = rotation_number(PhysParams{2.0, B, 7.5}, 1e-6, o);
    CHECK(std::abs(e.rho + ref.rho) <= 3.0 * std::max(e.uncertainty, ref.uncertainty) + 1e-9);
}

TEST_CASE("rotation number within the circle-map bound of a long direct lift average") {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> W(0.4, 2.0), Bd(-4.0, 4.0), Ad(0.0, 6.0);
    const long K = 1024;
    for (int i = 0; i < 12; ++i) {
        const PhysParams p{W(rng), Bd(rng), Ad(rng)};
        const double direct = flow_phi(p, 0.3, 2.0 * M_PI * K, 1e-10) - 0.3;
        const auto e = rotation_number(p, 1e-8);
        CHECK(std::abs(e.rho - direct / (2.0 * M_PI * K)) < 1.0 / K);
        CHECK(e.uncertainty <= 1e-8);
    }
}

TEST_CASE("locked areas of the omega = 2 portrait sit along B = r omega") {
    const double omega = 2.0;
    const Portrait pt = phase_lock_scan(omega, GridAxis{-6.0, 6.0, 120}, GridAxis{0.0, 10.0, 100}, 1e-6, 1);
    for (int r = -2; r <= 2; ++r) {
        double sum = 0.0;
        int n = 0;
        for (int ia = 0; ia < 100; ++ia)
            for (int ib = 0; ib < 120; ++ib)
                if ((pt.flag(ia, ib) & kLocked) && std::lround(pt.at(ia, ib).rho) == r) sum += pt.b_axis.at(ib), ++n;
        REQUIRE(n > 100);
        CHECK(std::abs(sum / n - r * omega) < 0.15);
    }
    CHECK(pt.not_converged_fraction() == 0.0);
}

TEST_CASE("predicted eigenvalue pairs") {
    const PhysParams p{1.0, 2.0, 1.0};
    const RotationEstimate e = rotation_number(p, 1e-8);
    REQUIRE_FALSE(e.locked);
    const EigenvaluePrediction pred = predicted_eigenvalues(p, e);
    CHECK_FALSE(pred.alternate.has_value());
    CHECK(pair_distance(monodromy_numeric(p, 1e-11).eigenvalues(), pred.pair) < 1e-6);

    RotationEstimate near_integer;
    near_integer.rho = 1.0 + 1e-9;
    near_integer.uncertainty = 1e-8;
    const EigenvaluePrediction amb = predicted_eigenvalues(p, near_integer);
    REQUIRE(amb.alternate.has_value());
    CHECK(std::abs((*amb.alternate)[0] + amb.pair[0]) < 1e-15);
    CHECK(pair_distance(amb.pair, {amb.pair[1], amb.pair[0]}) == 0.0);
}
