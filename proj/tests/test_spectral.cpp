#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "hplk/bessel.hpp"
#include "hplk/error.hpp"
#include "hplk/spectral.hpp"
#include "hplk/torus.hpp"

using namespace hplk;

namespace {

// cofactor expansion along the first row
cplx dense_det(const std::vector<std::vector<cplx>>& a) {
    const size_t n = a.size();
    if (n == 1) return a[0][0];
    cplx acc{};
    for (size_t c = 0; c < n; ++c) {
        if (a[0][c] == cplx{}) continue;
        std::vector<std::vector<cplx>> m;
        for (size_t r = 1; r < n; ++r) {
            std::vector<cplx> row;
            for (size_t k = 0; k < n; ++k)
                if (k != c) row.push_back(a[r][k]);
            m.push_back(row);
        }
        acc += (c % 2 == 0 ? 1.0 : -1.0) * a[0][c] * dense_det(m);
    }
    return acc;
}

std::vector<std::vector<cplx>> dense_h(int l, cplx lambda, cplx mu) {
    std::vector<std::vector<cplx>> h(l, std::vector<cplx>(l));
    for (int j = 1; j <= l; ++j) {
        h[j - 1][j - 1] = static_cast<double>((1 - j) * (l - j + 1)) + lambda;
        if (j > 1) {
            h[j - 2][j - 1] = mu * static_cast<double>(j - 1);
            h[j - 1][j - 2] = mu * static_cast<double>(l - j + 1);
        }
    }
    return h;
}

std::vector<double> roots_of(const std::function<EquationValue(double)>& f, double lo, double hi, int n) {
    std::vector<double> out;
    for (const Root& r : scan_roots(f, lo, hi, n, 1e-9)) out.push_back(r.x);
    return out;
}

double nearest(const std::vector<double>& v, double x) {
    double d = INFINITY;
    for (double y : v) d = std::min(d, std::abs(x - y));
    return d;
}

}  // namespace

TEST_CASE("xi matches entire solution") {
    const EquationValue v = xi(0.7, 0.2, 0.3);
    CHECK(std::abs(v.value - entire_solution(1.7, 0.2, 0.3, 1e-12).xi) < 1e-12);

    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        const cplx l(0.1 + 2.0 * std::abs(U(rng)), 0.3 * U(rng));
        const cplx lam(3.0 * U(rng), U(rng)), mu(U(rng), U(rng));
        const cplx a = xi(l, lam, mu).value;
        const cplx b = entire_solution(l + 1.0, lam, mu, 1e-12).xi;
        CHECK(std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)));
    }
}

TEST_CASE("xi at the Bessel zero and symmetries") {
    const double x11 = bessel_j_zero(1, 1);
    CHECK(xi(1.0, 0.0, cplx(0.0, x11 / 2.0)).normalized() < 1e-8);
    CHECK(xi(1.0, 0.0, cplx(0.0, x11 / 2.0 + 0.01)).normalized() > 1e-4);

    const cplx l(0.6, 0.1), lam(0.3, 0.1), mu(0.4, -0.2);
    const cplx a = xi(l, lam, mu).value, b = xi(std::conj(l), std::conj(lam), std::conj(mu)).value;
    CHECK(std::abs(std::conj(a) - b) < 1e-14 * std::abs(a));
    CHECK_THROWS_AS(xi(-2.0, 0.1, 0.2), NumericError);
    CHECK_THROWS_AS(xi(0.5, 0.1, 0.0), NumericError);
}

TEST_CASE("zeta") {
    CHECK(zeta(0.0, 2.0, 0.5).value == xi(0.0, 1.0 / 16.0 - 0.25, 0.5).value);
    const auto f = [](double mu) { return zeta(0.0, 2.0, mu).value.real(); };
    bool change = false;
    for (double m = 0.05; m < 3.0 && !change; m += 0.05) change = f(m) * f(m + 0.05) < 0.0;
    CHECK(change);
    const double z0 = std::abs(xi(0.5, 1.0 / 16.0, 1e-6).value);
    CHECK(std::isfinite(z0));
    CHECK(std::abs(zeta(0.5, 2.0, 1e-6).value - xi(0.5, 1.0 / 16.0, 1e-6).value) < 1e-10);
}

TEST_CASE("tridiagonal determinant") {
    CHECK(tridiag_det(1, cplx(0.3, 0.2), 0.5) == cplx(0.3, 0.2));
    const cplx lam(0.3, 0.1), mu(0.7, 0.2);
    CHECK(std::abs(tridiag_det(2, lam, mu) - (lam * (lam - 1.0) - mu * mu)) < 1e-15);
    CHECK(std::abs(tridiag_det(4, 0.3, 0.7) - dense_det(dense_h(4, 0.3, 0.7))) < 1e-12);

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> U(-2.0, 2.0);
    for (int l = 1; l <= 8; ++l)
        for (int i = 0; i < 50; ++i) {
            const cplx la(U(rng), U(rng)), m(U(rng), U(rng));
            const cplx a = tridiag_det(l, la, m), b = dense_det(dense_h(l, la, m));
            CHECK(std::abs(a - b) <= 1e-11 * std::max(1.0, std::abs(b)));
        }
}

TEST_CASE("polynomial solutions") {
    const double mu = 0.6;
    const double lam = (1.0 + std::sqrt(1.0 + 4.0 * mu * mu)) / 2.0;
    REQUIRE(std::abs(tridiag_det(2, lam, mu)) < 1e-14);
    const SeriesSolution s = polynomial_solution(2, lam, mu);
    const HeunParams p2{-1.0, lam, mu, 0.0};
    CHECK(operator_residual(s, p2, -2, 4) < 1e-14);

    for (int l = 1; l <= 5; ++l) {
        const double omega = 0.5;
        for (double m : polynomial_mu_roots(l, omega)) {
            const cplx la = 1.0 / (4.0 * omega * omega) - m * m;
            CHECK(std::abs(tridiag_det(l, la, m)) < 1e-9 * std::pow(1.0 + std::abs(la) + m, l));
            const SeriesSolution q = polynomial_solution(l, la, m);
            CHECK(operator_residual(q, HeunParams{1.0 - l, la, m, 0.0}, -2, l + 2) < 1e-9);
        }
    }
    const auto r2 = polynomial_mu_roots(2, 0.5);
    REQUIRE(r2.size() == 1);
    CHECK(std::abs(r2[0] - std::sqrt(2.0)) < 1e-12);
    const auto r1 = polynomial_mu_roots(1, 0.5);
    REQUIRE(r1.size() == 1);
    CHECK(std::abs(r1[0] - 1.0) < 1e-12);
}

TEST_CASE("diamond maps polynomial solutions to solutions") {
    const double mu = 0.6;
    for (int l = 2; l <= 4; ++l) {
        const auto roots = polynomial_mu_roots(l, 0.7);
        for (double m : roots) {
            const cplx la = 1.0 / (4.0 * 0.49) - m * m;
            const SeriesSolution d = diamond_transform(polynomial_solution(l, la, m), m);
            const HeunParams p{1.0 + l, la, m, 0.0};
            CHECK(operator_residual(d, p, d.first_index + d.inexact_low, d.last_index() - d.inexact_high) < 1e-8);
        }
        (void)mu;
    }
}

TEST_CASE("pasting equation and the d-vector determinant have the same roots") {
    const double n = 1.4, mu = 0.3, b = 0.25;
    auto paste = [&](double la) { return pasting_value(HeunParams{n, la, mu, b}); };
    auto dvec = [&](double la) { return pasting_determinant(d_vectors(HeunParams{n, la, mu, b}, 1e-12)); };
    const auto rp = roots_of(paste, -30.0, 10.0, 800);
    const auto rd = roots_of(dvec, -30.0, 10.0, 800);
    REQUIRE(rp.size() >= 3);
    CHECK(rp.size() == rd.size());
    for (double x : rp) {
        CHECK(nearest(rd, x) < 1e-6);
        CHECK(dvec(x).normalized() < 1e-7);
    }

    // the assembled eigenfunction at a root
    const double la = rp.front();
    const HeunParams p{n, la, mu, b};
    const auto e = assemble_eigenfunction(p, 1e-8);
    REQUIRE(e.has_value());
    CHECK(operator_residual(*e, p, -30, 30) < 1e-7);

    // the sharp involution on it
    const cplx omega = 1.0 / (2.0 * std::sqrt(cplx(la + mu * mu)));
    const SeriesSolution s1 = sharp_involution(*e, p, omega);
    const HeunParams p1{n, la, mu, s1.exponent};
    CHECK(operator_residual(s1, p1, -30, 30) < 1e-7);
    const SeriesSolution s2 = sharp_involution(s1, p1, omega);
    CHECK(std::abs(s2.exponent - p.b) < 1e-15);
    const double m = e->max_abs();
    for (long k = -30; k <= 30; ++k) CHECK(std::abs(s2.at(k) - e->at(k)) < 1e-10 * m);
    CHECK_THROWS_AS(sharp_involution(*e, p, omega * 1.01), NumericError);

    CHECK(pasting_value(HeunParams{n, la, mu, b}).value.imag() == 0.0);
    CHECK_THROWS_AS(pasting_value(HeunParams{n, la, mu, 1.0}), NumericError);
}

TEST_CASE("resonant pasting equation") {
    const double n = 1.5, mu = 0.4;
    auto res = [&](double la) { return resonant_pasting_value(n, la, mu); };
    const auto rr = roots_of(res, -30.0, 10.0, 800);
    REQUIRE(rr.size() >= 3);
    for (double la : rr) {
        const SeriesSolution s = assemble_resonant_eigenfunction(n, la, mu, 1e-12);
        CHECK(operator_residual(s, HeunParams{n, la, mu, 0.0}, -30, 30) < 1e-7);
    }
    auto near0 = [&](double la) { return pasting_value(HeunParams{n, la, mu, 1e-4}); };
    const auto rn = roots_of(near0, -30.0, 10.0, 800);
    for (double x : rr) CHECK(nearest(rn, x) < 1e-3);
    // the b -> 0 limit also picks up entire solutions (xi = 0)
    auto xr = roots_of([&](double la) { return xi(n - 1.0, la, mu); }, -30.0, 10.0, 800);
    xr.insert(xr.end(), rr.begin(), rr.end());
    // the offset is linear in b and exceeds 1e-3 near lambda = -22.6 at b = 1e-4
    auto near5 = [&](double la) { return pasting_value(HeunParams{n, la, mu, 1e-5}); };
    const auto rn5 = roots_of(near5, -30.0, 10.0, 800);
    CHECK(rn5.size() == xr.size());
    for (double x : rn5) CHECK(nearest(xr, x) < 1e-3);
    for (double x : rn) CHECK(nearest(xr, x) < 2e-3);
    CHECK_THROWS_AS(resonant_pasting_value(2.0, 0.1, 0.4), NumericError);
    CHECK(res(0.3).value.imag() == 0.0);
}

TEST_CASE("level curves") {
    const double omega = 2.0, A = 1.0, mu = A / (2.0 * omega);
    auto lc = [&](double r) {
        return [=](double B) { return level_curve_value(r, B / omega, omega, mu); };
    };
    const auto a = roots_of(lc(0.5), -6.0, 6.0, 600);
    const auto b = roots_of(lc(2.5), -6.0, 6.0, 600);
    const auto c = roots_of(lc(-0.5), -6.0, 6.0, 600);
    REQUIRE(!a.empty());
    CHECK(a.size() == b.size());
    for (double x : a) CHECK(nearest(b, x) < 1e-6);
    for (double x : a) CHECK(nearest(c, -x) < 1e-6);
    CHECK_THROWS_AS(level_curve_value(0.5, 0.5, omega, mu), NumericError);
    CHECK_THROWS_AS(level_curve_value(0.5, 2.5 + 1e-4, omega, mu), NumericError);
}

TEST_CASE("boundary equations") {
    for (Sign s : {Sign::plus, Sign::minus}) {
        CHECK(boundary_e0(0.7, 1.5, 0.4, s).value == boundary_e0(0.7, 1.5, -0.4, s).value);
        const Sign o = s == Sign::plus ? Sign::minus : Sign::plus;
        CHECK(std::abs(boundary_e1(0.7, 1.5, -0.4, o).value - boundary_e1(0.7, 1.5, 0.4, s).value) < 1e-15);
        CHECK(boundary_e0(0.7, 1.5, 0.4, s).value.imag() == 0.0);
    }
    CHECK(std::isfinite(std::abs(boundary_e1(0.0, 2.0, 0.3, Sign::plus).value)));
    CHECK_THROWS_AS(boundary_e0(2.0, 1.0, 0.3, Sign::plus), NumericError);
    CHECK_THROWS_AS(boundary_e1(3.0, 1.0, 0.3, Sign::plus), NumericError);
    CHECK_THROWS_AS(boundary_e0(0.5, 1.0, 0.0, Sign::plus), NumericError);
}

TEST_CASE("root finding") {
    CHECK(std::abs(find_root_1d([](double x) { return x * x - 2.0; }, 1.0, 2.0) - std::sqrt(2.0)) < 1e-10);
    auto sq = [](double x) {
        EquationValue v;
        v.value = (x - 0.3) * (x - 0.3);
        v.scale = 1.0;
        return v;
    };
    const Root r = find_root_1d(sq, 0.0, 1.0, 1e-10);
    CHECK(std::abs(r.x - 0.3) < 1e-5);
    auto pole = [](double x) {
        EquationValue v;
        v.value = 1.0 / (x - 0.5);
        v.scale = 1.0;
        return v;
    };
    CHECK_THROWS_AS(find_root_1d(pole, 0.0, 1.0, 1e-10), NumericError);
    CHECK(scan_roots(pole, 0.0, 1.0, 20, 1e-10).empty());
}

TEST_CASE("curve tracing") {
    const double omega = 1.0;
    const CurveEquation eq = curve_equation("e0", Sign::minus, omega);
    const auto seeds = roots_of([&](double B) { return eq(B, 1.0); }, 0.2, 1.8, 160);
    REQUIRE(!seeds.empty());
    const double tol = 1e-10;
    const Curve c1 = trace_curve(eq, "e0", Sign::minus, seeds.front(), 1.0, 2.0, 0.1, tol);
    const Curve c2 = trace_curve(eq, "e0", Sign::minus, seeds.front(), 1.0, 2.0, 0.05, tol);
    CHECK(c1.complete);
    REQUIRE(c1.points.size() == 11);
    REQUIRE(c2.points.size() == 21);
    for (size_t i = 0; i < c1.points.size(); ++i) {
        CHECK(std::abs(c1.points[i].A - c2.points[2 * i].A) < 1e-12);
        CHECK(std::abs(c1.points[i].B - c2.points[2 * i].B) < 10 * tol);
        CHECK(c1.points[i].residual < tol);
    }
    CHECK_THROWS_AS(curve_equation("nope", Sign::plus, 1.0), std::invalid_argument);
}

TEST_CASE("traced boundary separates locked and unlocked") {
    const double omega = 1.0;
    const CurveEquation eq = curve_equation("e0", Sign::minus, omega);
    const auto seeds = roots_of([&](double B) { return eq(B, 1.0); }, 0.2, 1.8, 160);
    REQUIRE(!seeds.empty());
    const Curve c = trace_curve(eq, "e0", Sign::minus, seeds.front(), 1.0, 5.0, 0.5, 1e-10);
    REQUIRE(c.complete);
    for (const CurvePoint& pt : c.points) {
        const auto lo = rotation_number(PhysParams{omega, pt.B - 1e-2, pt.A}, 1e-6);
        const auto hi = rotation_number(PhysParams{omega, pt.B + 1e-2, pt.A}, 1e-6);
        CHECK(lo.locked != hi.locked);
    }
}

TEST_CASE("Bessel utilities") {
    CHECK(bessel_I(1, 0.0) == cplx{});
    CHECK(bessel_I(0, 0.0) == cplx(1.0));
    const double x = 1.0;
    const cplx z(0.5, 0.2);
    cplx sum{};
    for (int k = -30; k <= 30; ++k) sum += bessel_I(k, x) * std::pow(z, k);
    CHECK(std::abs(sum - std::exp(0.5 * x * (z + 1.0 / z))) < 1e-10);
    // I_k(x) = i^{-k} J_k(i x) on the real axis via J_k(x) = i^{-k} I_k(i x)
    for (int k = 0; k < 4; ++k)
        CHECK(std::abs(bessel_J(k, 2.3) - (std::pow(cplx(0.0, 1.0), -k) * bessel_I(k, cplx(0.0, 2.3))).real()) < 1e-14);
    const double a = bessel_j_zero(1, 1, 1e-15), b = bessel_j_zero(1, 1, 1e-12);
    CHECK(std::abs(a - b) < 1e-10);
    CHECK(std::abs(bessel_J(1, a)) < 1e-14);
    CHECK(bessel_j_zero(1, 2) > a);
    CHECK_THROWS_AS(bessel_I(0, 60.0), NumericError);
}
