#include "hplk/checks.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <nlohmann/json.hpp>
#include <random>

#include "hplk/bessel.hpp"
#include "hplk/error.hpp"
#include "hplk/io.hpp"
#include "hplk/spectral.hpp"
#include "hplk/torus.hpp"

namespace hplk {

namespace {

using Clock = std::chrono::steady_clock;

struct Timer {
    Clock::time_point t0 = Clock::now();
    double seconds() const { return std::chrono::duration<double>(Clock::now() - t0).count(); }
};

CheckResult make(int id, const char* name, double threshold, double limit) {
    CheckResult r;
    r.id = id;
    r.name = name;
    r.threshold = threshold;
    r.time_limit = limit;
    return r;
}

// passes when the metric is within threshold, nothing failed structurally, and the run fits the limit
CheckResult& finish(CheckResult& r, const Timer& t, bool structural_ok = true) {
    r.seconds = t.seconds();
    r.passed = structural_ok && std::isfinite(r.residual) && r.residual <= r.threshold && r.seconds <= r.time_limit;
    if (r.seconds > r.time_limit) r.detail += (r.detail.empty() ? "" : "; ") + std::string("time limit exceeded");
    return r;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

double nearest(const std::vector<double>& v, double x) {
    double d = INFINITY;
    for (double y : v) d = std::min(d, std::abs(x - y));
    return d;
}

std::vector<double> root_xs(const std::vector<Root>& r) {
    std::vector<double> x;
    for (const Root& q : r) x.push_back(q.x);
    return x;
}

double dist_identity(const Complex2x2& m) { return (m - Complex2x2::identity()).max_entry(); }

// random parameters with b, b+n at least 0.05 from the integers
HeunParams random_heun(std::mt19937_64& rng, bool complex_params) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (;;) {
        const double im = complex_params ? 0.3 : 0.0;
        const cplx n(1.05 + 1.9 * U(rng), im * (U(rng) - 0.5));
        const cplx lam(10.0 * U(rng) - 5.0, im * (U(rng) - 0.5));
        const cplx mu(0.1 + 1.4 * U(rng), im * (U(rng) - 0.5));
        const cplx b(4.0 * U(rng) - 2.0, im * (U(rng) - 0.5));
        if (integer_distance(b) < 0.05 || integer_distance(b + n) < 0.05 || integer_distance(n) < 0.05) continue;
        return {n, lam, mu, b};
    }
}

}  // namespace

CheckResult check_determinant_identity(Suite s) {
    CheckResult r = make(1, "determinant identity", 1e-6, 60.0);
    Timer t;
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> W(0.3, 2.0), Bd(0.0, 4.0), Ad(0.0, 5.0);
    const int draws = s == Suite::full ? 100 : 10;
    for (int i = 0; i < draws; ++i) {
        const PhysParams p{W(rng), Bd(rng), Ad(rng)};
        r.residual = std::max(r.residual, monodromy_numeric(p, 1e-10).det_error);
    }
    r.detail = fmt("%.0f draws, max |det M - exp(-2 pi i (l+1))| = %.3g", draws, r.residual);
    return finish(r, t);
}

CheckResult check_eigenvalue_rotation(Suite s) {
    CheckResult r = make(2, "eigenvalue-rotation relation", 1e-3, 120.0);
    Timer t;
    std::mt19937_64 rng(202);
    std::uniform_real_distribution<double> W(0.5, 2.0), Bd(0.0, 4.0), Ad(0.0, 4.0);
    const int want = s == Suite::full ? 20 : 4;
    int got = 0, skipped = 0;
    double lift_gap = 0.0;  // |rho - direct average| * K, must stay below 1
    while (got < want && skipped < 20 * want) {
        const PhysParams p{W(rng), Bd(rng), Ad(rng)};
        const RotationEstimate e = rotation_number(p, 1e-8);
        if (e.locked) {
            ++skipped;
            continue;
        }
        // rho itself must sit within the circle-map bound 1/K of a direct lift average
        const long K = 256;
        const double direct = (flow_phi(p, 0.0, 2.0 * M_PI * K, 1e-10)) / (2.0 * M_PI * K);
        lift_gap = std::max(lift_gap, std::abs(e.rho - direct) * K);
        const auto ev = monodromy_numeric(p, 1e-11).eigenvalues();
        const EigenvaluePrediction pred = predicted_eigenvalues(p, e);
        double d = pair_distance(ev, pred.pair);
        if (pred.alternate) d = std::min(d, pair_distance(ev, *pred.alternate));
        r.residual = std::max(r.residual, d);
        ++got;
    }
    r.detail = fmt("%.0f unlocked points (%.0f locked draws skipped), max eigenvalue distance %.3g", got, skipped,
                   r.residual) +
               fmt(", max K |rho - direct lift average| %.3g (K = 256)", lift_gap);
    return finish(r, t, got == want && lift_gap < 1.0);
}

CheckResult check_dual_oracle(Suite s) {
    CheckResult r = make(3, "dual-oracle solution identity", 1e-10, 30.0);
    Timer t;
    std::mt19937_64 rng(303);
    const int draws = s == Suite::full ? 50 : 8;
    double ratio_err = 0.0, rec = 0.0;
    for (int i = 0; i < draws; ++i) {
        const HeunParams p = random_heun(rng, i % 2 == 1);
        const SeriesSolution f = forward_solution(p, 1e-10);
        const SeriesSolution g = backward_solution(p, 1e-10);
        rec = std::max({rec, recurrence_residual(f, p, 1, 50), recurrence_residual(g, p, -50, -1)});
        const auto xf = projective_backward_solve(heun_recurrence(p), 400, 0);
        const auto xb = projective_backward_solve(reversed(heun_recurrence(p)), 400, 0);
        for (long k = 1; k <= 30; ++k) {
            const cplx a = f.at(k + 1) / f.at(k), b = xf[static_cast<size_t>(k)].value();
            ratio_err = std::max(ratio_err, std::abs(a - b) / std::max(std::abs(a), std::abs(b)));
            const cplx c = g.at(-k - 1) / g.at(-k), d = xb[static_cast<size_t>(k)].value();
            ratio_err = std::max(ratio_err, std::abs(c - d) / std::max(std::abs(c), std::abs(d)));
        }
    }
    r.residual = ratio_err;
    r.detail = fmt("%.0f draws, max ratio disagreement %.3g, max recurrence residual %.3g", draws, ratio_err, rec);
    return finish(r, t, rec < 1e-12);
}

CheckResult check_paste_dvector(Suite s) {
    CheckResult r = make(4, "pasting equation vs d-vector determinant", 1e-6, 30.0);
    Timer t;
    const double n = 1.4, mu = 0.3, b = 0.25;
    const int grid = s == Suite::full ? 800 : 200;
    const double lo = s == Suite::full ? -30.0 : -8.0;
    const auto rp = root_xs(scan_roots([&](double la) { return pasting_value(HeunParams{n, la, mu, b}); }, lo, 10.0,
                                       grid, 1e-9));
    const auto rd = root_xs(scan_roots(
        [&](double la) { return pasting_determinant(d_vectors(HeunParams{n, la, mu, b}, 1e-12)); }, lo, 10.0, grid,
        1e-9));
    for (double x : rp) r.residual = std::max(r.residual, nearest(rd, x));
    for (double x : rd) r.residual = std::max(r.residual, nearest(rp, x));
    r.detail = fmt("%.0f / %.0f roots on the lambda sweep, max root distance %.3g", rp.size(), rd.size(), r.residual);
    return finish(r, t, !rp.empty() && rp.size() == rd.size());
}

CheckResult check_adjacency(Suite s) {
    CheckResult r = make(5, "adjacencies from zeta_0", 1e-4, 120.0);
    Timer t;
    const double omega = 2.0;
    auto roots = scan_roots([&](double mu) { return zeta(0.0, omega, mu); }, 0.01, 2.5, 250, 1e-10);
    if (s == Suite::fast && roots.size() > 2) roots.resize(2);
    double pres = 0.0, mres = 0.0;
    for (const Root& q : roots) {
        const PhysParams p{omega, 0.0, 2.0 * omega * q.x};
        pres = std::max(pres, identity_residual(poincare_samples(p, 16, 1e-11)));
        mres = std::max(mres, dist_identity(monodromy_numeric(p, 1e-11).m));
    }
    r.residual = std::max(pres, mres);
    r.detail = fmt("%.0f roots, max Poincare identity residual %.3g, max |M - I| %.3g", roots.size(), pres, mres);
    return finish(r, t, !roots.empty());
}

CheckResult check_polynomial_points(Suite) {
    CheckResult r = make(6, "polynomial-solution points", 1e-4, 300.0);
    Timer t;
    const double omega = 0.5;
    const int l = 2;
    const auto mus = polynomial_mu_roots(l, omega);
    bool ok = !mus.empty();
    double tr = 0.0, minid = INFINITY, rho_off = 0.0;
    for (double mu : mus) {
        const PhysParams p{omega, l * omega, 2.0 * omega * mu};
        const RotationEstimate e = rotation_number(p, 1e-8);
        const long rr = std::lround(e.rho);
        rho_off = std::max(rho_off, std::abs(e.rho - static_cast<double>(rr)));
        ok = ok && (rr == 0 || rr == 2) && std::abs(e.rho - static_cast<double>(rr)) < 1e-6;
        const MonodromyMatrix m = monodromy_numeric(p, 1e-11);
        tr = std::max(tr, std::abs(m.m.trace() - 2.0));
        minid = std::min(minid, dist_identity(m.m));
        const bool lo = lock_test(PhysParams{omega, p.B - 1e-3, p.A}, static_cast<int>(rr), 1e-11).locked;
        const bool hi = lock_test(PhysParams{omega, p.B + 1e-3, p.A}, static_cast<int>(rr), 1e-11).locked;
        ok = ok && lo != hi;
    }
    ok = ok && minid > 1e-3;
    r.residual = tr;
    r.detail = fmt("%.0f roots, max |trace - 2| %.3g, min |M - I| %.3g", mus.size(), tr, minid) +
               fmt(", max |rho - round(rho)| %.3g", rho_off);
    return finish(r, t, ok);
}

CheckResult check_boundary_equations(Suite) {
    CheckResult r = make(7, "boundary equations vs scan", 1e-5, 120.0);
    Timer t;
    const double omega = 1.0, A = 3.0;
    const auto seed = find_locked_B(omega, A, 1, 0.0, 3.0, 0.05);
    if (!seed) {
        r.residual = INFINITY;
        r.detail = "no locked point of area 1 found";
        return finish(r, t, false);
    }
    const PhysParams p{omega, *seed, A};
    double worst_b = 0.0;
    bool ok = true;
    std::string which;
    for (Side side : {Side::left, Side::right}) {
        const double edge = boundary_bisect(p, 1, side, 1e-7);
        double best = INFINITY;
        std::string tag_best;
        Sign sign_best = Sign::plus;
        for (const char* tag : {"e0", "e1"})
            for (Sign sg : {Sign::plus, Sign::minus}) {
                try {
                    const double v = curve_equation(tag, sg, omega)(edge, A).normalized();
                    if (v < best) best = v, tag_best = tag, sign_best = sg;
                } catch (const NumericError&) {
                }
            }
        r.residual = std::max(r.residual, best);
        if (!std::isfinite(best)) {
            ok = false;
            continue;
        }
        const CurveEquation eq = curve_equation(tag_best, sign_best, omega);
        try {
            const Root q = find_root_1d([&](double B) { return eq(B, A); }, edge - 1e-3, edge + 1e-3, 1e-9);
            worst_b = std::max(worst_b, std::abs(q.x - edge));
        } catch (const NumericError&) {
            ok = false;
        }
        which += (which.empty() ? "" : ", ") + tag_best + to_string(sign_best) + fmt(" at B = %.8f", edge);
    }
    ok = ok && worst_b < 1e-4;
    r.detail = "edges " + which + fmt("; max normalized residual %.3g, max B disagreement %.3g", r.residual, worst_b);
    return finish(r, t, ok);
}

CheckResult check_level_curve(Suite) {
    CheckResult r = make(8, "level curve vs rotation number", 1e-4, 60.0);
    Timer t;
    const double omega = 2.0, A = 1.0, target = 0.5;
    // sign of rho - 1/2 from the extremes of F^2(x) - x - 2 pi; 0 on the level set itself
    auto side = [&](double B) {
        const LockTest lt = lock_test(PhysParams{omega, B, A}, 1, 1e-11, 24, 2);
        return lt.locked ? 0 : (lt.g_max < 0.0 ? -1 : 1);
    };
    double lo = 0.0, hi = 0.0;
    int slo = side(lo);
    bool found = false, exact = false;
    for (double B = 0.1; B <= 4.0 && !found; B += 0.1) {
        const int sb = side(B);
        if (slo < 0 && sb >= 0) {
            hi = B;
            found = true;
            if (sb == 0) lo = B, exact = true;
        } else {
            lo = B;
            slo = sb;
        }
    }
    if (!found) {
        r.residual = INFINITY;
        r.detail = "no rho = 0.5 crossing on B in [0, 4]";
        return finish(r, t, false);
    }
    while (!exact && hi - lo > 1e-8) {
        const double m = 0.5 * (lo + hi);
        const int sm = side(m);
        if (sm == 0) lo = hi = m, exact = true;
        else (sm < 0 ? lo : hi) = m;
    }
    const double B_rho = 0.5 * (lo + hi);
    const CurveEquation eq = curve_equation("pasterho", Sign::plus, omega, target);
    const auto roots = root_xs(scan_roots([&](double B) { return eq(B, A); }, B_rho - 0.05, B_rho + 0.05, 20, 1e-9));
    r.residual = nearest(roots, B_rho);
    r.detail = fmt("rho = 1/2 bisection B = %.9f, nearest root of the level-curve equation at distance %.3g", B_rho,
                   r.residual);
    return finish(r, t, !roots.empty());
}

CheckResult check_portrait_properties(Suite s, int threads) {
    CheckResult r = make(9, "portrait quantization and symmetry", 0.0, 600.0);
    Timer t;
    const int nb = s == Suite::full ? 120 : 30, na = s == Suite::full ? 100 : 25;
    const Portrait pt = phase_lock_scan(2.0, GridAxis{-6.0, 6.0, nb}, GridAxis{0.0, 10.0, na}, 1e-6, threads);
    long plateau = 0, asym = 0, nonmono = 0;
    auto half_near = [](double x) { return std::abs(x - (std::floor(x) + 0.5)) < 1e-3; };
    for (int ia = 0; ia < na; ++ia)
        for (int ib = 0; ib < nb; ++ib) {
            const RotationEstimate& c = pt.at(ia, ib);
            if (half_near(c.rho) && ia > 0 && ia + 1 < na && ib > 0 && ib + 1 < nb) {
                const double q = std::floor(c.rho) + 0.5;
                bool all = true;
                for (auto [da, db] : {std::pair{-1, 0}, {1, 0}, {0, -1}, {0, 1}})
                    all = all && std::abs(pt.at(ia + da, ib + db).rho - q) < 1e-3;
                plateau += all;
            }
            const RotationEstimate& m = pt.at(ia, nb - 1 - ib);
            if (std::abs(c.rho + m.rho) > 3.0 * std::max(c.uncertainty, m.uncertainty)) ++asym;
            if (ib > 0) {
                const RotationEstimate& prev = pt.at(ia, ib - 1);
                if (c.rho < prev.rho - 3.0 * std::max(c.uncertainty, prev.uncertainty)) ++nonmono;
            }
        }
    const double nc = pt.not_converged_fraction();
    r.residual = static_cast<double>(plateau + asym + nonmono);
    r.detail = fmt("%.0fx%.0f grid: ", nb, na) +
               fmt("%.0f half-integer plateau cells, %.0f mirror violations, %.0f monotonicity violations", plateau,
                   asym, nonmono) +
               fmt(", not-converged fraction %.3g", nc);
    return finish(r, t, nc <= 0.01);
}

CheckResult check_bessel_identity(Suite) {
    CheckResult r = make(10, "Bessel zero and entire solutions", 1e-8, 5.0);
    Timer t;
    const double x11 = bessel_j_zero(1, 1);
    r.residual = xi(1.0, 0.0, cplx(0.0, x11 / 2.0)).normalized();
    r.detail = fmt("x_{1,1} = %.15f, |xi|/scale = %.3g", x11, r.residual);
    return finish(r, t);
}

CheckResult check_product_certificates(Suite s) {
    CheckResult r = make(11, "product engine certificates", 1.0, 30.0);
    Timer t;
    std::mt19937_64 rng(1111);
    const int draws = s == Suite::full ? 20 : 4;
    struct Family {
        const char* name;
        long start;
        std::function<MatrixSequence(const HeunParams&)> make;
    };
    // forward/backward pasting families, and the b-specializations used by xi and the boundary equations
    const std::vector<Family> fams = {
        {"forward", 1, [](const HeunParams& p) { return forward_family(p); }},
        {"backward", 0, [](const HeunParams& p) { return backward_family(p); }},
        {"xi", 1, [](const HeunParams& p) { return forward_family(HeunParams{p.n, p.lambda, p.mu, 0.0}); }},
        {"e0", 1, [](const HeunParams& p) { return forward_family(HeunParams{p.n, p.lambda, p.mu, -p.l() / 2.0}); }},
        {"e1", 1,
         [](const HeunParams& p) { return forward_family(HeunParams{p.n, p.lambda, p.mu, -(p.l() + 1.0) / 2.0}); }},
    };
    long count = 0;
    for (int i = 0; i < draws; ++i) {
        const HeunParams p = random_heun(rng, i % 2 == 1);
        for (const Family& f : fams) {
            const MatrixSequence seq = f.make(p);
            const TruncatedProduct a = converging_product(seq, f.start, 1e-10);
            ProductOptions o;
            o.base_factors = 2 * (a.truncation_index >> (o.levels - 1));
            const TruncatedProduct b = converging_product(seq, f.start, 1e-10, o);
            const double diff = (a.value - b.value).max_entry();
            r.residual = std::max(r.residual, a.tail_bound > 0.0 ? diff / a.tail_bound : (diff == 0.0 ? 0.0 : INFINITY));
            ++count;
        }
    }
    r.detail = fmt("%.0f products; max (change on doubling) / tail_bound = %.3g", count, r.residual);
    return finish(r, t);
}

std::vector<CheckResult> run_suite(Suite s, int threads, const std::function<void(const CheckResult&)>& on_result) {
    using Fn = std::function<CheckResult()>;
    const std::vector<std::pair<int, Fn>> all = {
        {1, [&] { return check_determinant_identity(s); }},
        {2, [&] { return check_eigenvalue_rotation(s); }},
        {3, [&] { return check_dual_oracle(s); }},
        {4, [&] { return check_paste_dvector(s); }},
        {5, [&] { return check_adjacency(s); }},
        {6, [&] { return check_polynomial_points(s); }},
        {7, [&] { return check_boundary_equations(s); }},
        {8, [&] { return check_level_curve(s); }},
        {9, [&] { return check_portrait_properties(s, threads); }},
        {10, [&] { return check_bessel_identity(s); }},
        {11, [&] { return check_product_certificates(s); }},
    };
    std::vector<CheckResult> out;
    for (const auto& [id, fn] : all) {
        CheckResult res;
        try {
            res = fn();
        } catch (const std::exception& e) {
            res.id = id;
            res.name = "criterion " + std::to_string(id);
            res.passed = false;
            res.residual = INFINITY;
            res.detail = std::string("exception: ") + e.what();
        }
        if (on_result) on_result(res);
        out.push_back(std::move(res));
    }
    return out;
}

std::string format_result(const CheckResult& r) {
    char head[160];
    std::snprintf(head, sizeof head, "%s %2d %-44s metric %-10s <= %-8s time %7.2fs <= %.0fs  ", r.passed ? "PASS" : "FAIL",
                  r.id, r.name.c_str(), format_double(r.residual).c_str(), format_double(r.threshold).c_str(),
                  r.seconds, r.time_limit);
    return head + r.detail;
}

std::string report_json(const std::vector<CheckResult>& results, int indent) {
    nlohmann::json j = nlohmann::json::array();
    for (const CheckResult& r : results) {
        j.push_back({{"id", r.id},
                     {"name", r.name},
                     {"passed", r.passed},
                     {"residual", std::isfinite(r.residual) ? nlohmann::json(r.residual) : nlohmann::json(nullptr)},
                     {"threshold", r.threshold},
                     {"seconds", r.seconds},
                     {"time_limit", r.time_limit},
                     {"detail", r.detail}});
    }
    return j.dump(indent);
}

}  // namespace hplk
