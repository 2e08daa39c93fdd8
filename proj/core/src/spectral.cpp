#include "hplk/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "hplk/error.hpp"

namespace hplk {

const char* to_string(Sign s) noexcept { return s == Sign::plus ? "plus" : "minus"; }

namespace {

const ProductOptions kEquationProduct = [] {
    ProductOptions o;
    o.best_effort = true;
    return o;
}();

void require_mu(cplx mu) {
    if (mu == cplx{}) throw NumericError(ErrorCode::ZeroMu, "mu must be nonzero");
}

EquationValue two_terms(cplx t1, cplx t2, double trunc) {
    EquationValue v;
    v.value = t1 + t2;
    v.scale = std::abs(t1) + std::abs(t2);
    if (!(v.scale > 0.0)) v.scale = 1.0;
    v.truncation_error = trunc;
    return v;
}

}  // namespace

EquationValue xi(cplx l, cplx lambda, cplx mu, double tol) {
    require_mu(mu);
    if (near_integer(l) && nearest_integer(l) < 0)
        throw NumericError(ErrorCode::ForbiddenL, "l must not be a negative integer");
    const HeunParams p{l + 1.0, lambda, mu, 0.0};
    const TruncatedProduct R = converging_product(forward_family(p), 1, tol, kEquationProduct);
    EquationValue v = two_terms(lambda * R.value.m11, mu * mu * R.value.m21,
                                R.tail_bound * (std::abs(lambda) + std::norm(mu)));
    // at lambda = 0 the two-term scale collapses onto the value itself
    v.scale = std::abs(lambda * R.value.m11) + std::norm(mu) * (std::abs(R.value.m11) + std::abs(R.value.m21));
    if (!(v.scale > 0.0)) v.scale = 1.0;
    return v;
}

EquationValue zeta(cplx l, double omega, cplx mu, double tol) {
    if (!(omega > 0.0)) throw std::invalid_argument("zeta: omega must be positive");
    return xi(l, 1.0 / (4.0 * omega * omega) - mu * mu, mu, tol);
}

cplx tridiag_det(int l, cplx lambda, cplx mu) {
    if (l < 1) throw std::invalid_argument("tridiag_det: l >= 1");
    cplx d_prev = 1.0, d = 0.0;
    for (int j = 1; j <= l; ++j) {
        const cplx hjj = static_cast<double>((1 - j) * (l - j + 1));
        if (j == 1) {
            d = hjj + lambda;
            continue;
        }
        // H_{j-1,j} H_{j,j-1} = mu (j-1) * mu (l-j+1)
        const cplx off = mu * static_cast<double>(j - 1) * mu * static_cast<double>(l - j + 1);
        const cplx next = (hjj + lambda) * d - off * d_prev;
        d_prev = d;
        d = next;
    }
    return d;
}

SeriesSolution polynomial_solution(int l, cplx lambda, cplx mu) {
    if (l < 1) throw std::invalid_argument("polynomial_solution: l >= 1");
    require_mu(mu);
    SeriesSolution s;
    s.direction = Direction::forward;
    s.exponent = 0.0;
    s.normalization = Normalization::polynomial;
    s.coeffs.assign(static_cast<size_t>(l), cplx{});
    s.coeffs[0] = 1.0;
    const double L = l;
    for (int k = 0; k + 1 < l; ++k) {
        const double kk = k;
        const cplx am = k > 0 ? s.coeffs[static_cast<size_t>(k - 1)] : cplx{};
        s.coeffs[static_cast<size_t>(k + 1)] =
            -((kk * (kk - L) + lambda) * s.coeffs[static_cast<size_t>(k)] - mu * (kk - L) * am) / (mu * (kk + 1.0));
    }
    return s;
}

std::vector<double> polynomial_mu_roots(int l, double omega) {
    if (l < 1) throw std::invalid_argument("polynomial_mu_roots: l >= 1");
    if (!(omega > 0.0)) throw std::invalid_argument("polynomial_mu_roots: omega must be positive");
    const double c = 1.0 / (4.0 * omega * omega);
    // roots need c - mu^2 = -eig(H), |eig(H)| <= max|H_jj| + mu (l+1)
    double hmax = 0.0;
    for (int j = 1; j <= l; ++j) hmax = std::max(hmax, std::abs(static_cast<double>((1 - j) * (l - j + 1))));
    const double mu_max = (l + 1) + std::sqrt(hmax + c) + 1.0;
    // the determinant is an even polynomial in mu times mu^{l mod 2}; use -eig(H) via the symmetrized tridiagonal
    auto g = [&](double mu) {
        Eigen::VectorXd diag(l);
        Eigen::VectorXd sub(std::max(l - 1, 0));
        for (int j = 1; j <= l; ++j) diag(j - 1) = (1 - j) * (l - j + 1);
        for (int j = 1; j < l; ++j) sub(j - 1) = mu * std::sqrt(static_cast<double>(j) * (l - j));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
        if (l == 1) return std::vector<double>{diag(0)};
        es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
        std::vector<double> ev(es.eigenvalues().data(), es.eigenvalues().data() + l);
        return ev;
    };
    std::vector<double> roots;
    // each branch lambda_i(mu) = -eig_i(H(mu)) crosses c - mu^2; track sign of c - mu^2 + eig_i
    const int n = 4000;
    std::vector<double> prev;
    double mu_prev = 0.0;
    for (int i = 1; i <= n; ++i) {
        const double mu = mu_max * i / n;
        std::vector<double> ev = g(mu);
        if (!prev.empty()) {
            for (int k = 0; k < l; ++k) {
                const double f0 = c - mu_prev * mu_prev + prev[k], f1 = c - mu * mu + ev[k];
                if ((f0 < 0.0) != (f1 < 0.0)) {
                    auto h = [&](double m) { return c - m * m + g(m)[k]; };
                    const double r = find_root_1d(h, mu_prev, mu);
                    // polish on the determinant itself
                    roots.push_back(r);
                }
            }
        }
        prev = std::move(ev);
        mu_prev = mu;
    }
    std::sort(roots.begin(), roots.end());
    return roots;
}

EquationValue pasting_value(const HeunParams& p, double tol) {
    require_mu(p.mu);
    if (p.resonant()) throw NumericError(ErrorCode::ResonantParameters, "b or b+n is an integer");
    const TruncatedProduct R = converging_product(forward_family(p), 1, tol, kEquationProduct);
    const TruncatedProduct T = converging_product(backward_family(p), 0, tol, kEquationProduct);
    const cplx t1 = (p.b + 1.0) * (p.b + p.n - 2.0) * R.value.m11 * T.value.m11;
    const cplx t2 = p.mu * p.mu * R.value.m21 * T.value.m21;
    const double rel = R.tail_bound / std::max(1.0, R.value.max_entry()) +
                       T.tail_bound / std::max(1.0, T.value.max_entry());
    return two_terms(t1, t2, rel * (std::abs(t1) + std::abs(t2)));
}

EquationValue resonant_pasting_value(cplx n, cplx lambda, cplx mu, double tol) {
    require_mu(mu);
    if (near_integer(n)) throw NumericError(ErrorCode::IntegerN, "n must not be an integer");
    const HeunParams p{n, lambda, mu, 0.0};
    const TruncatedProduct T = converging_product(backward_family(p), 2, tol, kEquationProduct);
    const cplx t1 = (2.0 - n + lambda) * (4.0 - n) * T.value.m11;
    const cplx t2 = -mu * mu * (n - 2.0) * T.value.m21;
    return two_terms(t1, t2, T.tail_bound * (std::abs(t1) + std::abs(t2)) / std::max(1.0, T.value.max_entry()));
}

EquationValue level_curve_value(double r, double l, double omega, cplx mu, double tol) {
    if (!(omega > 0.0)) throw std::invalid_argument("level_curve_value: omega must be positive");
    require_mu(mu);
    auto band = [](double x) { return std::abs(x - 2.0 * std::round(x / 2.0)); };
    if (band(l - r) < kResonantLineBand || band(l + r) < kResonantLineBand)
        throw NumericError(ErrorCode::ResonantLine, "l -+ r within the band around 2Z");
    const HeunParams p{l + 1.0, 1.0 / (4.0 * omega * omega) - mu * mu, mu, (r - l) / 2.0};
    return pasting_value(p, tol);
}

EquationValue boundary_e0(double l, double omega, cplx mu, Sign s, double tol) {
    if (!(omega > 0.0)) throw std::invalid_argument("boundary_e0: omega must be positive");
    require_mu(mu);
    if (integer_distance(l / 2.0) < kResonanceTol) throw NumericError(ErrorCode::EvenL, "l is an even integer");
    const HeunParams p{l + 1.0, 1.0 / (4.0 * omega * omega) - mu * mu, mu, -l / 2.0};
    const TruncatedProduct R = converging_product(forward_family(p), 0, tol, kEquationProduct);
    const cplx r11 = R.value.m11, r21 = R.value.m21;
    const double sg = sign_value(s);
    EquationValue v;
    v.value = r21 + sg * omega * l * (r21 - r11);
    v.scale = std::abs(r21) + omega * std::abs(l) * (std::abs(r21) + std::abs(r11));
    if (!(v.scale > 0.0)) v.scale = 1.0;
    v.truncation_error = R.tail_bound * (1.0 + 2.0 * omega * std::abs(l));
    return v;
}

EquationValue boundary_e1(double l, double omega, cplx mu, Sign s, double tol) {
    if (!(omega > 0.0)) throw std::invalid_argument("boundary_e1: omega must be positive");
    require_mu(mu);
    if (integer_distance((l - 1.0) / 2.0) < kResonanceTol) throw NumericError(ErrorCode::OddL, "l is an odd integer");
    const HeunParams p{l + 1.0, 1.0 / (4.0 * omega * omega) - mu * mu, mu, -(l + 1.0) / 2.0};
    const TruncatedProduct R = converging_product(forward_family(p), 1, tol, kEquationProduct);
    const cplx r11 = R.value.m11, r21 = R.value.m21;
    const double sg = sign_value(s);
    EquationValue v;
    v.value = r11 + sg * 2.0 * omega * mu * (r11 - r21);
    v.scale = std::abs(r11) + 2.0 * omega * std::abs(mu) * (std::abs(r11) + std::abs(r21));
    if (!(v.scale > 0.0)) v.scale = 1.0;
    v.truncation_error = R.tail_bound * (1.0 + 4.0 * omega * std::abs(mu));
    return v;
}

double find_root_1d(const std::function<double(double)>& f, double a, double b) {
    double fa = f(a), fb = f(b);
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if ((fa < 0.0) == (fb < 0.0)) throw NumericError(ErrorCode::NoBracket, "no sign change on the bracket");
    boost::uintmax_t it = 200;
    const auto r = boost::math::tools::toms748_solve(f, a, b, fa, fb, boost::math::tools::eps_tolerance<double>(50), it);
    const double x = 0.5 * (r.first + r.second);
    if (!std::isfinite(x)) throw NumericError(ErrorCode::NoBracket, "root iteration diverged");
    return x;
}

Root find_root_1d(const std::function<EquationValue(double)>& f, double a, double b, double tol) {
    if (!(b > a)) throw std::invalid_argument("find_root_1d: empty bracket");
    const EquationValue va = f(a), vb = f(b);
    const double fa = va.signed_normalized(), fb = vb.signed_normalized();
    if (fa == 0.0 || fb == 0.0 || (fa < 0.0) != (fb < 0.0)) {
        const double x = find_root_1d([&](double t) { return f(t).signed_normalized(); }, a, b);
        // both summands may vanish together at a root, so the bracket scale also counts
        const EquationValue vx = f(x);
        const double res = std::abs(vx.value) / std::max({vx.scale, va.scale, vb.scale});
        if (!(res <= tol)) throw NumericError(ErrorCode::NoBracket, "sign change without a root (pole)");
        return {x, res};
    }
    boost::uintmax_t it = 100;
    const auto m =
        boost::math::tools::brent_find_minima([&](double t) { return f(t).normalized(); }, a, b, 40, it);
    if (m.second >= 1e-3) throw NumericError(ErrorCode::NoBracket, "no sign change and no small minimum");
    // Gauss-Newton on the complex value for a real unknown
    double x = m.first;
    const double scale = f(x).scale;
    for (int i = 0; i < 40; ++i) {
        const double d = 1e-7 * std::max(1.0, std::abs(x));
        const cplx v = f(x).value / scale;
        const cplx dv = (f(x + d).value - f(x - d).value) / (2.0 * d * scale);
        const double den = std::norm(dv);
        if (den == 0.0) break;
        const double step = (std::conj(dv) * v).real() / den;
        x = std::clamp(x - step, a, b);
        if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(x))) break;
    }
    const double res = f(x).normalized();
    if (!(res <= tol)) throw NumericError(ErrorCode::NoBracket, "local minimum above tolerance");
    return {x, res};
}

std::vector<Root> scan_roots(const std::function<EquationValue(double)>& f, double lo, double hi, int n, double tol) {
    if (n < 1 || !(hi > lo)) throw std::invalid_argument("scan_roots: bad grid");
    std::vector<double> xs(n + 1), sv(n + 1), av(n + 1);
    for (int i = 0; i <= n; ++i) {
        xs[i] = lo + (hi - lo) * i / n;
        try {
            const EquationValue v = f(xs[i]);
            sv[i] = v.signed_normalized();
            av[i] = v.normalized();
        } catch (const NumericError&) {
            sv[i] = av[i] = std::numeric_limits<double>::quiet_NaN();
        }
    }
    std::vector<Root> out;
    auto push = [&](Root r) {
        for (const Root& q : out)
            if (std::abs(q.x - r.x) <= 1e-12 * std::max(1.0, std::abs(r.x))) return;
        out.push_back(r);
    };
    for (int i = 0; i < n; ++i) {
        if (std::isnan(sv[i]) || std::isnan(sv[i + 1])) continue;
        if (sv[i] == 0.0) {
            push({xs[i], av[i]});
            continue;
        }
        if ((sv[i] < 0.0) != (sv[i + 1] < 0.0)) {
            try {
                push(find_root_1d(f, xs[i], xs[i + 1], tol));
            } catch (const NumericError&) {
            }
        }
    }
    // tangential or complex-valued roots: small local minima of |value| without a sign change
    for (int i = 1; i < n; ++i) {
        if (std::isnan(av[i - 1]) || std::isnan(av[i]) || std::isnan(av[i + 1])) continue;
        if (av[i] < 1e-3 && av[i] <= av[i - 1] && av[i] <= av[i + 1] && (sv[i - 1] < 0.0) == (sv[i] < 0.0) &&
            (sv[i] < 0.0) == (sv[i + 1] < 0.0)) {
            try {
                push(find_root_1d(f, xs[i - 1], xs[i + 1], tol));
            } catch (const NumericError&) {
            }
        }
    }
    std::sort(out.begin(), out.end(), [](const Root& a, const Root& b) { return a.x < b.x; });
    return out;
}

CurveEquation curve_equation(const std::string& tag, Sign s, double omega, double r) {
    if (!(omega > 0.0)) throw std::invalid_argument("curve_equation: omega must be positive");
    if (tag == "e0")
        return [=](double B, double A) { return boundary_e0(B / omega, omega, A / (2.0 * omega), s); };
    if (tag == "e1")
        return [=](double B, double A) { return boundary_e1(B / omega, omega, A / (2.0 * omega), s); };
    if (tag == "pasterho")
        return [=](double B, double A) { return level_curve_value(r, B / omega, omega, A / (2.0 * omega)); };
    if (tag == "paste")
        return [=](double B, double A) {
            const double l = B / omega;
            auto band = [](double x) { return std::abs(x - 2.0 * std::round(x / 2.0)); };
            if (band(l - r) < kResonantLineBand || band(l + r) < kResonantLineBand)
                throw NumericError(ErrorCode::ResonantLine, "l -+ r within the band around 2Z");
            const HeunParams p{l + 1.0, 1.0 / (4.0 * omega * omega) - A * A / (4.0 * omega * omega),
                               A / (2.0 * omega), (r - l) / 2.0};
            return pasting_determinant(d_vectors(p, 1e-12));
        };
    throw std::invalid_argument("curve_equation: unknown equation '" + tag + "'");
}

namespace {

std::optional<Root> locate(const std::function<EquationValue(double)>& g, double B_pred, double w, double tol) {
    std::vector<Root> rs;
    try {
        rs = scan_roots(g, B_pred - w, B_pred + w, 8, tol);
    } catch (const NumericError&) {
        return std::nullopt;
    }
    std::optional<Root> best;
    for (const Root& r : rs)
        if (r.residual <= tol && (!best || std::abs(r.x - B_pred) < std::abs(best->x - B_pred))) best = r;
    return best;
}

}  // namespace

Curve trace_curve(const CurveEquation& eq, const std::string& tag, Sign s, double B_seed, double A_lo, double A_hi,
                  double step, double tol, const TraceOptions& opt) {
    if (!(step > 0.0)) throw std::invalid_argument("trace_curve: step must be positive");
    Curve c;
    c.equation = tag;
    c.sign = s;
    auto at_A = [&](double A) { return [&eq, A](double B) { return eq(B, A); }; };

    std::optional<Root> first;
    for (double w = opt.search_halfwidth; w <= 1.0 + 1e-12 && !first; w *= 2.0)
        first = locate(at_A(A_lo), B_seed, w, tol);
    if (!first) throw NumericError(ErrorCode::LostTrack, "no root near the seed");
    c.points.push_back({first->x, A_lo, first->residual});

    const double dir = A_hi >= A_lo ? 1.0 : -1.0;
    const long nsteps = static_cast<long>(std::ceil(std::abs(A_hi - A_lo) / step - 1e-9));
    for (long i = 1; i <= nsteps; ++i) {
        const double target = i == nsteps ? A_hi : A_lo + dir * step * static_cast<double>(i);
        // substeps toward the grid point, halving on failure
        double h = std::abs(target - c.points.back().A);
        int halvings = 0;
        while (std::abs(target - c.points.back().A) > 1e-14) {
            const CurvePoint& last = c.points.back();
            const double A = std::abs(target - last.A) <= h * (1.0 + 1e-12) ? target : last.A + dir * h;
            double B_pred = last.B;
            if (c.points.size() >= 2) {
                const CurvePoint& prev = c.points[c.points.size() - 2];
                if (prev.A != last.A) B_pred += (last.B - prev.B) / (last.A - prev.A) * (A - last.A);
            }
            const double w = opt.search_halfwidth * std::max(1.0, h / step);
            const std::optional<Root> r = locate(at_A(A), B_pred, w, tol);
            if (r) {
                c.points.push_back({r->x, A, r->residual});
                continue;
            }
            if (++halvings > opt.max_halvings) {
                if (opt.allow_partial) {
                    c.complete = false;
                    return c;
                }
                throw NumericError(ErrorCode::LostTrack, "continuation lost at A = " + std::to_string(A));
            }
            h *= 0.5;
        }
    }
    return c;
}

}  // namespace hplk
