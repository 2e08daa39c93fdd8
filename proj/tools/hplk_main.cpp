#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hplk/checks.hpp"
#include "hplk/error.hpp"
#include "hplk/io.hpp"
#include "hplk/spectral.hpp"
#include "hplk/torus.hpp"

using namespace hplk;
using Row = nlohmann::ordered_json;

namespace {

enum Exit { kOk = 0, kConfig = 2, kVerify = 3, kNumeric = 4 };

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Range {
    double lo = 0.0, hi = 0.0;
    int n = 1;
    double at(int i) const { return n <= 1 ? lo : lo + (hi - lo) * i / (n - 1); }
};

// "x", "lo:hi" (n = 2) or "lo:hi:n"
Range parse_range(const std::string& name, const std::string& text) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    Range r;
    try {
        if (parts.size() == 1) {
            r.lo = r.hi = std::stod(parts[0]);
        } else if (parts.size() == 2 || parts.size() == 3) {
            r.lo = std::stod(parts[0]);
            r.hi = std::stod(parts[1]);
            r.n = parts.size() == 3 ? std::stoi(parts[2]) : 2;
        } else {
            throw ConfigError("--" + name + ": expected lo:hi:n, got '" + text + "'");
        }
    } catch (const std::logic_error&) {
        throw ConfigError("--" + name + ": cannot parse '" + text + "'");
    }
    if (!std::isfinite(r.lo) || !std::isfinite(r.hi)) throw ConfigError("--" + name + ": bounds must be finite");
    if (r.n < 1) throw ConfigError("--" + name + ": resolution must be positive");
    if (r.n > 1 && !(r.hi > r.lo)) throw ConfigError("--" + name + ": empty range");
    return r;
}

struct Job {
    std::string command;
    double omega = 2.0;
    std::optional<std::string> b, a, mu, l;
    std::optional<double> lambda, r, tol;
    std::string eq = "e0", sign = "plus", out = "-", format = "csv", suite = "fast";
    int threads = 1;

    Range range(const std::optional<std::string>& v, const char* name, const char* fallback) const {
        return parse_range(name, v.value_or(fallback));
    }
    double tolerance(double fallback) const {
        const double t = tol.value_or(fallback);
        if (!(t > 0.0) || !std::isfinite(t)) throw ConfigError("--tol must be positive");
        return t;
    }
    Sign sign_value() const { return sign == "minus" ? Sign::minus : Sign::plus; }
};

// ---- output

void emit(const Job& job, const std::string& payload, bool binary = false) {
    if (job.out == "-") {
        std::cout << payload;
        std::cout.flush();
        return;
    }
    std::ofstream os(job.out, binary ? std::ios::binary : std::ios::out);
    if (!os) throw ConfigError("cannot open '" + job.out + "' for writing");
    os << payload;
}

std::string cell(const Row& v) {
    if (v.is_number_float()) return format_double(v.get<double>());
    if (v.is_boolean()) return v.get<bool>() ? "1" : "0";
    if (v.is_number()) return v.dump();
    if (v.is_string()) return v.get<std::string>();
    return v.dump();
}

std::string render(const Job& job, const std::vector<std::string>& columns, const std::vector<Row>& rows) {
    if (job.format == "json") {
        Row j = Row::array();
        for (const Row& r : rows) j.push_back(r);
        return j.dump(2) + "\n";
    }
    if (job.format != "csv") throw ConfigError("--format " + job.format + " is only available for portrait");
    std::string s = std::string(kCsvHeader) + "\n";
    for (size_t i = 0; i < columns.size(); ++i) s += (i ? "," : "") + columns[i];
    s += "\n";
    for (const Row& r : rows) {
        for (size_t i = 0; i < columns.size(); ++i) s += (i ? "," : "") + cell(r.at(columns[i]));
        s += "\n";
    }
    return s;
}

double dist_identity(const Complex2x2& m) { return (m - Complex2x2::identity()).max_entry(); }

// ---- commands

int cmd_portrait(const Job& job) {
    const Range b = job.range(job.b, "b", "-6:6:120"), a = job.range(job.a, "a", "0:10:100");
    const Portrait p =
        phase_lock_scan(job.omega, GridAxis{b.lo, b.hi, b.n}, GridAxis{a.lo, a.hi, a.n}, job.tolerance(1e-6), job.threads);
    std::ostringstream os;
    if (job.format == "csv")
        write_portrait_csv(os, p);
    else if (job.format == "bin")
        write_portrait_binary(os, p);
    else if (job.format == "json")
        os << portrait_to_json(p, 2) << "\n";
    else
        throw ConfigError("unknown --format " + job.format);
    emit(job, os.str(), job.format == "bin");
    const double nc = p.not_converged_fraction();
    if (nc > 0.01) {
        std::fprintf(stderr, "not-converged fraction %s exceeds 1%%\n", format_double(nc).c_str());
        return kVerify;
    }
    return kOk;
}

int parse_int(const std::string& name, const std::string& text) {
    const Range r = parse_range(name, text);
    if (r.n != 1 || r.lo != std::round(r.lo)) throw ConfigError("--" + name + " must be an integer");
    return static_cast<int>(r.lo);
}

int cmd_adjacencies(const Job& job) {
    const int l = parse_int("l", job.l.value_or("0"));
    if (l < 0) throw ConfigError("--l must be a non-negative integer");
    const Range mu = job.range(job.mu, "mu", "0.01:2.5:250");
    if (mu.n < 2) throw ConfigError("--mu needs at least two points");
    const double tol = job.tolerance(1e-10);
    auto f = [&](double m) { return zeta(static_cast<double>(l), job.omega, m); };
    const auto roots = scan_roots(f, mu.lo, mu.hi, mu.n - 1, tol);
    // completeness probe: the root list must not change on a grid twice as fine
    const auto fine = scan_roots(f, mu.lo, mu.hi, 2 * (mu.n - 1), tol);
    bool stable = fine.size() == roots.size();
    for (size_t i = 0; stable && i < roots.size(); ++i) stable = std::abs(fine[i].x - roots[i].x) < 1e-8;

    std::vector<Row> rows;
    bool ok = stable;
    for (const Root& q : roots) {
        const PhysParams p{job.omega, l * job.omega, 2.0 * job.omega * q.x};
        const double pres = identity_residual(poincare_samples(p, 16, 1e-11));
        ok = ok && pres <= 1e-3;
        rows.push_back(Row{{"B", p.B}, {"A", p.A}, {"mu", q.x}, {"residual", q.residual}, {"poincare_residual", pres}});
    }
    emit(job, render(job, {"B", "A", "mu", "residual", "poincare_residual"}, rows));
    if (!stable) std::fprintf(stderr, "root list changed under grid refinement (%zu vs %zu)\n", roots.size(), fine.size());
    return ok ? kOk : kVerify;
}

// |det| over the product of absolute row sums (each floored at 1), which bounds it
double tridiag_residual(int l, cplx lambda, cplx mu) {
    double bound = 1.0;
    for (int j = 1; j <= l; ++j) {
        double s = std::abs(static_cast<double>((1 - j) * (l - j + 1)) + lambda);
        if (j < l) s += std::abs(mu) * j;
        if (j > 1) s += std::abs(mu) * (l - j + 1);
        bound *= std::max(s, 1.0);
    }
    return std::abs(tridiag_det(l, lambda, mu)) / bound;
}

int cmd_polypoints(const Job& job) {
    const Range lr = parse_range("l", job.l.value_or("1:4"));
    const int l_lo = static_cast<int>(lr.lo), l_hi = static_cast<int>(lr.hi);
    if (lr.lo != l_lo || lr.hi != l_hi || l_lo < 1) throw ConfigError("--l must be a range of positive integers lo:hi");
    std::vector<Row> rows;
    bool ok = true;
    RotationOptions ro;
    ro.throw_on_failure = false;
    for (int l = l_lo; l <= l_hi; ++l) {
        for (double mu : polynomial_mu_roots(l, job.omega)) {
            const PhysParams p{job.omega, l * job.omega, 2.0 * job.omega * mu};
            const double lambda = p.lambda();
            const RotationEstimate e = rotation_number(p, 1e-8, ro);
            const double rr = std::round(e.rho);
            const bool integer = std::abs(e.rho - rr) <= std::max(1e-6, e.uncertainty);
            const bool parity = std::fmod(std::abs(rr - l), 2.0) == 0.0;
            const bool in_range = rr >= 0.0 && rr <= l;
            const bool lo = lock_test(PhysParams{p.omega, p.B - 1e-3, p.A}, static_cast<int>(rr), 1e-11).locked;
            const bool hi = lock_test(PhysParams{p.omega, p.B + 1e-3, p.A}, static_cast<int>(rr), 1e-11).locked;
            const bool non_identity = dist_identity(monodromy_numeric(p, 1e-11).m) > 1e-3;
            ok = ok && integer && parity && in_range && lo != hi && non_identity;
            rows.push_back(Row{{"l", l},
                               {"B", p.B},
                               {"A", p.A},
                               {"mu", mu},
                               {"lambda", lambda},
                               {"residual", tridiag_residual(l, lambda, mu)},
                               {"rho", e.rho},
                               {"rho_integer", integer},
                               {"parity", parity},
                               {"in_range", in_range},
                               {"boundary", lo != hi},
                               {"non_identity", non_identity}});
        }
    }
    emit(job, render(job,
                     {"l", "B", "A", "mu", "lambda", "residual", "rho", "rho_integer", "parity", "in_range", "boundary",
                      "non_identity"},
                     rows));
    return ok ? kOk : kVerify;
}

int trace_all(const Job& job, const std::string& tag, Sign s, double r) {
    const Range a = job.range(job.a, "a", tag == "pasterho" || tag == "paste" ? "0.5:6:50" : "1:5:80");
    const Range b = job.range(job.b, "b", "0.01:6:300");
    if (a.n < 2 || b.n < 2) throw ConfigError("--a and --b need at least two points");
    if (!(a.lo > 0.0)) throw ConfigError("--a must start above 0");
    const double tol = job.tolerance(1e-10);
    const CurveEquation eq = curve_equation(tag, s, job.omega, r);
    const auto seeds = scan_roots([&](double B) { return eq(B, a.lo); }, b.lo, b.hi, b.n - 1, tol);
    TraceOptions opt;
    opt.allow_partial = true;
    std::vector<Curve> curves;
    for (const Root& seed : seeds) curves.push_back(trace_curve(eq, tag, s, seed.x, a.lo, a.hi, (a.hi - a.lo) / (a.n - 1), tol, opt));
    if (job.format == "json") {
        emit(job, curves_to_json(curves, 2) + "\n");
    } else if (job.format == "csv") {
        std::ostringstream os;
        write_curves_csv(os, curves);
        emit(job, os.str());
    } else {
        throw ConfigError("--format " + job.format + " is only available for portrait");
    }
    // level curves end where they meet a resonant line l -+ r in 2Z, on which their equation is not defined
    auto at_resonant_line = [&](const Curve& c) {
        if (tag != "pasterho" && tag != "paste") return false;
        const double l = c.points.back().B / job.omega;
        auto band = [](double x) { return std::abs(x - 2.0 * std::round(x / 2.0)); };
        return band(l - r) < 0.02 || band(l + r) < 0.02;
    };
    int partial = 0, resonant = 0;
    for (const Curve& c : curves) {
        if (c.complete) continue;
        if (!c.points.empty() && at_resonant_line(c))
            ++resonant;
        else
            ++partial;
    }
    if (resonant) std::fprintf(stderr, "%d of %zu curves end at a resonant line\n", resonant, curves.size());
    if (partial) std::fprintf(stderr, "%d of %zu curves lost track before the end of the A range\n", partial, curves.size());
    return partial ? kNumeric : kOk;
}

int cmd_boundary(const Job& job) {
    if (job.eq == "pasterho" || job.eq == "paste") {
        if (!job.r) throw ConfigError("--eq " + job.eq + " needs --r");
        return trace_all(job, job.eq, Sign::plus, *job.r);
    }
    if (job.eq != "e0" && job.eq != "e1") throw ConfigError("unknown --eq " + job.eq);
    return trace_all(job, job.eq, job.sign_value(), 0.0);
}

int cmd_levelcurve(const Job& job) {
    const double r = job.r.value_or(0.5);
    if (r == std::round(r)) throw ConfigError("--r must not be an integer");
    return trace_all(job, "pasterho", Sign::plus, r);
}

int cmd_rotnum(const Job& job) {
    const Range b = job.range(job.b, "b", "0"), a = job.range(job.a, "a", "1");
    const double tol = job.tolerance(1e-8);
    RotationOptions ro;
    ro.throw_on_failure = false;
    std::vector<Row> rows;
    bool all = true;
    for (int ia = 0; ia < a.n; ++ia)
        for (int ib = 0; ib < b.n; ++ib) {
            const RotationEstimate e = rotation_number(PhysParams{job.omega, b.at(ib), a.at(ia)}, tol, ro);
            all = all && e.converged;
            rows.push_back(Row{{"B", b.at(ib)},
                               {"A", a.at(ia)},
                               {"rho", e.rho},
                               {"uncertainty", e.uncertainty},
                               {"locked", e.locked},
                               {"converged", e.converged},
                               {"periods", e.periods_used}});
        }
    emit(job, render(job, {"B", "A", "rho", "uncertainty", "locked", "converged", "periods"}, rows));
    return all ? kOk : kNumeric;
}

int cmd_monodromy(const Job& job) {
    const Range b = job.range(job.b, "b", "0"), a = job.range(job.a, "a", "1");
    const double tol = job.tolerance(1e-11);
    std::vector<Row> rows;
    for (int ia = 0; ia < a.n; ++ia)
        for (int ib = 0; ib < b.n; ++ib) {
            const PhysParams p{job.omega, b.at(ib), a.at(ia)};
            const MonodromyMatrix m = monodromy_numeric(p, tol);
            const auto ev = m.eigenvalues();
            Row r{{"B", p.B}, {"A", p.A}};
            const std::pair<const char*, cplx> entries[] = {
                {"m11", m.m.m11}, {"m12", m.m.m12}, {"m21", m.m.m21}, {"m22", m.m.m22}};
            for (const auto& [name, z] : entries) {
                r[std::string(name) + "_re"] = z.real();
                r[std::string(name) + "_im"] = z.imag();
            }
            r["ev1_re"] = ev[0].real();
            r["ev1_im"] = ev[0].imag();
            r["ev2_re"] = ev[1].real();
            r["ev2_im"] = ev[1].imag();
            r["det_error"] = m.det_error;
            RotationOptions ro;
            ro.throw_on_failure = false;
            const RotationEstimate e = rotation_number(p, 1e-8, ro);
            const EigenvaluePrediction pred = predicted_eigenvalues(p, e);
            r["rho"] = e.rho;
            r["rho_uncertainty"] = e.uncertainty;
            // the relation holds off the locked areas only
            r["pred_distance"] = e.locked ? std::nan("") : pair_distance(ev, pred.pair);
            r["alt_distance"] = !e.locked && pred.alternate ? pair_distance(ev, *pred.alternate) : std::nan("");
            rows.push_back(r);
        }
    emit(job, render(job,
                     {"B", "A", "m11_re", "m11_im", "m12_re", "m12_im", "m21_re", "m21_im", "m22_re", "m22_im", "ev1_re",
                      "ev1_im", "ev2_re", "ev2_im", "det_error", "rho", "rho_uncertainty", "pred_distance", "alt_distance"},
                     rows));
    return kOk;
}

// lambda from --lambda, otherwise from omega and mu
double lambda_for(const Job& job, double mu) { return job.lambda ? *job.lambda : 1.0 / (4.0 * job.omega * job.omega) - mu * mu; }

int cmd_xi(const Job& job) {
    const double l = parse_range("l", job.l.value_or("1")).lo;
    const Range mu = job.range(job.mu, "mu", "0.01:5:100");
    const double tol = job.tolerance(1e-12);
    std::vector<Row> rows;
    for (int i = 0; i < mu.n; ++i) {
        const double m = mu.at(i), lam = lambda_for(job, m);
        const EquationValue v = xi(l, lam, m, tol);
        rows.push_back(Row{{"l", l},
                           {"mu", m},
                           {"lambda", lam},
                           {"re", v.value.real()},
                           {"im", v.value.imag()},
                           {"scale", v.scale},
                           {"normalized", v.normalized()}});
    }
    emit(job, render(job, {"l", "mu", "lambda", "re", "im", "scale", "normalized"}, rows));
    return kOk;
}

int cmd_polydet(const Job& job) {
    const int l = parse_int("l", job.l.value_or("2"));
    if (l < 1) throw ConfigError("--l must be a positive integer");
    const Range mu = job.range(job.mu, "mu", "0.01:3:100");
    std::vector<Row> rows;
    for (int i = 0; i < mu.n; ++i) {
        const double m = mu.at(i), lam = lambda_for(job, m);
        const cplx d = tridiag_det(l, lam, m);
        rows.push_back(Row{{"l", l}, {"mu", m}, {"lambda", lam}, {"re", d.real()}, {"im", d.imag()},
                           {"residual", tridiag_residual(l, lam, m)}});
    }
    emit(job, render(job, {"l", "mu", "lambda", "re", "im", "residual"}, rows));
    return kOk;
}

int cmd_verify(const Job& job) {
    if (job.suite != "fast" && job.suite != "full") throw ConfigError("--suite must be fast or full");
    const auto results = run_suite(job.suite == "full" ? Suite::full : Suite::fast, job.threads,
                                   [](const CheckResult& r) { std::fprintf(stderr, "%s\n", format_result(r).c_str()); });
    emit(job, report_json(results, 2) + "\n");
    for (const CheckResult& r : results)
        if (!r.passed) return kVerify;
    return kOk;
}

int numeric_exit(ErrorCode c) {
    switch (c) {
        case ErrorCode::NotConverged:
        case ErrorCode::LostTrack:
        case ErrorCode::StepUnderflow:
        case ErrorCode::ToleranceUnreachable:
        case ErrorCode::NonSummable:
        case ErrorCode::NoBracket:
        case ErrorCode::SeedTooLow:
            return kNumeric;
        default:
            return kConfig;  // parameters outside an equation's domain
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Phase-lock portraits, spectral equations and cross-checks for the Josephson-junction model"};
    app.require_subcommand(1);
    app.set_config("--config", "", "flat key=value file; flags on the command line take precedence");

    Job job;
    std::string b, a, mu, l;
    double lambda = 0.0, r = 0.0, tol = 0.0;
    app.add_option("--omega", job.omega, "frequency omega > 0")->capture_default_str();
    auto* ob = app.add_option("--b", b, "B value or range lo:hi:n");
    auto* oa = app.add_option("--a", a, "A value or range lo:hi:n");
    auto* omu = app.add_option("--mu", mu, "mu value or range lo:hi:n");
    auto* ol = app.add_option("--l", l, "l value, or integer range lo:hi for polypoints");
    auto* olam = app.add_option("--lambda", lambda, "lambda for xi and polydet (default 1/(4 omega^2) - mu^2)");
    auto* orr = app.add_option("--r", r, "non-integer rotation number of a level curve");
    auto* otol = app.add_option("--tol", tol, "tolerance (command-specific default)");
    app.add_option("--eq", job.eq, "boundary equation")->check(CLI::IsMember({"e0", "e1", "paste", "pasterho"}))->capture_default_str();
    app.add_option("--sign", job.sign, "boundary equation sign")->check(CLI::IsMember({"plus", "minus"}))->capture_default_str();
    app.add_option("--out", job.out, "output path, - for stdout")->capture_default_str();
    app.add_option("--format", job.format, "output format")->check(CLI::IsMember({"csv", "json", "bin"}))->capture_default_str();
    app.add_option("--threads", job.threads, "worker threads")->envname("HPLK_THREADS")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--suite", job.suite, "verify suite")->check(CLI::IsMember({"fast", "full"}))->capture_default_str();

    const std::vector<std::pair<std::string, std::string>> commands = {
        {"portrait", "rotation-number grid over (B, A)"},
        {"adjacencies", "adjacency points from the zeros of zeta_l"},
        {"polypoints", "points with polynomial solutions, with verification tags"},
        {"boundary", "trace phase-lock boundaries (or level curves with --eq pasterho)"},
        {"levelcurve", "trace a level curve rho = r"},
        {"rotnum", "rotation number at points or along a line"},
        {"monodromy", "numerical monodromy matrix"},
        {"xi", "the entire-solution equation xi_l"},
        {"polydet", "the three-diagonal determinant"},
        {"verify", "run the cross-validation suite and print a JSON report"},
    };
    for (const auto& [name, help] : commands) {
        auto* sc = app.add_subcommand(name, help);
        sc->fallthrough();
        sc->callback([&job, name = name] { job.command = name; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }
    if (*ob) job.b = b;
    if (*oa) job.a = a;
    if (*omu) job.mu = mu;
    if (*ol) job.l = l;
    if (*olam) job.lambda = lambda;
    if (*orr) job.r = r;
    if (*otol) job.tol = tol;

    try {
        if (!(job.omega > 0.0) || !std::isfinite(job.omega)) throw ConfigError("--omega must be positive");
        if (job.command == "portrait") return cmd_portrait(job);
        if (job.command == "adjacencies") return cmd_adjacencies(job);
        if (job.command == "polypoints") return cmd_polypoints(job);
        if (job.command == "boundary") return cmd_boundary(job);
        if (job.command == "levelcurve") return cmd_levelcurve(job);
        if (job.command == "rotnum") return cmd_rotnum(job);
        if (job.command == "monodromy") return cmd_monodromy(job);
        if (job.command == "xi") return cmd_xi(job);
        if (job.command == "polydet") return cmd_polydet(job);
        if (job.command == "verify") return cmd_verify(job);
        throw ConfigError("unknown command");
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kConfig;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return numeric_exit(e.code());
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kNumeric;
    }
}
