#pragma once

#include <functional>
#include <string>
#include <vector>

#include "hplk/equation.hpp"
#include "hplk/heun.hpp"

namespace hplk {

enum class Sign { plus = 1, minus = -1 };
inline double sign_value(Sign s) noexcept { return s == Sign::plus ? 1.0 : -1.0; }
const char* to_string(Sign s) noexcept;

// lambda R_{1,11} + mu^2 R_{1,21}, M_k with D = k(k+l)
EquationValue xi(cplx l, cplx lambda, cplx mu, double tol = 1e-12);
// xi_l(1/(4 omega^2) - mu^2, mu)
EquationValue zeta(cplx l, double omega, cplx mu, double tol = 1e-12);

// det(H + lambda Id) for the l x l three-diagonal H
cplx tridiag_det(int l, cplx lambda, cplx mu);
// polynomial solution (degree <= l-1, a_0 = 1) of the equation with n = 1 - l, valid at roots of tridiag_det
SeriesSolution polynomial_solution(int l, cplx lambda, cplx mu);
// mu > 0 with tridiag_det(l, 1/(4 omega^2) - mu^2, mu) = 0
std::vector<double> polynomial_mu_roots(int l, double omega);

// (b+1)(b+n-2) R_{1,11} T_{0,11} + mu^2 R_{1,21} T_{0,21}
EquationValue pasting_value(const HeunParams& p, double tol = 1e-12);
// (2-n+lambda)(4-n) T_{2,11} - mu^2 (n-2) T_{2,21}, b = 0
EquationValue resonant_pasting_value(cplx n, cplx lambda, cplx mu, double tol = 1e-12);
// pasting equation at b = (r-l)/2, n = l+1, lambda = 1/(4 omega^2) - mu^2
EquationValue level_curve_value(double r, double l, double omega, cplx mu, double tol = 1e-12);
constexpr double kResonantLineBand = 1e-3;

// R_{0,21} + s omega l (R_{0,21} - R_{0,11}), D = k^2 - l^2/4
EquationValue boundary_e0(double l, double omega, cplx mu, Sign s, double tol = 1e-12);
// R_{1,11} + s 2 omega mu (R_{1,11} - R_{1,21}), D = (k-1/2)^2 - l^2/4
EquationValue boundary_e1(double l, double omega, cplx mu, Sign s, double tol = 1e-12);

// ---- root finding and continuation

struct Root {
    double x = 0.0;
    double residual = 0.0;  // normalized |value| at x
};

// bracketed root of a real function (TOMS 748), to relative width ~ 1e-15
double find_root_1d(const std::function<double(double)>& f, double a, double b);
// root of a normalized equation on [a, b]: sign change of Re(value)/scale if present, otherwise
// minimization of |value|/scale followed by Gauss-Newton refinement; NoBracket when no candidate
Root find_root_1d(const std::function<EquationValue(double)>& f, double a, double b, double tol);
// all roots on [lo, hi] from n grid intervals; sign changes at poles are discarded by residual
std::vector<Root> scan_roots(const std::function<EquationValue(double)>& f, double lo, double hi, int n,
                             double tol);

struct CurvePoint {
    double B = 0.0, A = 0.0, residual = 0.0;
};
struct Curve {
    std::string equation;
    Sign sign = Sign::plus;
    std::vector<CurvePoint> points;
    bool complete = true;
};
using CurveEquation = std::function<EquationValue(double B, double A)>;

// boundary (e0, e1) or level-curve (paste via d-vectors, pasterho) equation in physical coordinates
CurveEquation curve_equation(const std::string& tag, Sign s, double omega, double r = 0.0);

struct TraceOptions {
    double search_halfwidth = 0.05;  // B-window around the predicted root
    int max_halvings = 6;
    bool allow_partial = false;  // stop instead of throwing LostTrack after the first point
};

// continue a root B(A) from (B_seed, A_lo) to A_hi in steps of `step`, halving on failure
Curve trace_curve(const CurveEquation& eq, const std::string& tag, Sign s, double B_seed, double A_lo, double A_hi,
                  double step, double tol, const TraceOptions& opt = {});

}  // namespace hplk
