#pragma once

#include <array>
#include <optional>
#include <cstdint>
#include <utility>
#include <vector>

#include "hplk/heun.hpp"
#include "hplk/matrix.hpp"

namespace hplk {

// dphi/dtau = -sin(phi)/omega + l + 2 mu cos(tau)
struct PhysParams {
    double omega = 1.0, B = 0.0, A = 0.0;

    double l() const noexcept { return B / omega; }
    double mu() const noexcept { return A / (2.0 * omega); }
    double lambda() const noexcept { return 1.0 / (4.0 * omega * omega) - mu() * mu(); }
    HeunParams heun(cplx b) const noexcept { return {l() + 1.0, lambda(), mu(), b}; }
};

// lifted phi(tau_span) from phi(0) = phi0
double flow_phi(const PhysParams& p, double phi0, double tau_span, double tol);

struct RotationEstimate {
    double rho = 0.0;  // turns per 2 pi period of tau
    double uncertainty = 0.0;
    long periods_used = 0;
    bool locked = false;     // a fixed point of the period map was found
    bool converged = true;
};

struct RotationOptions {
    int coarse_periods = 4;  // direct lift average fixing the integer part (error < 1/coarse_periods)
    double flow_tol = 0.0;   // 0: chosen from the requested tolerance
    bool throw_on_failure = true;
};

// the period map lifts a projective map of the plane, so rho (turns per period) is its rotation angle
// plus the integer fixed by a short direct lift average; locked when that map has a fixed line
RotationEstimate rotation_number(const PhysParams& p, double tol, const RotationOptions& opt = {});

// (phi0, phi(2 pi)) for phi0 = -pi + 2 pi i / n
std::vector<std::pair<double, double>> poincare_samples(const PhysParams& p, int nsamples, double tol);
// max_i |phi1 - phi0 - 2 pi m| with m the nearest common integer shift
double identity_residual(const std::vector<std::pair<double, double>>& samples);

// fixed-point test for the lift F^q(x) - x - 2 pi r on the circle (q = iterates);
// g_min > 0 means rho > r/q, g_max < 0 means rho < r/q
struct LockTest {
    bool locked = false;
    double g_min = 0.0, g_max = 0.0;  // extrema of F^q(x) - x - 2 pi r
    long periods_used = 0;
};
LockTest lock_test(const PhysParams& p, int r, double flow_tol, int samples = 24, int iterates = 1);

struct MonodromyMatrix {
    Complex2x2 m;
    double det_error = 0.0;
    std::array<cplx, 2> eigenvalues() const;
};
// transport of (v, u) once around |z| = 1 from z = 1 in the basis of initial vectors e1, e2
MonodromyMatrix monodromy_numeric(const PhysParams& p, double tol);
// (v, u) at z = 1 for a Heun solution E with E(1), E'(1): v = e^{-mu z} E, u = 2 i omega z v'
std::array<cplx, 2> heun_to_linear(const PhysParams& p, cplx e, cplx de);

// monodromy eigenvalues predicted by rho off the locked areas: {e^{pi i (rho - l)}, e^{-pi i (rho + l)}}; within 10 uncertainties of an
// integer the sign branch is not resolved and the negated pair is reported as well
struct EigenvaluePrediction {
    std::array<cplx, 2> pair;
    std::optional<std::array<cplx, 2>> alternate;
};
EigenvaluePrediction predicted_eigenvalues(const PhysParams& p, const RotationEstimate& rho);
// max distance after the better of the two matchings
double pair_distance(const std::array<cplx, 2>& a, const std::array<cplx, 2>& b);

struct GridAxis {
    double lo = 0.0, hi = 0.0;
    int n = 1;
    double at(int i) const noexcept { return n <= 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / (n - 1); }
};

enum CellFlag : std::uint8_t { kLocked = 1, kBoundary = 2, kNotConverged = 4 };

struct Portrait {
    GridAxis b_axis, a_axis;
    double omega = 1.0;
    double tol = 1e-6;
    std::vector<RotationEstimate> cells;  // row-major: row = A index, column = B index
    std::vector<std::uint8_t> flags;

    const RotationEstimate& at(int ia, int ib) const { return cells[static_cast<size_t>(ia) * b_axis.n + ib]; }
    std::uint8_t flag(int ia, int ib) const { return flags[static_cast<size_t>(ia) * b_axis.n + ib]; }
    std::vector<std::pair<int, int>> boundary_cells() const;
    double not_converged_fraction() const;
};

// threads <= 0 uses the hardware concurrency
Portrait phase_lock_scan(double omega, GridAxis b, GridAxis a, double tol, int threads = 0);

enum class Side { left, right };
// edge of area r at fixed A: locked at p.B, bisected outward to width tol
double boundary_bisect(const PhysParams& p, int r, Side side, double tol);
// explicit bracket: locked(B_in) at r, unlocked(B_out)
double boundary_bisect(const PhysParams& p, int r, double B_in, double B_out, double tol);
// a B in [lo, hi] with rho = r at fixed (omega, A), scanning with the given step
std::optional<double> find_locked_B(double omega, double A, int r, double lo, double hi, double step);

}  // namespace hplk
