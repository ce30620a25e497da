#pragma once
// Reference limiting resolvent for one radial mode by two-sided ODE integration, and the
// log-phase experiment for the long-range ODE (-1 + m/r) u'' - sigma^2 u = 0.
#include <functional>
#include <string>
#include <vector>

#include "lerexp/zf_solver.hpp"

namespace lerexp {

struct OracleRun {
    RadialOperator op;
    int l = 0;
    double sigma = 0.1;
    std::function<cplx(double)> forcing;  // radial forcing f(r)
    double f_support = 20.0;              // f = 0 (to double precision) for r > f_support
    double R_max = 0.0;                   // matching radius; 0 selects max(40/sigma, 2 tail_radius, f_support)
    int bc_order = 3;                     // correction terms in the outgoing condition
    double rtol = 1e-13;
    double matching_radius() const;
};

/// c_0 = 1, ..., c_N of the outgoing series e^{i sigma r} r^{-(d-1)/2} sum c_n r^{-n}
std::vector<cplx> outgoing_coefficients(const RadialOperator& op, int l, double sigma, int N);

/// R(sigma^2 + i0) f on the grid: regular at 0, outgoing at infinity, exact derivative samples
ModeProfile limiting_resolvent(const OracleRun& run, const Grid& grid);

struct OracleReport {
    std::vector<double> sigma, err, weight;
    double p = 0.0, p_lo = 0.0, p_hi = 0.0;  // fitted err ~ sigma^p and its 95% interval
    std::string to_csv() const;              // "sigma, err, weight"
    std::string summary() const;
};

/// err(sigma) = sup_r |eval(sigma, r) - oracle(sigma, r)| (1 + r)^{-weight_exponent} over [r_lo, min(r_hi, c_hi/sigma)]
using SigmaRadialFunction = std::function<cplx(double sigma, double r)>;
OracleReport compare(const SigmaRadialFunction& eval, const RadialOperator& op, int l,
                     const std::function<cplx(double)>& forcing, const std::vector<double>& sigmas,
                     double weight_exponent, const Grid& grid, double r_lo, double r_hi, double c_hi = 10.0);
/// the power-law fit used by compare
OracleReport fit_power(const std::vector<double>& sigmas, const std::vector<double>& errs, double weight_exponent);

struct PhaseFit {
    double a = 0.0, b = 0.0, rms = 0.0;
};
/// fits arg(u e^{-i sigma r}) = a + b log r over [r0, r1]; expected b = sigma m / 2
PhaseFit hypergeometric_phase(double m, double sigma, double r0, double r1);

}  // namespace lerexp
