#pragma once
// C^infinity steps built from m(s) = e^{-1/s} / (e^{-1/s} + e^{-1/(1-s)}).
#include <cmath>

namespace lerexp {

struct StepValue {
    double v = 0, d1 = 0, d2 = 0;
};

/// m and its first two derivatives; 0 for s <= 0, 1 for s >= 1
inline StepValue smooth_step(double s)
{
    if (s <= 0) return {0.0, 0.0, 0.0};
    if (s >= 1) return {1.0, 0.0, 0.0};
    double psi = 1.0 / s - 1.0 / (1.0 - s);
    // m = 1 / (1 + e^psi), evaluated without overflow
    double m = psi > 0 ? std::exp(-psi) / (1.0 + std::exp(-psi)) : 1.0 / (1.0 + std::exp(psi));
    double g = 1.0 / (s * s) + 1.0 / ((1 - s) * (1 - s));
    double gp = -2.0 / (s * s * s) + 2.0 / ((1 - s) * (1 - s) * (1 - s));
    double q = m * (1 - m);
    double d1 = q * g;
    double d2 = d1 * (1 - 2 * m) * g + q * gp;
    return {m, d1, d2};
}

/// equal to 1 for x <= lo, 0 for x >= hi
struct Cutoff {
    double lo = 0.25, hi = 0.75;
    StepValue at(double x) const
    {
        double w = hi - lo;
        StepValue s = smooth_step((x - lo) / w);
        return {1.0 - s.v, -s.d1 / w, -s.d2 / (w * w)};
    }
    double operator()(double x) const { return at(x).v; }
    /// transition window scaled by f, keeping the plateau [0, lo]
    Cutoff widened(double f) const { return {lo, lo + (hi - lo) * f}; }
};

}  // namespace lerexp
