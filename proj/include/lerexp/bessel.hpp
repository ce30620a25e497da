#pragma once
// Bessel J, Y and H+ = J + iY of real order nu >= 0 at x > 0.
// Power series for x <= 12, Hankel asymptotics (orders nu - floor(nu) and +1, then forward
// recurrence) for x > 12, closed finite sums for H+ at half-integer order.
#include <complex>

namespace lerexp {

enum class BesselKind { J, Y, Hplus };

constexpr double BESSEL_SWITCH = 12.0;
constexpr int BESSEL_ASYMPTOTIC_TERMS = 30;

std::complex<double> bessel(BesselKind kind, double nu, double x);

/// e^{-ix} H+_nu(x), without forming the phase
std::complex<double> hankel_reduced(double nu, double x);

struct BesselValue {
    std::complex<double> v, dv;
};
/// value and x-derivative
BesselValue bessel_d(BesselKind kind, double nu, double x);

}  // namespace lerexp
