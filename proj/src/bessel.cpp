#include "lerexp/bessel.hpp"

#include <cmath>
#include <stdexcept>

namespace lerexp {

namespace {

using cplx = std::complex<double>;
const double PI = 3.14159265358979323846;
const double EULER_GAMMA = 0.57721566490153286061;

bool near_integer(double nu, long* n)
{
    double r = std::round(nu);
    if (std::fabs(nu - r) < 1e-9) {
        *n = long(r);
        return true;
    }
    return false;
}

bool half_integer(double nu, long* n)
{
    double r = std::round(nu - 0.5);
    if (std::fabs(nu - 0.5 - r) < 1e-12 && r >= 0) {
        *n = long(r);
        return true;
    }
    return false;
}

// 1/Gamma(z), zero at the poles
double rgamma(double z)
{
    if (z <= 0 && std::fabs(z - std::round(z)) < 1e-14) return 0.0;
    return 1.0 / std::tgamma(z);
}

// J_mu(x) by its power series, any real mu (negative integers via J_{-n} = (-1)^n J_n)
double j_series(double mu, double x)
{
    long n;
    if (mu < 0 && near_integer(mu, &n)) return (n % 2 ? -1.0 : 1.0) * j_series(-double(n), x);
    double q = -0.25 * x * x;
    double g = rgamma(mu + 1);
    double t, sum;
    int m0 = 0;
    if (g == 0.0) {
        // leading terms vanish; start at the first m with m + mu + 1 > 0
        m0 = int(std::ceil(-mu - 1 + 1e-12));
        t = std::pow(0.5 * x, 2 * m0 + mu) * rgamma(m0 + mu + 1) / std::tgamma(m0 + 1) * (m0 % 2 ? -1 : 1);
    } else {
        t = std::pow(0.5 * x, mu) * g;
    }
    sum = t;
    for (int m = m0 + 1; m < 500; ++m) {
        t *= q / (m * (m + mu));
        sum += t;
        if (std::fabs(t) < 1e-17 * std::fabs(sum) && m > x) break;
    }
    return sum;
}

double digamma_int(int m)  // psi(m), m >= 1
{
    double s = -EULER_GAMMA;
    for (int k = 1; k < m; ++k) s += 1.0 / k;
    return s;
}

// Y_n(x), integer n >= 0, by its series
double y_series_int(long n, double x)
{
    double h = 0.5 * x;
    double s1 = 0.0;
    if (n > 0) {
        double fact = std::tgamma(double(n));  // (n-1)!
        for (long k = 0; k < n; ++k) {
            // (n-k-1)!/k! (x/2)^{2k-n}
            s1 += fact * std::pow(h, 2.0 * k - n);
            if (k + 1 < n) fact *= 1.0 / double((n - k - 1) * (k + 1));
        }
    }
    double q = -h * h;
    double t = std::pow(h, double(n)) / std::tgamma(double(n + 1));  // k = 0
    double s2 = 0.0;
    for (long k = 0; k < 500; ++k) {
        double term = t * (digamma_int(int(k + 1)) + digamma_int(int(n + k + 1)));
        s2 += term;
        if (std::fabs(term) < 1e-17 * std::fabs(s2) && k > x) break;
        t *= q / double((k + 1) * (n + k + 1));
    }
    return (2.0 / PI) * j_series(double(n), x) * std::log(h) - s1 / PI - s2 / PI;
}

double y_series(double nu, double x)
{
    long n;
    if (near_integer(nu, &n)) return y_series_int(n, x);
    return (j_series(nu, x) * std::cos(nu * PI) - j_series(-nu, x)) / std::sin(nu * PI);
}

// Hankel asymptotic expansion of e^{-ix} H+_nu(x)
cplx h_asymptotic(double nu, double x)
{
    double mu = 4 * nu * nu;
    cplx sum = 1.0, term = 1.0;
    double prev = 1.0;
    for (int k = 1; k <= BESSEL_ASYMPTOTIC_TERMS; ++k) {
        term *= cplx(0.0, 1.0) * (mu - (2.0 * k - 1) * (2.0 * k - 1)) / (8.0 * k * x);
        double a = std::abs(term);
        if (a > prev) break;  // series has started to diverge
        sum += term;
        prev = a;
        if (a < 1e-17) break;
    }
    return std::sqrt(2.0 / (PI * x)) * std::exp(cplx(0.0, -0.5 * nu * PI - 0.25 * PI)) * sum;
}

// e^{-ix} H+ at order n + 1/2 from the finite sum
cplx h_half(long n, double x)
{
    cplx sum = 0.0, mi = cplx(0.0, 1.0) / (2.0 * x);
    cplx p = 1.0;
    double c = 1.0;  // (n+k)!/(k!(n-k)!)
    for (long k = 0; k <= n; ++k) {
        if (k > 0) {
            c *= double((n + k) * (n - k + 1)) / double(k);
            p *= mi;
        }
        sum += c * p;
    }
    cplx pre = std::pow(cplx(0.0, -1.0), double(n + 1));
    return std::sqrt(2.0 / (PI * x)) * pre * sum;
}

// e^{-ix} H+ for x > BESSEL_SWITCH; the recurrence is linear with real coefficients
cplx h_large(double nu, double x)
{
    long n;
    if (half_integer(nu, &n)) return h_half(n, x);
    double fl = std::floor(nu + 1e-12);
    double nu0 = nu - fl;
    if (nu0 < 0) nu0 = 0;
    cplx a = h_asymptotic(nu0, x);
    if (fl < 0.5) return a;
    cplx b = h_asymptotic(nu0 + 1, x);
    for (double m = nu0 + 1; m < nu - 0.5; m += 1.0) {
        cplx c = (2 * m / x) * b - a;
        a = b;
        b = c;
    }
    return b;
}

}  // namespace

cplx bessel(BesselKind kind, double nu, double x)
{
    if (!(x > 0)) throw std::domain_error("bessel: x must be positive");
    if (nu < 0) throw std::domain_error("bessel: order must be nonnegative");
    long n;
    if (x <= BESSEL_SWITCH) {
        if (kind == BesselKind::J) return j_series(nu, x);
        if (half_integer(nu, &n)) {
            cplx h = h_half(n, x) * std::exp(cplx(0.0, x));
            return kind == BesselKind::Y ? cplx(h.imag()) : cplx(j_series(nu, x), h.imag());
        }
        double y = y_series(nu, x);
        return kind == BesselKind::Y ? cplx(y) : cplx(j_series(nu, x), y);
    }
    cplx h = h_large(nu, x) * std::exp(cplx(0.0, x));
    if (kind == BesselKind::J) return h.real();
    if (kind == BesselKind::Y) return h.imag();
    return h;
}

cplx hankel_reduced(double nu, double x)
{
    if (!(x > 0)) throw std::domain_error("hankel_reduced: x must be positive");
    if (nu < 0) throw std::domain_error("hankel_reduced: order must be nonnegative");
    long n;
    if (half_integer(nu, &n)) return h_half(n, x);
    if (x > BESSEL_SWITCH) return h_large(nu, x);
    return std::exp(cplx(0.0, -x)) * cplx(j_series(nu, x), y_series(nu, x));
}

BesselValue bessel_d(BesselKind kind, double nu, double x)
{
    // C'_nu = (nu/x) C_nu - C_{nu+1}
    cplx v = bessel(kind, nu, x), v1 = bessel(kind, nu + 1, x);
    return {v, (nu / x) * v - v1};
}

}  // namespace lerexp
