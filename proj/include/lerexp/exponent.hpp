#pragma once
// Exact algebraic exponents: rational + sum of rational*sqrt(squarefree) on each of the
// real and imaginary parts, with a floating fallback when no exact form is known.
#include <boost/rational.hpp>
#include <complex>
#include <map>
#include <optional>
#include <string>

namespace lerexp {

using Rat = boost::rational<long long>;

/// tolerance used for equality when at least one operand is inexact
constexpr double EXPONENT_TOL = 1e-9;

class Exponent {
public:
    Exponent() = default;
    Exponent(int n) : Exponent(Rat(n)) {}
    Exponent(long long n) : Exponent(Rat(n)) {}
    explicit Exponent(Rat q);

    /// rationalise when |x - p/q| < 1e-14 with q <= 1e6, otherwise keep as a float
    static Exponent from_double(double re, double im = 0.0);
    /// exact square root of a nonnegative rational, simplified to a surd
    static Exponent sqrt_of(Rat x);
    static Exponent make_complex(const Exponent& re, const Exponent& im);

    double re() const { return fre_; }
    double im() const { return fim_; }
    std::complex<double> value() const { return {fre_, fim_}; }
    bool exact() const { return exact_; }
    bool is_real() const;
    /// integer value if the exponent is exactly (or within tolerance) an integer
    std::optional<long long> as_integer() const;

    Exponent real_part() const;
    Exponent operator-() const;
    Exponent& operator+=(const Exponent& o);
    Exponent& operator-=(const Exponent& o) { return *this += -o; }
    Exponent& operator*=(Rat q);
    friend Exponent operator+(Exponent a, const Exponent& b) { return a += b; }
    friend Exponent operator-(Exponent a, const Exponent& b) { return a -= b; }
    friend Exponent operator*(Exponent a, Rat q) { return a *= q; }
    friend Exponent operator*(Rat q, Exponent a) { return a *= q; }

    friend bool operator==(const Exponent& a, const Exponent& b);
    friend bool operator!=(const Exponent& a, const Exponent& b) { return !(a == b); }
    /// total order consistent with tolerance equality: by real part, then imaginary part
    friend int compare(const Exponent& a, const Exponent& b);
    friend bool operator<(const Exponent& a, const Exponent& b) { return compare(a, b) < 0; }

    std::string str() const;

private:
    using Surds = std::map<long long, Rat>;  // radicand -> coefficient, radicand 1 = rational part
    Surds re_, im_;
    bool exact_ = true;
    double fre_ = 0.0, fim_ = 0.0;
    void refresh();
    static void clean(Surds& s);
};

/// best rational approximation p/q with q <= qmax, if within tol
std::optional<Rat> rationalize(double x, long long qmax = 1000000, double tol = 1e-14);

}  // namespace lerexp
