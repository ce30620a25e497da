#include "lerexp/exponent.hpp"

#include <cmath>
#include <fmt/format.h>

namespace lerexp {

namespace {

double surd_value(const std::map<long long, Rat>& s)
{
    double v = 0.0;
    for (const auto& [n, q] : s)
        v += boost::rational_cast<double>(q) * std::sqrt(double(n));
    return v;
}

}  // namespace

std::optional<Rat> rationalize(double x, long long qmax, double tol)
{
    if (!std::isfinite(x)) return std::nullopt;
    // continued fraction convergents
    long long h0 = 0, h1 = 1, k0 = 1, k1 = 0;
    double y = x;
    for (int it = 0; it < 64; ++it) {
        double a = std::floor(y);
        if (std::fabs(a) > 9e15) break;
        long long ai = (long long)a;
        long long h2 = ai * h1 + h0, k2 = ai * k1 + k0;
        if (k2 > qmax || k2 <= 0) break;
        h0 = h1; h1 = h2; k0 = k1; k1 = k2;
        if (std::fabs(double(h1) / double(k1) - x) < tol) return Rat(h1, k1);
        double frac = y - a;
        if (frac < 1e-300) break;
        y = 1.0 / frac;
    }
    if (k1 > 0 && std::fabs(double(h1) / double(k1) - x) < tol) return Rat(h1, k1);
    return std::nullopt;
}

Exponent::Exponent(Rat q)
{
    if (q.numerator() != 0) re_[1] = q;
    refresh();
}

void Exponent::clean(Surds& s)
{
    for (auto it = s.begin(); it != s.end();) {
        if (it->second.numerator() == 0) it = s.erase(it);
        else ++it;
    }
}

void Exponent::refresh()
{
    if (!exact_) return;
    clean(re_);
    clean(im_);
    fre_ = surd_value(re_);
    fim_ = surd_value(im_);
}

Exponent Exponent::from_double(double re, double im)
{
    Exponent e;
    auto qr = rationalize(re), qi = rationalize(im);
    if (qr && qi) {
        if (qr->numerator() != 0) e.re_[1] = *qr;
        if (qi->numerator() != 0) e.im_[1] = *qi;
        e.refresh();
    } else {
        e.exact_ = false;
        e.fre_ = re;
        e.fim_ = im;
    }
    return e;
}

Exponent Exponent::sqrt_of(Rat x)
{
    if (x.numerator() < 0) throw std::domain_error("sqrt_of: negative argument");
    Exponent e;
    if (x.numerator() == 0) return e;
    long long p = x.numerator(), q = x.denominator();
    // sqrt(p/q) = sqrt(p*q)/q
    if (p > 0 && q > 0 && p <= 1000000000000LL / q) {
        long long n = p * q, s = 1;
        for (long long f = 2; f * f <= n; ++f) {
            while (n % (f * f) == 0) {
                n /= f * f;
                s *= f;
            }
        }
        e.re_[n] = Rat(s, q);
        e.refresh();
        return e;
    }
    e.exact_ = false;
    e.fre_ = std::sqrt(boost::rational_cast<double>(x));
    return e;
}

Exponent Exponent::make_complex(const Exponent& re, const Exponent& im)
{
    if (!re.is_real() || !im.is_real()) throw std::invalid_argument("make_complex: parts must be real");
    Exponent e;
    if (re.exact_ && im.exact_) {
        e.re_ = re.re_;
        e.im_ = im.re_;
        e.refresh();
    } else {
        e.exact_ = false;
        e.fre_ = re.fre_;
        e.fim_ = im.fre_;
    }
    return e;
}

bool Exponent::is_real() const
{
    return exact_ ? im_.empty() : std::fabs(fim_) < EXPONENT_TOL;
}

std::optional<long long> Exponent::as_integer() const
{
    if (exact_) {
        if (!im_.empty()) return std::nullopt;
        if (re_.empty()) return 0;
        if (re_.size() != 1 || re_.begin()->first != 1) return std::nullopt;
        const Rat& q = re_.begin()->second;
        if (q.denominator() != 1) return std::nullopt;
        return q.numerator();
    }
    double r = std::round(fre_);
    if (std::fabs(fre_ - r) < EXPONENT_TOL && std::fabs(fim_) < EXPONENT_TOL) return (long long)r;
    return std::nullopt;
}

Exponent Exponent::real_part() const
{
    Exponent e = *this;
    if (exact_) {
        e.im_.clear();
        e.refresh();
    } else {
        e.fim_ = 0.0;
    }
    return e;
}

Exponent Exponent::operator-() const
{
    Exponent e = *this;
    if (exact_) {
        for (auto& kv : e.re_) kv.second = -kv.second;
        for (auto& kv : e.im_) kv.second = -kv.second;
        e.refresh();
    } else {
        e.fre_ = -fre_;
        e.fim_ = -fim_;
    }
    return e;
}

Exponent& Exponent::operator+=(const Exponent& o)
{
    if (exact_ && o.exact_) {
        for (const auto& [n, q] : o.re_) re_[n] += q;
        for (const auto& [n, q] : o.im_) im_[n] += q;
        refresh();
    } else {
        fre_ += o.fre_;
        fim_ += o.fim_;
        exact_ = false;
        re_.clear();
        im_.clear();
    }
    return *this;
}

Exponent& Exponent::operator*=(Rat q)
{
    if (exact_) {
        for (auto& kv : re_) kv.second *= q;
        for (auto& kv : im_) kv.second *= q;
        refresh();
    } else {
        double f = boost::rational_cast<double>(q);
        fre_ *= f;
        fim_ *= f;
    }
    return *this;
}

bool operator==(const Exponent& a, const Exponent& b)
{
    if (a.exact_ && b.exact_) return a.re_ == b.re_ && a.im_ == b.im_;
    return std::fabs(a.fre_ - b.fre_) < EXPONENT_TOL && std::fabs(a.fim_ - b.fim_) < EXPONENT_TOL;
}

int compare(const Exponent& a, const Exponent& b)
{
    if (a == b) return 0;
    if (std::fabs(a.fre_ - b.fre_) >= EXPONENT_TOL) return a.fre_ < b.fre_ ? -1 : 1;
    if (std::fabs(a.fim_ - b.fim_) >= EXPONENT_TOL) return a.fim_ < b.fim_ ? -1 : 1;
    // numerically indistinguishable but exactly different values
    if (a.exact_ && b.exact_) {
        if (a.re_ != b.re_) return a.re_ < b.re_ ? -1 : 1;
        return a.im_ < b.im_ ? -1 : 1;
    }
    return 0;
}

std::string Exponent::str() const
{
    auto part = [](const Surds& s) {
        std::string out;
        for (const auto& [n, q] : s) {
            std::string t = q.denominator() == 1 ? fmt::format("{}", q.numerator())
                                                 : fmt::format("{}/{}", q.numerator(), q.denominator());
            if (n != 1) t += fmt::format("*sqrt({})", n);
            if (!out.empty() && t[0] != '-') out += "+";
            out += t;
        }
        return out.empty() ? std::string("0") : out;
    };
    if (!exact_) {
        if (std::fabs(fim_) < EXPONENT_TOL) return fmt::format("{:.12g}", fre_);
        return fmt::format("{:.12g}{:+.12g}i", fre_, fim_);
    }
    if (im_.empty()) return part(re_);
    return "(" + part(re_) + ")+(" + part(im_) + ")i";
}

}  // namespace lerexp
