#include "lerexp/phg_series.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <sstream>

namespace lerexp {

namespace {

bool below_error(const Exponent& j, double err) { return j.re() < err - EXPONENT_TOL; }

bool term_less(const PhgTerm& a, const Exponent& j, int k)
{
    int c = compare(a.j, j);
    return c != 0 ? c < 0 : a.k < k;
}

double binom(int n, int k)
{
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

void require_same_var(const PhgSeries& a, const PhgSeries& b)
{
    if (a.var() != b.var())
        throw ValidationError(fmt::format("PhgSeries: variable mismatch ({} vs {})", var_name(a.var()), var_name(b.var())));
}

}  // namespace

const char* var_name(Var v)
{
    switch (v) {
    case Var::rho: return "rho";
    case Var::r: return "r";
    case Var::rhat: return "rhat";
    case Var::rhohat: return "rhohat";
    }
    return "?";
}

Var parse_var(const std::string& s)
{
    if (s == "rho") return Var::rho;
    if (s == "r") return Var::r;
    if (s == "rhat") return Var::rhat;
    if (s == "rhohat") return Var::rhohat;
    throw ValidationError("unknown series variable '" + s + "'");
}

PhgSeries PhgSeries::monomial(Var v, const Exponent& j, int k, cplx c, double error_order)
{
    PhgSeries s(v, error_order);
    s.add_term(j, k, c);
    return s;
}

cplx PhgSeries::coeff(const Exponent& j, int k) const
{
    auto it = std::lower_bound(terms_.begin(), terms_.end(), 0,
                               [&](const PhgTerm& t, int) { return term_less(t, j, k); });
    if (it != terms_.end() && it->k == k && it->j == j) return it->c;
    return 0.0;
}

void PhgSeries::add_term(const Exponent& j, int k, cplx c)
{
    if (k < 0) throw ValidationError("PhgSeries: negative log power");
    if (!below_error(j, err_) || c == cplx(0.0)) return;
    auto it = std::lower_bound(terms_.begin(), terms_.end(), 0,
                               [&](const PhgTerm& t, int) { return term_less(t, j, k); });
    if (it != terms_.end() && it->k == k && it->j == j) {
        it->c += c;
        if (it->c == cplx(0.0)) terms_.erase(it);
    } else {
        terms_.insert(it, PhgTerm{j, k, c});
    }
}

PhgSeries PhgSeries::truncated(double e) const
{
    PhgSeries out(var_, std::min(e, err_));
    for (const auto& t : terms_) out.add_term(t.j, t.k, t.c);
    return out;
}

PhgSeries PhgSeries::pruned(double tol) const
{
    double m = max_abs_coeff();
    PhgSeries out(var_, err_);
    for (const auto& t : terms_)
        if (std::abs(t.c) > tol * m) out.terms_.push_back(t);
    return out;
}

PhgSeries& PhgSeries::operator+=(const PhgSeries& o)
{
    require_same_var(*this, o);
    double e = std::min(err_, o.err_);
    if (e < err_) *this = truncated(e);
    for (const auto& t : o.terms_) add_term(t.j, t.k, t.c);
    return *this;
}

PhgSeries& PhgSeries::operator-=(const PhgSeries& o) { return *this += o * cplx(-1.0); }

PhgSeries& PhgSeries::operator*=(cplx s)
{
    if (s == cplx(0.0)) {
        terms_.clear();
        return *this;
    }
    for (auto& t : terms_) t.c *= s;
    return *this;
}

cplx PhgSeries::evaluate(double x) const
{
    if (!(x > 0.0)) throw std::domain_error("PhgSeries::evaluate: x must be positive");
    double lx = std::log(x);
    cplx sum = 0.0;
    for (const auto& t : terms_) sum += t.c * std::exp(t.j.value() * lx) * std::pow(lx, t.k);
    return sum;
}

double PhgSeries::pi_min() const
{
    double m = INF;
    for (const auto& t : terms_) m = std::min(m, t.j.re());
    return m;
}

IndexSet PhgSeries::index_set_of(double horizon) const
{
    std::vector<IndexTerm> v;
    for (const auto& t : terms_) v.push_back({t.j, t.k});
    return IndexSet(std::move(v), horizon, SetKind::pre);
}

double PhgSeries::max_abs_coeff() const
{
    double m = 0.0;
    for (const auto& t : terms_) m = std::max(m, std::abs(t.c));
    return m;
}

std::string PhgSeries::to_text() const
{
    std::string s = fmt::format("var {} error_order {}\n", var_name(var_), std::isfinite(err_) ? fmt::format("{:.17g}", err_) : "inf");
    for (const auto& t : terms_)
        s += fmt::format("{:.17g} {:.17g} {} {:.17g} {:.17g}\n", t.j.re(), t.j.im(), t.k, t.c.real(), t.c.imag());
    return s;
}

PhgSeries PhgSeries::from_text(const std::string& text)
{
    std::istringstream in(text);
    std::string w1, tag, w2, es;
    if (!(in >> w1 >> tag >> w2 >> es) || w1 != "var" || w2 != "error_order")
        throw ValidationError("PhgSeries::from_text: bad header");
    double e = (es == "inf") ? INF : std::stod(es);
    PhgSeries s(parse_var(tag), e);
    double jr, ji, cr, ci;
    int k;
    while (in >> jr >> ji >> k >> cr >> ci) s.add_term(Exponent::from_double(jr, ji), k, {cr, ci});
    return s;
}

PhgSeries add(const PhgSeries& a, const PhgSeries& b) { return a + b; }
PhgSeries scale(const PhgSeries& a, cplx s) { return a * s; }

PhgSeries multiply(const PhgSeries& a, const PhgSeries& b)
{
    require_same_var(a, b);
    double e = std::min(a.error_order() + b.pi_min(), b.error_order() + a.pi_min());
    PhgSeries out(a.var(), e);
    for (const auto& s : a.terms())
        for (const auto& t : b.terms()) out.add_term(s.j + t.j, s.k + t.k, s.c * t.c);
    return out;
}

PhgSeries x_d_x(const PhgSeries& s)
{
    PhgSeries out(s.var(), s.error_order());
    for (const auto& t : s.terms()) {
        out.add_term(t.j, t.k, t.c * t.j.value());
        if (t.k > 0) out.add_term(t.j, t.k - 1, t.c * double(t.k));
    }
    return out;
}

PhgSeries mul_monomial(const PhgSeries& s, const Exponent& gamma, int kappa)
{
    PhgSeries out(s.var(), s.error_order() + gamma.re());
    for (const auto& t : s.terms()) out.add_term(t.j + gamma, t.k + kappa, t.c);
    return out;
}

PhgSeries d_r(const PhgSeries& s)
{
    // direct: d/dx = x^{-1} (x d/dx); inverse (x = 1/r): d/dr = -x (x d/dx)
    if (is_inverse(s.var())) return mul_monomial(x_d_x(s), Exponent(1)) * cplx(-1.0);
    return mul_monomial(x_d_x(s), Exponent(-1));
}

PhgSeries d_r2(const PhgSeries& s) { return d_r(d_r(s)); }

namespace {

PhgSeries primitive_impl(const Exponent& a, const PhgSeries& f, bool upper_limit)
{
    PhgSeries out(f.var(), f.error_order());
    for (const auto& t : f.terms()) {
        Exponent m = t.j - a;
        if (m == Exponent(0)) {
            out.add_term(a, t.k + 1, -t.c / double(t.k + 1));
            continue;
        }
        cplx mv = m.value();
        // antiderivative of s^{m-1} log^k s: s^m sum_i (-1)^i k!/(k-i)! log^{k-i}s / m^{i+1}
        double fall = 1.0;  // k!/(k-i)!
        for (int i = 0; i <= t.k; ++i) {
            if (i > 0) fall *= double(t.k - i + 1);
            cplx w = (i % 2 ? -1.0 : 1.0) * fall / std::pow(mv, i + 1);
            out.add_term(t.j, t.k - i, -t.c * w);
            if (upper_limit && i == t.k) out.add_term(a, 0, t.c * w);  // only the log^0 part survives at 1
        }
    }
    return out;
}

}  // namespace

PhgSeries resonant_integral(const Exponent& a, const PhgSeries& f) { return primitive_impl(a, f, true); }
PhgSeries resonant_primitive(const Exponent& a, const PhgSeries& f) { return primitive_impl(a, f, false); }

cplx power_log_integral(cplx m, int k, double x)
{
    if (!(m.real() > 0)) throw ValidationError("power_log_integral: divergent at 0");
    double lx = std::log(x);
    cplx sum = 0.0;
    double fall = 1.0;
    for (int i = 0; i <= k; ++i) {
        if (i > 0) fall *= double(k - i + 1);
        sum += (i % 2 ? -1.0 : 1.0) * fall * std::pow(lx, k - i) / std::pow(m, i + 1);
    }
    return std::exp(m * lx) * sum;
}

std::vector<SigmaPiece> sigma_rewrite(const PhgTerm& t, int p)
{
    if (p != 1 && p != -1) throw ValidationError("sigma_rewrite: p must be +1 or -1");
    std::vector<SigmaPiece> out;
    Exponent yj = t.j * Rat(p);
    for (int kap = 0; kap <= t.k; ++kap) {
        double sgn = ((t.k - kap) % 2 && p < 0) ? -1.0 : 1.0;
        out.push_back({t.j, kap, PhgTerm{yj, t.k - kap, t.c * binom(t.k, kap) * sgn}});
    }
    return out;
}

}  // namespace lerexp
