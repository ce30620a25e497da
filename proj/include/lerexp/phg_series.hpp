#pragma once
// Finite polyhomogeneous series  sum c_{j,k} x^j (log x)^k  modulo O(x^{error_order}).
#include <complex>
#include <string>
#include <vector>

#include "lerexp/indexset.hpp"

namespace lerexp {

using cplx = std::complex<double>;

/// rho = 1/r and rhohat = 1/rhat are the inverse-radial variables; r and rhat are direct.
enum class Var { rho, r, rhat, rhohat };
const char* var_name(Var v);
Var parse_var(const std::string& s);
inline bool is_inverse(Var v) { return v == Var::rho || v == Var::rhohat; }

struct PhgTerm {
    Exponent j;
    int k = 0;
    cplx c;
};

class PhgSeries {
public:
    explicit PhgSeries(Var v = Var::rho, double error_order = INF) : var_(v), err_(error_order) {}
    static PhgSeries monomial(Var v, const Exponent& j, int k = 0, cplx c = 1.0, double error_order = INF);

    Var var() const { return var_; }
    double error_order() const { return err_; }
    const std::vector<PhgTerm>& terms() const { return terms_; }
    bool empty() const { return terms_.empty(); }
    cplx coeff(const Exponent& j, int k) const;

    /// accumulates; terms at or above the error order are discarded
    void add_term(const Exponent& j, int k, cplx c);
    /// lowers the error order and drops terms that no longer fit
    PhgSeries truncated(double error_order) const;
    /// removes coefficients with |c| <= tol * max|c|
    PhgSeries pruned(double tol) const;

    PhgSeries& operator+=(const PhgSeries& o);
    PhgSeries& operator-=(const PhgSeries& o);
    PhgSeries& operator*=(cplx s);
    friend PhgSeries operator+(PhgSeries a, const PhgSeries& b) { return a += b; }
    friend PhgSeries operator-(PhgSeries a, const PhgSeries& b) { return a -= b; }
    friend PhgSeries operator*(PhgSeries a, cplx s) { return a *= s; }
    friend PhgSeries operator*(cplx s, PhgSeries a) { return a *= s; }

    cplx evaluate(double x) const;
    double pi_min() const;
    IndexSet index_set_of(double horizon = INF) const;
    double max_abs_coeff() const;

    /// header "var <tag> error_order <e>", then "Re(j) Im(j) k Re(c) Im(c)" per line
    std::string to_text() const;
    static PhgSeries from_text(const std::string& s);

private:
    Var var_;
    double err_;
    std::vector<PhgTerm> terms_;  // sorted by (j,k)
};

PhgSeries add(const PhgSeries& a, const PhgSeries& b);
PhgSeries scale(const PhgSeries& a, cplx s);
PhgSeries multiply(const PhgSeries& a, const PhgSeries& b);

/// x d/dx
PhgSeries x_d_x(const PhgSeries& s);
/// derivative in the underlying radial coordinate (r or rhat), whichever variable s is written in
PhgSeries d_r(const PhgSeries& s);
PhgSeries d_r2(const PhgSeries& s);
/// multiply by x^gamma (log x)^kappa
PhgSeries mul_monomial(const PhgSeries& s, const Exponent& gamma, int kappa = 0);

/// x^a int_x^1 t^{-a-1} f(t) dt, term by term in closed form. For a finite error order e > Re a the
/// (a,0) coefficient excludes the remainder's own constant x^a int_0^1 t^{-a-1} R(t) dt.
PhgSeries resonant_integral(const Exponent& a, const PhgSeries& f);
/// same primitive with every integration constant zero: (x d/dx - a) u = -f, no bare (a,0) term added
PhgSeries resonant_primitive(const Exponent& a, const PhgSeries& f);
/// int_0^x t^{m-1} (log t)^k dt, Re m > 0
cplx power_log_integral(cplx m, int k, double x);

struct SigmaPiece {
    Exponent alpha;  // sigma power
    int kappa = 0;   // log sigma power
    PhgTerm term;    // profile term in y
};
/// rewrite c x^j (log x)^k with x = sigma * y^p (p = +1 or -1) as sum sigma^j (log sigma)^kappa * y-terms
std::vector<SigmaPiece> sigma_rewrite(const PhgTerm& t, int p);

}  // namespace lerexp
