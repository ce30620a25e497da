#include "lerexp/zf_solver.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

namespace lerexp {

namespace {

Var tail_var(Var v) { return v == Var::r ? Var::rho : Var::rhohat; }

bool same_grid(const Grid& a, const Grid& b)
{
    return a.size() == b.size() && a.map() == b.map() && std::fabs(a.t(0) - b.t(0)) < 1e-12 &&
           std::fabs(a.h() - b.h()) < 1e-14;
}

// reverse cumulative: R_i = int_{t_i}^{t_end} f dt
CVec reverse_cumulative(const CVec& f, double h)
{
    CVec rf(f.rbegin(), f.rend());
    CVec c = cumulative_integral(rf, h);
    return CVec(c.rbegin(), c.rend());
}

// integral up to the last even node with every other point, for a convergence check
cplx coarse_total(const CVec& f, double h)
{
    CVec g;
    for (std::size_t i = 0; i < f.size(); i += 2) g.push_back(f[i]);
    return cumulative_integral(g, 2 * h).back();
}

std::size_t last_even(std::size_t n) { return (n - 1) & ~std::size_t(1); }

}  // namespace

ModeProfile ModeProfile::sample(int l, Var v, const Grid& g, const std::function<cplx(double)>& f,
                                const PhgSeries& tail, double x_tail)
{
    ModeProfile p;
    p.l = l;
    p.var = v;
    p.grid = g;
    p.tail = tail.empty() && tail.var() != tail_var(v) ? PhgSeries(tail_var(v)) : tail;
    if (p.tail.var() != tail_var(v)) throw ValidationError("ModeProfile: tail variable does not match profile variable");
    p.head = PhgSeries(v);
    p.x_tail = x_tail;
    p.samples.resize(g.size());
    for (int i = 0; i < g.size(); ++i) {
        double x = g.x(i);
        p.samples[i] = x >= x_tail ? p.tail.evaluate(1.0 / x) : f(x);
    }
    return p;
}

ModeProfile ModeProfile::zero(int l, Var v, const Grid& g)
{
    ModeProfile p = sample(l, v, g, [](double) { return cplx(0.0); }, PhgSeries(tail_var(v)), g.xmin());
    p.head = PhgSeries(v);
    p.has_head = true;
    return p;
}

cplx ModeProfile::at(double x) const
{
    if (grid.contains(x)) return interpolate(grid, samples, x);
    if (x > grid.xmax()) {
        if (!std::isfinite(x_tail)) throw std::out_of_range(fmt::format("ModeProfile::at: {} beyond grid without tail", x));
        return tail.evaluate(1.0 / x);
    }
    if (has_head) return head.evaluate(x);
    throw std::out_of_range(fmt::format("ModeProfile::at: {} below grid", x));
}

double ModeProfile::tail_mismatch() const
{
    double num = 0.0, den = 0.0;
    for (int i = 0; i < grid.size(); ++i) {
        double x = grid.x(i);
        if (x < x_tail) continue;
        num = std::max(num, std::abs(samples[i] - tail.evaluate(1.0 / x)));
        den = std::max(den, std::abs(samples[i]));
    }
    return den > 0 ? num / den : num;
}

void ModeProfile::snap_to_tail()
{
    PhgSeries dt = dsamples.empty() ? PhgSeries(tail.var()) : d_r(tail);
    for (int i = 0; i < grid.size(); ++i) {
        if (grid.x(i) < x_tail) continue;
        samples[i] = tail.evaluate(1.0 / grid.x(i));
        if (!dsamples.empty()) dsamples[i] = dt.evaluate(1.0 / grid.x(i));
    }
}

double ModeProfile::max_abs() const
{
    double m = 0.0;
    for (const auto& s : samples) m = std::max(m, std::abs(s));
    return m;
}

ModeProfile& ModeProfile::operator+=(const ModeProfile& o)
{
    if (!same_grid(grid, o.grid) || var != o.var) throw ValidationError("ModeProfile: incompatible grids");
    for (int i = 0; i < grid.size(); ++i) samples[i] += o.samples[i];
    if (!dsamples.empty() && !o.dsamples.empty())
        for (int i = 0; i < grid.size(); ++i) dsamples[i] += o.dsamples[i];
    else
        dsamples.clear();
    tail += o.tail;
    x_tail = std::max(x_tail, o.x_tail);
    if (has_head && o.has_head) head += o.head;
    else has_head = false;
    return *this;
}

ModeProfile& ModeProfile::operator*=(cplx s)
{
    for (auto& v : samples) v *= s;
    for (auto& v : dsamples) v *= s;
    tail *= s;
    head *= s;
    return *this;
}

std::string ModeProfile::to_csv() const
{
    std::string out = fmt::format("{}, Re(u), Im(u)\n", var == Var::r ? "r" : "rhat");
    for (int i = 0; i < grid.size(); ++i)
        out += fmt::format("{:.17g}, {:.17g}, {:.17g}\n", grid.x(i), samples[i].real(), samples[i].imag());
    return out;
}

RadialOperator RadialOperator::free(const ConeData& cone)
{
    RadialOperator op;
    op.cone = cone;
    return op;
}

double RadialOperator::potential_at(double r) const
{
    if (zero()) return 0.0;
    if (r >= tail_radius) return V_tail.evaluate(1.0 / r).real();
    if (r < support_min) return 0.0;
    return V(r);
}

double RadialOperator::beth() const
{
    if (zero() || V_tail.empty()) return INF;
    return std::max(0.0, std::floor(V_tail.pi_min() + 1e-9) - 3.0);
}

PhgSeries apply_L_exact(const ConeData& cone, int l, const PhgSeries& u)
{
    if (!is_inverse(u.var())) throw ValidationError("apply_L_exact: series must be in rho");
    double lam = cone.modes.at(l).lambda;
    PhgSeries out = d_r2(u) * cplx(-1.0);
    out -= mul_monomial(d_r(u), 1) * cplx(cone.d - 1);
    out += mul_monomial(u, 2) * cplx(lam);
    return out;
}

CVec apply_L_numeric(const ConeData& cone, int l, const Grid& g, const CVec& u)
{
    double lam = cone.modes.at(l).lambda;
    CVec u1 = d_dx(g, u), u2 = d2_dx2(g, u), out(g.size());
    for (int i = 0; i < g.size(); ++i) {
        double r = g.x(i);
        out[i] = -u2[i] - (cone.d - 1) / r * u1[i] + lam / (r * r) * u[i];
    }
    return out;
}

CVec apply_L_numeric(const ConeData& cone, int l, const ModeProfile& u)
{
    if (u.dsamples.empty()) return apply_L_numeric(cone, l, u.grid, u.samples);
    double lam = cone.modes.at(l).lambda;
    CVec u2 = d_dx(u.grid, u.dsamples, 8), out(u.grid.size());
    for (int i = 0; i < u.grid.size(); ++i) {
        double r = u.grid.x(i);
        out[i] = -u2[i] - (cone.d - 1) / r * u.dsamples[i] + lam / (r * r) * u.samples[i];
    }
    return out;
}

PhgSeries green_apply_exact(const ConeData& cone, int l, const PhgSeries& g)
{
    if (!is_inverse(g.var())) throw ValidationError("green_apply_exact: series must be in rho");
    if (!g.empty() && !(g.pi_min() > 2.0 + EXPONENT_TOL))
        throw ValidationError(fmt::format("green_apply_exact: forcing too strong (pi_min = {} <= 2)", g.pi_min()));
    const auto& m = cone.modes.at(l);
    // r^2 L = -(D - c)(D + b) with D = rho d/drho
    PhgSeries h = mul_monomial(g, -2);
    PhgSeries w = resonant_primitive(m.c, h);
    PhgSeries u = resonant_primitive(-m.b, w) * cplx(-1.0);
    u.add_term(m.c, 0, -u.coeff(m.c, 0));
    return u;
}

ModeProfile green_apply_numeric(const ConeData& cone, int l, const ModeProfile& g, const ZfNumerics& num)
{
    if (g.var != Var::r) throw ValidationError("green_apply_numeric: profile must be in r");
    const Grid& G = g.grid;
    const int n = G.size();
    const double h = G.h();
    const auto& mode = cone.modes.at(l);
    const double b = mode.b.re(), c = mode.c.re(), d = cone.d;

    CVec q1(n), q2(n);
    for (int i = 0; i < n; ++i) {
        double r = G.x(i);
        q1[i] = std::pow(r, b + d) * g.samples[i];
        q2[i] = std::pow(r, d - c) * g.samples[i];
    }
    CVec Q1 = cumulative_integral(q1, h), Q2 = reverse_cumulative(q2, h);

    // quadrature convergence check against the half-resolution rule
    auto check = [&](cplx fine, cplx coarse, cplx scale) {
        if (std::abs(fine - coarse) > 1e-6 * std::abs(scale) + 1e-300)
            throw NumericError(fmt::format("green_apply_numeric: quadrature-nonconvergence ({:.3g} vs {:.3g})",
                                           std::abs(fine), std::abs(coarse)));
    };
    {
        double s1 = 0, s2 = 0;
        for (int i = 0; i < n; ++i) {
            s1 += std::abs(q1[i]) * h;
            s2 += std::abs(q2[i]) * h;
        }
        std::size_t e = last_even(n);
        check(Q1[e], coarse_total(q1, h), s1);
        CVec q2r(q2.rbegin(), q2.rend());
        check(cumulative_integral(q2r, h)[e], coarse_total(q2r, h), s2);
    }

    // below the grid
    cplx below = 0.0;
    const double r0 = G.x(0);
    if (g.has_head) {
        for (const auto& t : g.head.terms()) below += t.c * power_log_integral(t.j.value() + b + d, t.k, r0);
    } else if (std::abs(g.samples[0]) > 0) {
        double p = 0.0;
        if (std::abs(g.samples[1]) > 0) p = std::log(std::abs(g.samples[1] / g.samples[0])) / h;
        p = std::clamp(p, -(b + d) + 0.5, 20.0);
        below = q1[0] / (b + d + p);
    }
    // beyond the grid
    cplx beyond = 0.0;
    const double R = G.xmax();
    if (g.x_tail <= R * (1 + 1e-12)) {
        for (const auto& t : g.tail.terms()) {
            cplx m = t.j.value() + c - d;
            if (!(m.real() > 0)) throw ValidationError("green_apply_numeric: forcing tail too strong");
            beyond += t.c * power_log_integral(m, t.k, 1.0 / R);
        }
    } else if (std::abs(g.samples[n - 1]) > 0) {
        throw NumericError("green_apply_numeric: tail-mismatch (forcing has no tail beyond the grid)");
    }

    ModeProfile u;
    u.l = l;
    u.var = Var::r;
    u.grid = G;
    u.samples.resize(n);
    u.dsamples.resize(n);
    for (int i = 0; i < n; ++i) {
        double r = G.x(i);
        cplx A1 = Q1[i] + below, A2 = Q2[i] + beyond;
        u.samples[i] = (std::pow(r, -c) * A1 + std::pow(r, b) * A2) / (b + c);
        // the terms from differentiating the integrals cancel
        u.dsamples[i] = (-c * std::pow(r, -c - 1) * A1 + (b == 0.0 ? 0.0 : b * std::pow(r, b - 1) * A2)) / (b + c);
    }

    // tail: exact particular solution plus the fitted homogeneous r^{-c} admixture
    double xt = std::min(std::max(g.x_tail, num.R_tail), R);
    PhgSeries ue = green_apply_exact(cone, l, g.tail);
    cplx sn = 0.0;
    double sd = 0.0;
    for (int i = 0; i < n; ++i) {
        double r = G.x(i);
        if (r < xt) continue;
        double w = std::pow(r, -c);
        sn += (u.samples[i] - ue.evaluate(1.0 / r)) * w;
        sd += w * w;
    }
    ue.add_term(mode.c, 0, sn / sd);
    u.tail = ue;
    u.x_tail = xt;
    double mis = u.tail_mismatch();
    if (mis > num.tail_tol)
        throw NumericError(fmt::format("green_apply_numeric: tail-mismatch {:.3g} > {:.3g}", mis, num.tail_tol));
    u.snap_to_tail();
    u.head = PhgSeries(Var::r);
    u.has_head = false;
    return u;
}

PhgSeries zf_tail_pass(const RadialOperator& op, int l, const PhgSeries& f_tail, cplx A, const PhgSeries& T)
{
    PhgSeries g = f_tail;
    if (!op.zero()) g -= multiply(op.V_tail, T);
    PhgSeries u = green_apply_exact(op.cone, l, g);
    u.add_term(op.cone.modes.at(l).c, 0, A);
    return u;
}

PerturbedSolve solve_perturbed(const RadialOperator& op, int l, const ModeProfile& f, double alpha_max,
                               const ZfNumerics& num)
{
    PerturbedSolve res;
    auto truncate_tail = [&](ModeProfile p) {
        p.tail = p.tail.truncated(alpha_max + 2);
        return p;
    };
    ModeProfile w = green_apply_numeric(op.cone, l, truncate_tail(f), num);
    res.u = w;
    res.tail_pi_min.push_back(w.tail.pi_min());
    if (op.zero()) return res;

    const Grid& G = f.grid;
    std::vector<double> Vs(G.size());
    for (int i = 0; i < G.size(); ++i) {
        double r = G.x(i);
        Vs[i] = op.potential_at(r);
    }

    double prev = w.max_abs();
    int growth = 0;
    for (int it = 1; it <= 500; ++it) {
        ModeProfile vw = w;
        for (int i = 0; i < G.size(); ++i) vw.samples[i] = -Vs[i] * w.samples[i];
        vw.tail = multiply(op.V_tail, w.tail).truncated(alpha_max + 2) * cplx(-1.0);
        vw.x_tail = std::max(w.x_tail, op.tail_radius);
        vw.snap_to_tail();
        vw.has_head = G.xmin() < op.support_min;
        vw.head = PhgSeries(Var::r);
        w = green_apply_numeric(op.cone, l, vw, num);
        res.u += w;
        res.tail_pi_min.push_back(w.tail.pi_min());
        double cur = w.max_abs();
        res.iterations = it;
        res.contraction = prev > 0 ? cur / prev : 0.0;
        if (cur <= 1e-16 * res.u.max_abs()) break;
        growth = (cur > prev) ? growth + 1 : 0;
        if (growth >= 3)
            throw NumericError(fmt::format("solve_perturbed: iteration-divergence (spectral radius estimate {:.4g})",
                                           res.contraction));
        prev = cur;
        if (it == 500) throw NumericError("solve_perturbed: iteration cap reached");
    }
    res.u.tail = res.u.tail.truncated(alpha_max);
    res.u.snap_to_tail();
    return res;
}

}  // namespace lerexp
