#include "lerexp/tf_solver.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fmt/format.h>

#include "lerexp/cutoff.hpp"

namespace lerexp {

namespace {

const double PI = 3.14159265358979323846;
const cplx I(0.0, 1.0);
// -mu W(y1, y2) with mu = x^{d-1} e^{2ix}
const cplx KAPPA = cplx(0.0, -2.0 / PI);

CVec reverse_cumulative(const CVec& f, double h)
{
    CVec rf(f.rbegin(), f.rend());
    CVec c = cumulative_integral(rf, h);
    return CVec(c.rbegin(), c.rend());
}

cplx coarse_total(const CVec& f, double h)
{
    CVec g;
    for (std::size_t i = 0; i < f.size(); i += 2) g.push_back(f[i]);
    return cumulative_integral(g, 2 * h).back();
}

// int_{-inf}^{t_0} of samples behaving like e^{p t} near the left end; `scale` is int |a| dt over
// the grid, below which a non-decaying end is rounding noise of the singular-part removal
cplx left_end_integral(const CVec& a, double h, double scale)
{
    if (std::abs(a[0]) == 0.0) return 0.0;
    if (std::abs(a[1]) == 0.0) return a[0] * h;
    double p = std::log(std::abs(a[1] / a[0])) / h;
    if (p < 0.5) {
        if (std::abs(a[0]) <= 1e-14 * scale) return 0.0;
        throw ValidationError("tf_solve: forcing outside admissible orders at rhat -> 0");
    }
    return a[0] / p;
}

// inverse of Delta-hat = -x^{-2}(D - b)(D + c) on series in x
PhgSeries inverse_model_laplacian(const ConeMode& m, const PhgSeries& g)
{
    PhgSeries w = resonant_primitive(m.b, mul_monomial(g, 2));
    return resonant_primitive(-m.c, w) * cplx(-1.0);
}

PhgSeries exact_terms(const PhgSeries& s)
{
    PhgSeries t(s.var());
    for (const auto& term : s.terms()) t.add_term(term.j, term.k, term.c);
    return t;
}

PhgSeries apply_B(int d, const PhgSeries& v)
{
    return d_r(v) * cplx(0.0, -2.0) + mul_monomial(v, -1) * cplx(0.0, -double(d - 1));
}

}  // namespace

TfProblem TfProblem::make(const ConeData& cone, int l, ModeProfile forcing)
{
    if (forcing.var != Var::rhat) throw ValidationError("TfProblem: forcing must be in rhat");
    TfProblem p;
    p.cone = cone;
    p.l = l;
    p.nu = cone.nu(l);
    if (p.nu < 0.5 * (cone.d - 2) - 1e-12) throw ValidationError("TfProblem: nu below (d-2)/2");
    p.forcing = std::move(forcing);
    return p;
}

KernelValue tf_kernel_value(const ConeData& cone, int l, TfBranch branch, double x)
{
    double a = 0.5 * (cone.d - 2), nu = cone.nu(l);
    double pa = std::pow(x, -a);
    if (branch == TfBranch::outgoing) {
        // R = e^{-ix} H+_nu, R' = (nu/x - i) R - R_{nu+1}
        cplx R = hankel_reduced(nu, x), R1 = hankel_reduced(nu + 1, x);
        double b = cone.modes.at(l).b.re();
        return {pa * R, pa * (b / x * R - I * R - R1)};
    }
    // (x^{-a} J_nu)' = x^{-a} (b/x J_nu - J_{nu+1}), b = nu - a
    double b = cone.modes.at(l).b.re();
    cplx J = bessel(BesselKind::J, nu, x), J1 = bessel(BesselKind::J, nu + 1, x);
    cplx pre = std::exp(cplx(0.0, -x)) * pa;
    return {pre * J, pre * (b / x * J - J1 - I * J)};
}

std::function<cplx(double)> tf_kernel(const TfProblem& p, TfBranch branch)
{
    ConeData cone = p.cone;
    int l = p.l;
    return [cone, l, branch](double x) { return tf_kernel_value(cone, l, branch, x).w; };
}

PhgSeries tf_recessive_series(const ConeData& cone, int l, double order)
{
    const auto& m = cone.modes.at(l);
    double nu = cone.nu(l);
    int N = std::max(0, int(std::ceil(order - m.b.re())) + 1);
    // x^{-a} J_nu = sum_m jm x^{b+2m}
    std::vector<double> jm(N + 1, 0.0);
    for (int q = 0; 2 * q <= N; ++q)
        jm[2 * q] = (q % 2 ? -1.0 : 1.0) * std::pow(0.5, 2 * q + nu) / (std::tgamma(q + 1.0) * std::tgamma(q + nu + 1));
    PhgSeries s(Var::rhat, order);
    for (int n = 0; n <= N; ++n) {
        cplx acc = 0.0, e = 1.0;  // e = (-i)^p / p!
        for (int p = 0; p <= n; ++p) {
            if (p > 0) e *= cplx(0.0, -1.0) / double(p);
            acc += e * jm[n - p];
        }
        s.add_term(m.b + Exponent(n), 0, acc);
    }
    return s;
}

PhgSeries apply_Ltf_exact(const ConeData& cone, int l, const PhgSeries& v)
{
    if (v.var() != Var::rhat) throw ValidationError("apply_Ltf_exact: series must be in rhat");
    double lam = cone.modes.at(l).lambda;
    PhgSeries out = d_r2(v) * cplx(-1.0);
    out -= mul_monomial(d_r(v), -1) * cplx(cone.d - 1);
    out += mul_monomial(v, -2) * cplx(lam);
    out += apply_B(cone.d, v);
    return out;
}

PhgSeries tf_formal_solution(const ConeData& cone, int l, const PhgSeries& h, double order)
{
    if (h.var() != Var::rhat) throw ValidationError("tf_formal_solution: series must be in rhat");
    const auto& m = cone.modes.at(l);
    PhgSeries step = inverse_model_laplacian(m, h.truncated(order - 2)).truncated(order);
    PhgSeries v = step;
    for (int it = 0; it < 400 && !step.empty(); ++it) {
        step = inverse_model_laplacian(m, apply_B(cone.d, step) * cplx(-1.0)).truncated(order);
        v += step;
    }
    if (!step.empty()) throw NumericError("tf_formal_solution: series did not terminate");
    return v;
}

CVec apply_Ltf_numeric(const ConeData& cone, int l, const Grid& g, const CVec& u, int order)
{
    double lam = cone.modes.at(l).lambda, d = cone.d;
    CVec u1 = d_dx(g, u, order), u2 = d2_dx2(g, u, order), out(g.size());
    for (int i = 0; i < g.size(); ++i) {
        double x = g.x(i);
        out[i] = -u2[i] - ((d - 1) / x + 2.0 * I) * u1[i] + (lam / (x * x) - I * (d - 1) / x) * u[i];
    }
    return out;
}

CVec apply_Ltf_numeric(const ConeData& cone, int l, const ModeProfile& u)
{
    if (u.dsamples.empty()) return apply_Ltf_numeric(cone, l, u.grid, u.samples);
    double lam = cone.modes.at(l).lambda, d = cone.d;
    CVec u2 = d_dx(u.grid, u.dsamples, 8), out(u.grid.size());
    for (int i = 0; i < u.grid.size(); ++i) {
        double x = u.grid.x(i);
        out[i] = -u2[i] - ((d - 1) / x + 2.0 * I) * u.dsamples[i] + (lam / (x * x) - I * (d - 1) / x) * u.samples[i];
    }
    return out;
}

ModeProfile tf_solve(const TfProblem& p, const TfNumerics& num)
{
    const ModeProfile& f = p.forcing;
    if (f.var != Var::rhat) throw ValidationError("tf_solve: forcing must be in rhat");
    const Grid& G = f.grid;
    const int n = G.size();
    const double h = G.h();
    const ConeData& cone = p.cone;
    const int l = p.l, d = cone.d;

    // formal solution near 0 removes the singular part of the forcing
    double H = num.head_order;
    PhgSeries vpart(Var::rhat), Nvpart(Var::rhat), rem(Var::rhat);
    if (f.has_head && !f.head.empty()) {
        if (f.head.var() != Var::rhat) throw ValidationError("tf_solve: forcing head must be in rhat");
        H = std::min(H, f.head.error_order() + 2);
        vpart = tf_formal_solution(cone, l, f.head, H);
        Nvpart = exact_terms(apply_Ltf_exact(cone, l, exact_terms(vpart)));
        // below H - 2 the two cancel exactly; keep only the genuine remainder
        const PhgSeries diff = exact_terms(f.head) - Nvpart;
        for (const auto& t : diff.terms())
            if (t.j.re() >= H - 2 - EXPONENT_TOL) rem.add_term(t.j, t.k, t.c);
    }
    const Cutoff near{0.1, 0.5};
    PhgSeries dvpart = d_r(vpart);

    CVec rh(n);
    for (int i = 0; i < n; ++i) {
        double x = G.x(i);
        StepValue chi = near.at(x);
        if (vpart.empty()) {
            rh[i] = f.samples[i];
        } else if (chi.v == 1.0) {
            cplx fh = f.head.evaluate(x);
            cplx diff = f.samples[i] - fh;
            if (std::abs(diff) <= 1e-12 * std::abs(fh)) diff = 0.0;  // rounding noise of a singular forcing
            rh[i] = diff + rem.evaluate(x);
        } else if (chi.v == 0.0) {
            rh[i] = f.samples[i];
        } else {
            cplx v = vpart.evaluate(x), dv = dvpart.evaluate(x);
            cplx Nv = Nvpart.evaluate(x);
            cplx pc = (d - 1) / x + 2.0 * I;
            cplx Nchiv = chi.v * Nv - chi.d2 * v - 2.0 * chi.d1 * dv - pc * chi.d1 * v;
            rh[i] = f.samples[i] - Nchiv;
        }
    }

    std::vector<KernelValue> y1(n), y2(n);
    CVec a(n), bq(n), g(n);
    for (int i = 0; i < n; ++i) {
        double x = G.x(i);
        y1[i] = tf_kernel_value(cone, l, TfBranch::recessive, x);
        y2[i] = tf_kernel_value(cone, l, TfBranch::outgoing, x);
        cplx mu = std::pow(x, d - 1.0) * std::exp(cplx(0.0, 2 * x));
        a[i] = y1[i].w * mu * rh[i] * G.dxdt(i);
        bq[i] = y2[i].w * mu * rh[i] * G.dxdt(i);
        g[i] = y2[i].w * std::pow(x, d - 1.0) * rh[i];  // bq / (e^{2ix} dx/dt)
    }
    CVec A = cumulative_integral(a, h), B = reverse_cumulative(bq, h);
    double s1 = 0, s2 = 0;
    {
        for (int i = 0; i < n; ++i) {
            s1 += std::abs(a[i]) * h;
            s2 += std::abs(bq[i]) * h;
        }
        std::size_t e = (n - 1) & ~1;
        auto check = [](cplx fine, cplx coarse, double scale) {
            if (std::abs(fine - coarse) > 1e-6 * scale + 1e-300)
                throw NumericError(fmt::format("tf_solve: quadrature-nonconvergence ({:.3g} relative)",
                                               std::abs(fine - coarse) / scale));
        };
        check(A[e], coarse_total(a, h), s1);
        CVec br(bq.rbegin(), bq.rend());
        check(cumulative_integral(br, h)[e], coarse_total(br, h), s2);
    }
    // beyond the grid: int_X^inf e^{2ix} g dx = -e^{2iX} (g/(2i) - g'/(2i)^2 + g''/(2i)^3)
    {
        CVec g1 = d_dx(G, g, 8), g2 = d2_dx2(G, g, 8);
        double X = G.xmax();
        cplx al = 2.0 * I;
        cplx tail = -std::exp(al * X) * (g[n - 1] / al - g1[n - 1] / (al * al) + g2[n - 1] / (al * al * al));
        for (auto& v : B) v += tail;
    }
    cplx A0 = left_end_integral(a, h, s1);
    cplx B0 = B[0] + left_end_integral(bq, h, s2);

    ModeProfile u;
    u.l = l;
    u.var = Var::rhat;
    u.grid = G;
    u.samples.resize(n);
    u.dsamples.resize(n);
    for (int i = 0; i < n; ++i) {
        double x = G.x(i);
        cplx Ai = A[i] + A0;
        cplx w = (y2[i].w * Ai + y1[i].w * B[i]) / KAPPA;
        cplx dw = (y2[i].dw * Ai + y1[i].dw * B[i]) / KAPPA;
        if (!vpart.empty()) {
            StepValue chi = near.at(x);
            if (chi.v != 0.0) {
                cplx v = vpart.evaluate(x), dv = dvpart.evaluate(x);
                w += chi.v * v;
                dw += chi.d1 * v + chi.v * dv;
            }
        }
        u.samples[i] = w;
        u.dsamples[i] = dw;
    }
    u.tail = PhgSeries(Var::rhohat);
    u.x_tail = INF;
    u.head = (vpart + tf_recessive_series(cone, l, H) * (B0 / KAPPA)).truncated(H);
    u.has_head = true;
    return u;
}

std::vector<FitTerm> tf_asymptotic_fit(const ModeProfile& u, FitEnd end, const IndexSet& candidates, int max_terms,
                                       double x0)
{
    std::vector<IndexTerm> cand(candidates.terms().begin(), candidates.terms().end());
    if (cand.empty()) throw ValidationError("tf_asymptotic_fit: no candidates");
    if (int(cand.size()) > max_terms) cand.resize(max_terms);
    double lo, hi;
    if (x0 > 0) {
        lo = x0;
        hi = 10 * x0;
    } else if (end == FitEnd::zero) {
        lo = u.grid.xmin();
        hi = 10 * lo;
    } else {
        hi = u.grid.xmax();
        lo = hi / 10;
    }
    std::vector<int> idx;
    for (int i = 0; i < u.grid.size(); ++i)
        if (u.grid.x(i) >= lo * (1 - 1e-12) && u.grid.x(i) <= hi * (1 + 1e-12)) idx.push_back(i);
    if (idx.size() < cand.size() + 2) throw ValidationError("tf_asymptotic_fit: window too small");

    auto basis = [&](const IndexTerm& t, double x) {
        double y = end == FitEnd::zero ? x : 1.0 / x;
        double ly = std::log(y);
        return std::exp(t.j.value() * ly) * std::pow(ly, t.k);
    };
    const int m = int(idx.size()), q = int(cand.size());
    Eigen::MatrixXcd M(m, q);
    Eigen::VectorXcd rhs(m);
    for (int r = 0; r < m; ++r) {
        double x = u.grid.x(idx[r]);
        double w = 1.0 / std::abs(basis(IndexTerm{cand[0].j, 0}, x));
        for (int c = 0; c < q; ++c) M(r, c) = w * basis(cand[c], x);
        rhs(r) = w * u.samples[idx[r]];
    }
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    if (sv(q - 1) <= 1e-12 * sv(0))
        throw NumericError(fmt::format("tf_asymptotic_fit: ill-conditioned fit (condition {:.3g})",
                                       sv(q - 1) > 0 ? sv(0) / sv(q - 1) : INF));
    Eigen::VectorXcd coef = svd.solve(rhs);
    double res = (M * coef - rhs).norm() / std::max(rhs.norm(), 1e-300);
    std::vector<FitTerm> out;
    for (int c = 0; c < q; ++c) out.push_back({cand[c], coef(c), res});
    return out;
}

double fitted_decay_exponent(const ModeProfile& u, double x0, double x1)
{
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (int i = 0; i < u.grid.size(); ++i) {
        double x = u.grid.x(i);
        if (x < x0 || x > x1 || std::abs(u.samples[i]) == 0.0) continue;
        double lx = std::log(x), ly = std::log(std::abs(u.samples[i]));
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++m;
    }
    if (m < 3) throw ValidationError("fitted_decay_exponent: too few points");
    return -(m * sxy - sx * sy) / (m * sxx - sx * sx);
}

}  // namespace lerexp
