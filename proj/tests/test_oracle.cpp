#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <random>

#include "lerexp/errors.hpp"
#include "lerexp/oracle.hpp"

using namespace lerexp;

namespace {

const cplx I(0.0, 1.0);

double bump(double s)
{
    if (s <= 0) return 0.0;
    if (s >= 1) return 1.0;
    double a = std::exp(-1.0 / s), b = std::exp(-1.0 / (1.0 - s));
    return a / (a + b);
}

cplx gaussian(double r) { return std::exp(-r * r); }

OracleRun free_run(double sigma, int l = 0, int d = 3)
{
    OracleRun run;
    run.op = RadialOperator::free(ConeData::euclidean(d, 6));
    run.l = l;
    run.sigma = sigma;
    run.forcing = gaussian;
    return run;
}

RadialOperator coulomb_tail_potential(double eps)
{
    RadialOperator op = RadialOperator::free(ConeData::euclidean(3, 6));
    op.V = [eps](double r) { return eps * bump((r - 0.5) / 2.0) / (r * r * r); };
    op.V_tail = PhgSeries::monomial(Var::rho, 3, 0, eps);
    op.tail_radius = 2.5;
    op.support_min = 0.5;
    return op;
}

Grid zf_grid() { return ZfNumerics{}.grid(); }

// free d = 3, l = 0 mode kernel sin(sigma r<) e^{i sigma r>} / (sigma r s), integrated against f s^2
cplx free_mode_quadrature(double sigma, double r)
{
    using boost::math::quadrature::gauss_kronrod;
    auto inner = [&](double s) { return std::sin(sigma * s) * s * std::exp(-s * s); };
    auto outer_re = [&](double s) { return std::cos(sigma * s) * s * std::exp(-s * s); };
    auto outer_im = [&](double s) { return std::sin(sigma * s) * s * std::exp(-s * s); };
    double top = std::max(r, 12.0);
    double a = gauss_kronrod<double, 61>::integrate(inner, 0.0, r, 15, 1e-14);
    double br = r < top ? gauss_kronrod<double, 61>::integrate(outer_re, r, top, 15, 1e-14) : 0.0;
    double bi = r < top ? gauss_kronrod<double, 61>::integrate(outer_im, r, top, 15, 1e-14) : 0.0;
    return (std::exp(I * sigma * r) * a + std::sin(sigma * r) * cplx(br, bi)) / (sigma * r);
}

double max_rel_diff(const ModeProfile& a, const ModeProfile& b, double rmax = INF)
{
    double num = 0, den = 0;
    for (int i = 0; i < a.grid.size(); ++i) {
        if (a.grid.x(i) > rmax) continue;
        num = std::max(num, std::abs(a.samples[i] - b.samples[i]));
        den = std::max(den, std::abs(a.samples[i]));
    }
    return num / den;
}

}  // namespace

TEST_CASE("outgoing coefficients satisfy the free recursion")
{
    auto op = RadialOperator::free(ConeData::euclidean(3, 6));
    // d = 3, l = 0: e^{i sigma r}/r exactly
    auto c0 = outgoing_coefficients(op, 0, 0.3, 4);
    for (int n = 1; n <= 4; ++n) CHECK(std::abs(c0[n]) < 1e-15);
    // d = 3, l = 1: h_1 gives 1 + i/(sigma r)
    auto c1 = outgoing_coefficients(op, 1, 0.3, 4);
    CHECK(std::abs(c1[1] - I / 0.3) < 1e-12);
    CHECK(std::abs(c1[2]) < 1e-12);
    auto bad = op;
    bad.V = [](double) { return 0.0; };
    bad.V_tail = PhgSeries::monomial(Var::rho, 2, 0, 1.0);
    CHECK_THROWS_AS(outgoing_coefficients(bad, 0, 0.3, 4), ValidationError);
}

TEST_CASE("free d = 3 monopole agrees with the closed-form kernel")
{
    Grid g = zf_grid();
    for (double sigma : {0.3, 0.05}) {
        auto u = limiting_resolvent(free_run(sigma), g);
        double err = 0, scale = 0;
        for (int i = 0; i < g.size(); i += 37) {
            double r = g.x(i);
            if (r > 200) break;
            cplx q = free_mode_quadrature(sigma, r);
            err = std::max(err, std::abs(u.samples[i] - q));
            scale = std::max(scale, std::abs(q));
        }
        CHECK(err / scale < 1e-7);
    }
}

TEST_CASE("zero forcing gives zero")
{
    auto run = free_run(0.1);
    run.forcing = [](double) { return cplx(0.0); };
    auto u = limiting_resolvent(run, zf_grid());
    CHECK(u.max_abs() == 0.0);
}

TEST_CASE("small sigma approaches the Coulomb solve at rate sigma")
{
    Grid g = zf_grid();
    // -u'' - 2u'/r = e^{-r^2}: u0(r) = int f s^2 / max(r, s) ds
    auto u0 = [](double r) {
        using boost::math::quadrature::gauss_kronrod;
        double a = gauss_kronrod<double, 61>::integrate([](double s) { return s * s * std::exp(-s * s); }, 0.0, r, 15, 1e-14);
        double top = std::max(r, 12.0);
        double b = r < top ? gauss_kronrod<double, 61>::integrate([](double s) { return s * std::exp(-s * s); }, r, top, 15, 1e-14) : 0.0;
        return a / r + b;
    };
    std::vector<double> errs;
    for (double sigma : {1e-2, 1e-3}) {
        auto u = limiting_resolvent(free_run(sigma), g);
        double e = 0;
        for (int i = 0; i < g.size(); i += 41) {
            double r = g.x(i);
            if (r > 10) break;
            e = std::max(e, std::abs(u.samples[i] - u0(r)));
        }
        errs.push_back(e);
    }
    CHECK(errs[1] < 2e-3);
    CHECK(errs[0] / errs[1] == doctest::Approx(10.0).epsilon(0.2));
}

TEST_CASE("tolerance and boundary-order insensitivity")
{
    Grid g = zf_grid();
    auto run = free_run(0.05, 1);
    auto a = limiting_resolvent(run, g);
    auto loose = run;
    loose.rtol = 1e-10;
    CHECK(max_rel_diff(a, limiting_resolvent(loose, g)) < 1e-6);

    auto opv = coulomb_tail_potential(0.1);
    OracleRun v2 = run;
    v2.op = opv;
    v2.l = 0;
    v2.R_max = 20.0 / v2.sigma;
    v2.bc_order = 2;
    OracleRun v4 = v2;
    v4.bc_order = 4;
    CHECK(max_rel_diff(limiting_resolvent(v2, g), limiting_resolvent(v4, g), v2.R_max) < 1e-7);
}

TEST_CASE("linearity in the forcing")
{
    Grid g = zf_grid();
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    auto op = coulomb_tail_potential(0.1);
    for (int trial = 0; trial < 3; ++trial) {
        cplx a(U(rng), U(rng)), b(U(rng), U(rng));
        double c = 1.0 + 0.5 * U(rng);
        auto f1 = [](double r) { return cplx(std::exp(-r * r)); };
        auto f2 = [c](double r) { return cplx(r * r * std::exp(-c * r * r)); };
        OracleRun run;
        run.op = op;
        run.sigma = 0.05;
        run.forcing = f1;
        auto u1 = limiting_resolvent(run, g);
        run.forcing = f2;
        auto u2 = limiting_resolvent(run, g);
        run.forcing = [&](double r) { return a * f1(r) + b * f2(r); };
        auto u = limiting_resolvent(run, g);
        ModeProfile comb = u1;
        comb *= a;
        u2 *= b;
        comb += u2;
        CHECK(max_rel_diff(u, comb) < 1e-10);
    }
}

TEST_CASE("oracle residual is small")
{
    Grid g = zf_grid();
    auto op = coulomb_tail_potential(0.1);
    for (double sigma : {0.1, 0.01}) {
        OracleRun run;
        run.op = op;
        run.sigma = sigma;
        run.forcing = gaussian;
        auto u = limiting_resolvent(run, g);
        CVec Lu = apply_L_numeric(op.cone, 0, u);
        double num = 0, den = 0;
        for (int i = 16; i < g.size() - 16; ++i) {
            double r = g.x(i);
            if (r > 100) break;
            double V = r >= op.tail_radius ? 0.1 / (r * r * r) : op.V(r);
            cplx res = Lu[i] + (V - sigma * sigma) * u.samples[i] - gaussian(r);
            num = std::max(num, std::abs(res));
            den = std::max(den, std::abs(gaussian(r)));
        }
        CHECK(num / den < 1e-8);
    }
}

TEST_CASE("invalid runs are rejected")
{
    Grid g = zf_grid();
    auto run = free_run(0.1);
    run.R_max = 100.0;
    CHECK_THROWS_AS(limiting_resolvent(run, g), ValidationError);
    run = free_run(0.0);
    CHECK_THROWS_AS(limiting_resolvent(run, g), ValidationError);
}

TEST_CASE("power fit recovers an exact power law")
{
    std::vector<double> s{1e-1, 3e-2, 1e-2, 3e-3, 1e-3};
    std::vector<double> e;
    for (double x : s) e.push_back(0.7 * x * x);
    auto rep = fit_power(s, e, 0.0);
    CHECK(rep.p == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(rep.p_hi - rep.p_lo < 1e-8);
    CHECK(rep.to_csv().rfind("sigma, err, weight\n", 0) == 0);
}

TEST_CASE("compare against the oracle itself is at noise level")
{
    Grid g = zf_grid();
    auto op = RadialOperator::free(ConeData::euclidean(3, 2));
    std::vector<double> sigmas{0.1, 0.03};
    std::vector<ModeProfile> snaps;
    for (double s : sigmas) {
        auto run = free_run(s);
        snaps.push_back(limiting_resolvent(run, g));
    }
    auto eval = [&](double s, double r) {
        const auto& u = s == sigmas[0] ? snaps[0] : snaps[1];
        return interpolate(g, u.samples, r);
    };
    auto rep = compare(eval, op, 0, gaussian, sigmas, 0.0, g, 1e-2, 100.0);
    for (double e : rep.err) CHECK(e < 1e-9);
}

TEST_CASE("log phase of the long-range ODE")
{
    auto fit0 = hypergeometric_phase(0.0, 0.05, 200.0, 20000.0);
    CHECK(std::abs(fit0.b) < 1e-6);
    for (auto [m, s] : std::vector<std::pair<double, double>>{{1, 0.05}, {-1, 0.05}, {2, 0.02}}) {
        auto fit = hypergeometric_phase(m, s, 10.0 / s, 1000.0 / s);
        CHECK(fit.b == doctest::Approx(s * m / 2).epsilon(0.01));
    }
    CHECK_THROWS_AS(hypergeometric_phase(2.0, 0.05, 2.5, 100.0), ValidationError);
}
