#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <random>

#include "lerexp/zf_solver.hpp"

using namespace lerexp;

namespace {

const double PI = 3.14159265358979323846;

// smooth step: 0 for s <= 0, 1 for s >= 1
double bump(double s)
{
    if (s <= 0) return 0.0;
    if (s >= 1) return 1.0;
    double a = std::exp(-1.0 / s), b = std::exp(-1.0 / (1.0 - s));
    return a / (a + b);
}

PhgSeries rho_pow(int j, int k = 0, cplx c = 1.0) { return PhgSeries::monomial(Var::rho, j, k, c); }

double interior_residual(const ConeData& cone, int l, const ModeProfile& u, const ModeProfile& g, int skip = 8)
{
    CVec Lu = apply_L_numeric(cone, l, u);
    double num = 0, den = 0;
    for (int i = skip; i + skip < u.grid.size(); ++i) {
        num = std::max(num, std::abs(Lu[i] - g.samples[i]));
        den = std::max(den, std::abs(g.samples[i]));
    }
    return num / den;
}

}  // namespace

TEST_CASE("green_apply_exact resonance vectors")
{
    auto cone = ConeData::euclidean(3, 3);
    auto u1 = green_apply_exact(cone, 0, rho_pow(3));
    REQUIRE(u1.terms().size() == 1);
    CHECK(std::abs(u1.coeff(1, 1) - (-1.0)) < 1e-12);  // rho log(1/rho) = r^{-1} log r

    auto u2 = green_apply_exact(cone, 0, rho_pow(4));
    REQUIRE(u2.terms().size() == 1);
    CHECK(std::abs(u2.coeff(2, 0) - (-0.5)) < 1e-12);

    auto u3 = green_apply_exact(cone, 1, rho_pow(4));
    REQUIRE(u3.terms().size() == 1);
    CHECK(std::abs(u3.coeff(2, 1) - (-1.0 / 3.0)) < 1e-12);  // (1/3) r^{-2} log r
}

TEST_CASE("green_apply_exact rejects forcing with pi_min <= 2")
{
    auto cone = ConeData::euclidean(3, 1);
    CHECK_THROWS_AS(green_apply_exact(cone, 0, rho_pow(2)), ValidationError);
    CHECK(green_apply_exact(cone, 0, PhgSeries(Var::rho)).empty());
}

TEST_CASE("green_apply_exact: exact residual and index-set containment")
{
    std::mt19937_64 g(31);
    std::uniform_int_distribution<int> dd(3, 5), ll(0, 3), num(5, 16), kk(0, 2), nt(1, 4);
    std::normal_distribution<double> cc(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        int d = dd(g), l = ll(g);
        auto cone = ConeData::euclidean(d, 4);
        PhgSeries f(Var::rho);
        int n = nt(g);
        for (int i = 0; i < n; ++i) f.add_term(Exponent(Rat(num(g), 2)), kk(g), {cc(g), cc(g)});
        auto u = green_apply_exact(cone, l, f);
        auto res = apply_L_exact(cone, l, u) - f;
        CHECK(res.max_abs_coeff() <= 1e-12 * (1 + f.max_abs_coeff()));
        double h = 9.0;
        auto pred = uplus(cone.modes[l].c, 0, shift(f.index_set_of(h), -2, 0));
        CHECK(u.index_set_of(h - 2).subset_of(pred));
        CHECK(u.coeff(cone.modes[l].c, 0) == cplx(0.0));
    }
}

TEST_CASE("Coulomb monopole of a Gaussian charge")
{
    auto cone = ConeData::euclidean(3, 0);
    ZfNumerics num;
    Grid G = num.grid();
    auto charge = [](double r) { return cplx(std::exp(-r * r) * (1.0 + 0.3 * r)); };
    auto f = ModeProfile::sample(0, Var::r, G, charge, PhgSeries(Var::rho), num.R_tail);
    auto u = green_apply_numeric(cone, 0, f, num);
    double total = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [&](double r) { return 4 * PI * r * r * charge(r).real(); }, 0.0, 30.0, 15, 1e-15);
    cplx lead = u.tail.coeff(1, 0);
    CHECK(std::abs(lead - total / (4 * PI)) < 1e-6 * total / (4 * PI));
    CHECK(u.tail.terms().size() == 1);
    CHECK(interior_residual(cone, 0, u, f) < 1e-8);
}

TEST_CASE("numeric and exact Green functions agree on a cut-off power tail")
{
    auto cone = ConeData::euclidean(3, 2);
    ZfNumerics num;
    Grid G = num.grid();
    for (int l : {0, 1, 2}) {
        auto f = ModeProfile::sample(
            l, Var::r, G, [](double r) { return cplx(bump((r - 0.5) / 2.0) * std::pow(r, -4.0)); }, rho_pow(4), 2.5);
        auto u = green_apply_numeric(cone, l, f, num);
        auto ue = green_apply_exact(cone, l, rho_pow(4));
        for (const auto& t : ue.terms()) CHECK(std::abs(u.tail.coeff(t.j, t.k) - t.c) < 1e-6 * std::abs(t.c));
        CHECK(u.tail_mismatch() < 1e-9);
        CHECK(interior_residual(cone, l, u, f) < 1e-8);
    }
}

TEST_CASE("zero forcing gives zero")
{
    auto cone = ConeData::euclidean(3, 1);
    ZfNumerics num;
    auto f = ModeProfile::zero(0, Var::r, num.grid());
    auto u = green_apply_numeric(cone, 0, f, num);
    CHECK(u.max_abs() == 0.0);
    CHECK(u.tail.empty());
}

TEST_CASE("solve_perturbed with V = 0 reduces to green_apply_numeric")
{
    auto cone = ConeData::euclidean(3, 1);
    ZfNumerics num;
    auto f = ModeProfile::sample(0, Var::r, num.grid(), [](double r) { return cplx(std::exp(-r * r)); },
                                 PhgSeries(Var::rho), num.R_tail);
    auto a = solve_perturbed(RadialOperator::free(cone), 0, f, 8.0, num).u;
    auto b = green_apply_numeric(cone, 0, f, num);
    for (int i = 0; i < a.grid.size(); ++i) CHECK(std::abs(a.samples[i] - b.samples[i]) == 0.0);
}

namespace {

RadialOperator coulomb_tail_potential(double eps)
{
    RadialOperator op = RadialOperator::free(ConeData::euclidean(3, 6));
    op.V = [eps](double r) { return eps * bump((r - 0.5) / 2.0) / (r * r * r); };
    op.V_tail = rho_pow(3, 0, eps);
    op.tail_radius = 2.5;
    op.support_min = 0.5;
    return op;
}

}  // namespace

TEST_CASE("two-step Neumann iteration for V = eps rho^3")
{
    const double eps = 0.1;
    auto op = coulomb_tail_potential(eps);
    ZfNumerics num;
    Grid G = num.grid();
    auto f = ModeProfile::sample(
        0, Var::r, G, [](double r) { return cplx(bump((r - 0.5) / 2.0) * std::pow(r, -4.0)); }, rho_pow(4), 2.5);
    auto w0 = green_apply_numeric(op.cone, 0, f, num);
    CHECK(std::abs(w0.tail.coeff(2, 0) + 0.5) < 1e-12);
    // G(V w0): the rho^5 piece of V w0 is eps*(-1/2) rho^5 and G(rho^5) = -rho^3/6
    ModeProfile vw = ModeProfile::sample(0, Var::r, G, [&](double r) { return op.V(r) * w0.at(r); },
                                         multiply(op.V_tail, w0.tail), 2.5);
    auto gvw = green_apply_numeric(op.cone, 0, vw, num);
    CHECK(std::abs(gvw.tail.coeff(3, 0) - eps / 12.0) < 1e-12);

    auto sol = solve_perturbed(op, 0, f, 8.0, num);
    CHECK(sol.contraction < 1.0);
    auto Lu = apply_L_numeric(op.cone, 0, sol.u);
    double rn = 0, rd = 0;
    for (int i = 8; i + 8 < G.size(); ++i) {
        double r = G.x(i);
        double V = r >= 2.5 ? eps / (r * r * r) : op.V(r);
        rn = std::max(rn, std::abs(Lu[i] + V * sol.u.samples[i] - f.samples[i]));
        rd = std::max(rd, std::abs(f.samples[i]));
    }
    CHECK(rn / rd < 1e-8);

    // tail lies in the index set predicted by the zero-energy recursion
    double h = 6.0;
    std::vector<IndexSet> El{IndexSet({{2, 0}}, h)};
    auto fp = fixed_point_zf(op.cone, 1, IndexSet(h), El, op.beth(), op.beth0(), h);
    PhgSeries tail = sol.u.tail;
    for (const auto& t : tail.terms()) {
        if (std::abs(t.c) <= 1e-10 || t.j.re() > h) continue;
        std::string where = t.j.str() + " " + std::to_string(t.k);
        CHECK_MESSAGE(fp.I_l[0].contains(t.j, t.k), where);
    }
}

TEST_CASE("each symbolic tail pass fixes 1 + beth more orders")
{
    for (double eps : {0.1, -0.2}) {
        auto op = coulomb_tail_potential(eps);
        ZfNumerics num;
        auto f = ModeProfile::sample(
            0, Var::r, num.grid(), [](double r) { return cplx(bump((r - 0.5) / 2.0) * std::pow(r, -4.0)); },
            rho_pow(4), 2.5);
        double amax = 9.0;
        auto sol = solve_perturbed(op, 0, f, amax, num);
        cplx A = sol.u.tail.coeff(1, 0);
        PhgSeries T(Var::rho, amax);
        double prev = 1.0;
        for (int pass = 1; pass <= 6; ++pass) {
            T = zf_tail_pass(op, 0, f.tail.truncated(amax + 2), A, T).truncated(amax);
            PhgSeries D(Var::rho);
            for (const auto& t : (sol.u.tail - T).terms())
                if (std::abs(t.c) > 1e-12 * sol.u.tail.max_abs_coeff()) D.add_term(t.j, t.k, t.c);
            double err = D.pi_min();
            if (!std::isfinite(err)) break;
            CHECK(err >= prev + 1.0 + op.beth() - 1e-9);
            prev = err;
        }
    }
}

TEST_CASE("ModeProfile CSV format")
{
    Grid G = Grid::geometric(1.0, 2.0, 6);
    auto p = ModeProfile::sample(0, Var::r, G, [](double r) { return cplx(r, -r); });
    auto csv = p.to_csv();
    CHECK(csv.rfind("r, Re(u), Im(u)\n1, 1, -1\n", 0) == 0);
}
