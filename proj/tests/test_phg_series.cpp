#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <random>

#include "lerexp/phg_series.hpp"

using namespace lerexp;

namespace {

PhgSeries random_series(std::mt19937_64& g, Var v = Var::rho)
{
    std::uniform_int_distribution<int> nterms(1, 5), num(0, 12), den(1, 2), kk(0, 2), coin(0, 4);
    std::normal_distribution<double> c(0.0, 1.0);
    PhgSeries s(v);
    int n = nterms(g);
    for (int i = 0; i < n; ++i) {
        Exponent j(Rat(num(g), den(g)));
        if (coin(g) == 0) j = Exponent::make_complex(j, Exponent(Rat(1, 2)));
        s.add_term(j, kk(g), {c(g), c(g)});
    }
    return s;
}

bool close(const PhgSeries& a, const PhgSeries& b, double tol)
{
    PhgSeries d = a - b;
    return d.max_abs_coeff() <= tol;
}

}  // namespace

TEST_CASE("algebra examples")
{
    auto r1 = PhgSeries::monomial(Var::rho, 1);
    auto r2 = PhgSeries::monomial(Var::rho, 2);
    auto p = multiply(r1, r2);
    REQUIRE(p.terms().size() == 1);
    CHECK(p.terms()[0].j == Exponent(3));
    CHECK(p.terms()[0].c == cplx(1.0));

    auto s = PhgSeries::monomial(Var::rho, 1, 1) + r1;
    REQUIRE(s.terms().size() == 2);
    CHECK(s.coeff(1, 1) == cplx(1.0));
    CHECK(s.coeff(1, 0) == cplx(1.0));

    auto e = PhgSeries::monomial(Var::rho, 1, 0, 1.0, 2.0);
    auto q = multiply(e, r1);
    CHECK(q.error_order() == doctest::Approx(3.0));
    CHECK(q.coeff(2, 0) == cplx(1.0));

    CHECK_THROWS_AS(r1 + PhgSeries::monomial(Var::r, 1), ValidationError);
}

TEST_CASE("add drops terms beyond the smaller error order")
{
    auto a = PhgSeries::monomial(Var::rho, 1, 0, 1.0, 2.0);
    auto b = PhgSeries::monomial(Var::rho, 3);
    auto s = a + b;
    CHECK(s.error_order() == doctest::Approx(2.0));
    CHECK(s.terms().size() == 1);
}

TEST_CASE("derivative examples")
{
    auto s = x_d_x(PhgSeries::monomial(Var::rho, 2, 1));
    CHECK(s.coeff(2, 1) == cplx(2.0));
    CHECK(s.coeff(2, 0) == cplx(1.0));
    CHECK(x_d_x(PhgSeries::monomial(Var::rho, 0)).empty());

    auto dr = d_r(PhgSeries::monomial(Var::r, -1));
    CHECK(dr.coeff(-2, 0) == cplx(-1.0));
    auto drho = d_r(PhgSeries::monomial(Var::rho, 1));
    CHECK(drho.coeff(2, 0) == cplx(-1.0));
}

TEST_CASE("d_r agrees with finite differences in both variable kinds")
{
    std::mt19937_64 g(11);
    for (Var v : {Var::rho, Var::r}) {
        for (int trial = 0; trial < 20; ++trial) {
            auto s = random_series(g, v);
            double r = 1.7, h = 1e-4;
            auto at = [&](double rr) { return s.evaluate(is_inverse(v) ? 1.0 / rr : rr); };
            cplx fd = (at(r + h) - at(r - h)) / (2 * h);
            cplx fd2 = (at(r + h) - 2.0 * at(r) + at(r - h)) / (h * h);
            cplx an = d_r(s).evaluate(is_inverse(v) ? 1.0 / r : r);
            cplx an2 = d_r2(s).evaluate(is_inverse(v) ? 1.0 / r : r);
            CHECK(std::abs(fd - an) < 1e-6 * (1 + std::abs(an)));
            CHECK(std::abs(fd2 - an2) < 1e-4 * (1 + std::abs(an2)));
        }
    }
}

TEST_CASE("resonant_integral examples")
{
    auto a = resonant_integral(0, PhgSeries::monomial(Var::rho, 0));
    REQUIRE(a.terms().size() == 1);
    CHECK(a.coeff(0, 1) == cplx(-1.0));

    auto b = resonant_integral(1, PhgSeries::monomial(Var::rho, 2));
    REQUIRE(b.terms().size() == 2);
    CHECK(std::abs(b.coeff(1, 0) - 1.0) < 1e-15);
    CHECK(std::abs(b.coeff(2, 0) + 1.0) < 1e-15);

    auto c = resonant_integral(1, PhgSeries::monomial(Var::rho, 1));
    REQUIRE(c.terms().size() == 1);
    CHECK(c.coeff(1, 1) == cplx(-1.0));
}

TEST_CASE("resonant_integral is a right inverse of (x d/dx - a)")
{
    std::mt19937_64 g(7);
    std::uniform_int_distribution<int> num(0, 8);
    for (int trial = 0; trial < 300; ++trial) {
        auto f = random_series(g);
        Exponent a(Rat(num(g), 2));
        auto u = resonant_integral(a, f);
        auto lhs = x_d_x(u) - u * a.value();
        CHECK(close(lhs, f * cplx(-1.0), 1e-10 * (1 + f.max_abs_coeff())));
    }
}

TEST_CASE("resonant_integral matches quadrature and vanishes at the upper limit")
{
    std::mt19937_64 g(99);
    std::uniform_int_distribution<int> num(0, 8);
    std::uniform_real_distribution<double> x(0.05, 0.95);
    for (int trial = 0; trial < 50; ++trial) {
        auto f = random_series(g);
        Exponent a(Rat(num(g), 2));
        auto u = resonant_integral(a, f);
        CHECK(std::abs(u.evaluate(1.0)) < 1e-12 * (1 + f.max_abs_coeff()));
        double rho = x(g);
        auto integrand = [&](double s) { return f.evaluate(s) * std::exp(-(a.value() + 1.0) * std::log(s)); };
        auto re = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
            [&](double s) { return integrand(s).real(); }, rho, 1.0, 10, 1e-13);
        auto im = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
            [&](double s) { return integrand(s).imag(); }, rho, 1.0, 10, 1e-13);
        cplx want = std::pow(rho, a.value()) * cplx(re, im);
        CHECK(std::abs(u.evaluate(rho) - want) < 1e-9 * (1 + std::abs(want)));
    }
}

TEST_CASE("resonant_integral index set lies in uplus(a,0,E)")
{
    std::mt19937_64 g(2024);
    std::uniform_int_distribution<int> num(0, 8);
    for (int trial = 0; trial < 300; ++trial) {
        auto f = random_series(g);
        Exponent a(Rat(num(g), 2));
        double h = 8.0;
        auto lhs = resonant_integral(a, f).index_set_of(h);
        auto rhs = uplus(a, 0, f.index_set_of(h));
        CHECK(lhs.subset_of(rhs));
    }
}

TEST_CASE("sigma_rewrite examples")
{
    auto one = sigma_rewrite(PhgTerm{1, 0, 1.0}, -1);
    REQUIRE(one.size() == 1);
    CHECK(one[0].alpha == Exponent(1));
    CHECK(one[0].kappa == 0);
    CHECK(one[0].term.j == Exponent(-1));

    auto lg = sigma_rewrite(PhgTerm{1, 1, 1.0}, -1);
    REQUIRE(lg.size() == 2);
    CHECK(lg[0].kappa == 0);
    CHECK(lg[0].term.k == 1);
    CHECK(lg[0].term.c == cplx(-1.0));
    CHECK(lg[1].kappa == 1);
    CHECK(lg[1].term.k == 0);
    CHECK(lg[1].term.c == cplx(1.0));

    auto two = sigma_rewrite(PhgTerm{1, 2, 1.0}, -1);
    REQUIRE(two.size() == 3);
    CHECK(two[0].term.c == cplx(1.0));
    CHECK(two[1].term.c == cplx(-2.0));
    CHECK(two[2].term.c == cplx(1.0));
}

TEST_CASE("sigma_rewrite round trip at random points")
{
    std::mt19937_64 g(5);
    std::uniform_real_distribution<double> ls(-9.0, -0.5), ly(-3.0, 3.0);
    std::uniform_int_distribution<int> num(-6, 6), kk(0, 4);
    for (int i = 0; i < 100; ++i) {
        PhgTerm t{Exponent(Rat(num(g), 2)), kk(g), {1.3, -0.4}};
        int p = (i % 2) ? 1 : -1;
        double sigma = std::exp(ls(g)), y = std::exp(ly(g));
        double x = sigma * std::pow(y, p);
        cplx want = t.c * std::pow(x, t.j.re()) * std::pow(std::log(x), t.k);
        cplx got = 0.0;
        for (const auto& pc : sigma_rewrite(t, p))
            got += std::pow(sigma, pc.alpha.re()) * std::pow(std::log(sigma), pc.kappa) * pc.term.c *
                   std::pow(y, pc.term.j.re()) * std::pow(std::log(y), pc.term.k);
        CHECK(std::abs(got - want) <= 1e-12 * std::max(1.0, std::abs(want)));
    }
}

TEST_CASE("text round trip")
{
    PhgSeries s(Var::rhohat, 4.5);
    s.add_term(Exponent(Rat(1, 2)), 0, {1.5, -2.0});
    s.add_term(3, 2, {0.25, 0.0});
    auto t = PhgSeries::from_text(s.to_text());
    CHECK(t.var() == Var::rhohat);
    CHECK(t.error_order() == doctest::Approx(4.5));
    CHECK(close(s, t, 0.0));
    CHECK(s.to_text().rfind("var rhohat error_order 4.5\n", 0) == 0);
}
