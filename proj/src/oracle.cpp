#include "lerexp/oracle.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/bessel_prime.hpp>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <fmt/format.h>

namespace lerexp {

namespace odeint = boost::numeric::odeint;

namespace {

using State = std::vector<cplx>;
const cplx I(0.0, 1.0);

// integrate y = (U, r U', I) over increasing times with outputs at each time
template <class Sys>
void integrate_to(Sys sys, State y, const std::vector<double>& times, double rtol, std::vector<State>& out)
{
    out.clear();
    out.reserve(times.size());
    auto stepper = odeint::make_dense_output(1e-300, rtol, odeint::runge_kutta_dopri5<State>());
    double dt0 = std::min(1e-3, std::max(1e-6, (times.back() - times.front()) * 1e-4));
    odeint::integrate_times(stepper, sys, y, times.begin(), times.end(), dt0,
                            [&](const State& s, double) { out.push_back(s); });
}

// outgoing series value and r-derivative at r
std::pair<cplx, cplx> outgoing_value(int d, double sigma, const std::vector<cplx>& c, double r)
{
    cplx S = 0.0, dS = 0.0;
    for (std::size_t n = 0; n < c.size(); ++n) {
        S += c[n] * std::pow(r, -double(n));
        dS += -double(n) * c[n] * std::pow(r, -double(n) - 1);
    }
    double a = 0.5 * (d - 1);
    cplx pre = std::pow(r, -a) * std::exp(I * sigma * r);
    cplx U = pre * S;
    cplx dU = U * (-a / r + I * sigma) + pre * dS;
    return {U, dU};
}

}  // namespace

double OracleRun::matching_radius() const
{
    if (R_max > 0) return R_max;
    return std::max({40.0 / sigma, 2.0 * op.tail_radius, f_support});
}

std::vector<cplx> outgoing_coefficients(const RadialOperator& op, int l, double sigma, int N)
{
    double nu = op.cone.nu(l);
    double mu = nu * nu - 0.25;
    // potential tail sum_p v_p r^{-p}, integer p >= 3
    std::vector<std::pair<int, cplx>> v;
    if (!op.zero()) {
        for (const auto& t : op.V_tail.terms()) {
            auto p = t.j.as_integer();
            if (!p || t.k != 0 || *p < 3)
                throw ValidationError("outgoing_coefficients: potential tail must be integer powers r^{-p}, p >= 3");
            v.push_back({int(*p), t.c});
        }
    }
    std::vector<cplx> c(N + 1, 0.0);
    c[0] = 1.0;
    for (int m = 0; m < N; ++m) {
        cplx s = (double(m) * (m + 1) - mu) * c[m];
        for (auto [p, vp] : v) {
            int q = m + 2 - p;
            if (q >= 0) s -= vp * c[q];
        }
        c[m + 1] = s / (2.0 * I * sigma * double(m + 1));
    }
    return c;
}

ModeProfile limiting_resolvent(const OracleRun& run, const Grid& grid)
{
    const RadialOperator& op = run.op;
    if (!(run.sigma > 0)) throw ValidationError("limiting_resolvent: sigma must be positive");
    const int d = op.cone.d, l = run.l;
    const double sigma = run.sigma, lam = op.cone.modes.at(l).lambda;
    const double R = run.matching_radius();
    if (sigma * R < 20.0 - 1e-9) throw ValidationError("limiting_resolvent: sigma R_max < 20");
    if (R < run.f_support) throw ValidationError("limiting_resolvent: R_max inside the forcing support");
    if (!op.zero() && R < op.tail_radius) throw ValidationError("limiting_resolvent: R_max inside the potential core");
    const double r0 = grid.xmin();
    if (op.potential_at(r0) != 0.0) throw ValidationError("limiting_resolvent: potential must vanish at the inner radius");

    const double nu = op.cone.nu(l), a = 0.5 * (d - 2), b = op.cone.modes.at(l).b.re();
    auto f = run.forcing;

    // (U, U_s, I) in s = log r
    auto rhs = [&](double s, const State& y, State& dy, double dir, bool with_f) {
        double r = std::exp(s);
        double q = lam + r * r * (op.potential_at(r) - sigma * sigma);
        dy[0] = dir * y[1];
        dy[1] = dir * (-(d - 2.0) * y[1] + q * y[0]);
        dy[2] = with_f ? dir * y[0] * f(r) * std::pow(r, double(d)) : 0.0;
    };

    std::vector<double> ts;
    std::vector<int> idx;
    for (int i = 0; i < grid.size(); ++i)
        if (grid.x(i) < R) {
            ts.push_back(std::log(grid.x(i)));
            idx.push_back(i);
        }
    ts.push_back(std::log(R));
    ts.front() = std::log(r0);

    // regular solution from the free Bessel data at r0
    State y1(3);
    {
        double z = sigma * r0;
        double J = boost::math::cyl_bessel_j(nu, z), Jp = boost::math::cyl_bessel_j_prime(nu, z);
        double U = std::pow(r0, -a) * J, dU = -a * std::pow(r0, -a - 1) * J + std::pow(r0, -a) * sigma * Jp;
        double sc = 1.0 / std::abs(U);
        y1[0] = U * sc;
        y1[1] = r0 * dU * sc;
        y1[2] = y1[0] * f(r0) * std::pow(r0, double(d)) / (b + d);
    }
    std::vector<State> out1;
    integrate_to([&](const State& y, State& dy, double s) { rhs(s, y, dy, 1.0, true); }, y1, ts, run.rtol, out1);

    // outgoing solution from R inward, in tau = -s
    auto coef = outgoing_coefficients(op, l, sigma, run.bc_order);
    State y2(3);
    auto [U2, dU2] = outgoing_value(d, sigma, coef, R);
    y2[0] = U2;
    y2[1] = R * dU2;
    y2[2] = 0.0;
    std::vector<double> taus(ts.rbegin(), ts.rend());
    for (auto& t : taus) t = -t;
    std::vector<State> out2r;
    integrate_to([&](const State& y, State& dy, double tau) { rhs(-tau, y, dy, -1.0, true); }, y2, taus, run.rtol,
                 out2r);
    std::vector<State> out2(out2r.rbegin(), out2r.rend());
    for (auto& s : out2) s[2] = -s[2];  // I2 = int_r^R y2 f r^{d-1} dr

    const State& e1 = out1.back();
    const State& e2 = out2.back();
    double muR = std::pow(R, d - 2.0);  // r^{d-1} times 1/r from U_s = r U'
    cplx W = muR * (e1[0] * e2[1] - e1[1] * e2[0]);
    double Wscale = muR * std::abs(e1[0] * e2[1]) + muR * std::abs(e1[1] * e2[0]);
    if (std::abs(W) < 1e-10 * Wscale)
        throw NumericError(fmt::format("limiting_resolvent: Wronskian near zero at sigma = {} (resonance)", sigma));
    cplx K = -W;
    cplx I1R = e1[2];

    ModeProfile u;
    u.l = l;
    u.var = Var::r;
    u.grid = grid;
    u.samples.assign(grid.size(), 0.0);
    u.dsamples.assign(grid.size(), 0.0);
    for (std::size_t m = 0; m < idx.size(); ++m) {
        int i = idx[m];
        double r = grid.x(i);
        const State& p1 = out1[m];
        const State& p2 = out2[m];
        u.samples[i] = (p2[0] * p1[2] + p1[0] * p2[2]) / K;
        u.dsamples[i] = (p2[1] * p1[2] + p1[1] * p2[2]) / (K * r);
    }
    for (int i = 0; i < grid.size(); ++i) {
        double r = grid.x(i);
        if (r < R) continue;
        auto [U, dU] = outgoing_value(d, sigma, coef, r);
        u.samples[i] = U * I1R / K;
        u.dsamples[i] = dU * I1R / K;
    }
    u.head = PhgSeries(Var::r);
    u.has_head = false;
    u.x_tail = INF;
    return u;
}

std::string OracleReport::to_csv() const
{
    std::string s = "sigma, err, weight\n";
    for (std::size_t i = 0; i < sigma.size(); ++i) s += fmt::format("{:.6g}, {:.10g}, {:.6g}\n", sigma[i], err[i], weight[i]);
    return s;
}

std::string OracleReport::summary() const
{
    return fmt::format("fitted p = {:.6f}\n95% interval = [{:.6f}, {:.6f}]\npoints = {}\n", p, p_lo, p_hi, sigma.size());
}

OracleReport fit_power(const std::vector<double>& sigmas, const std::vector<double>& errs, double weight_exponent)
{
    OracleReport rep;
    rep.sigma = sigmas;
    rep.err = errs;
    rep.weight.assign(sigmas.size(), weight_exponent);
    const int n = int(sigmas.size());
    if (n < 2) return rep;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
        double x = std::log(sigmas[i]), y = std::log(std::max(errs[i], 1e-300));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    double den = n * sxx - sx * sx;
    double slope = (n * sxy - sx * sy) / den, icpt = (sy - slope * sx) / n;
    rep.p = slope;
    if (n > 2) {
        double ss = 0, mx = sx / n, vx = 0;
        for (int i = 0; i < n; ++i) {
            double x = std::log(sigmas[i]), y = std::log(std::max(errs[i], 1e-300));
            ss += (y - icpt - slope * x) * (y - icpt - slope * x);
            vx += (x - mx) * (x - mx);
        }
        double se = std::sqrt(ss / (n - 2) / vx);
        boost::math::students_t dist(n - 2);
        double tq = boost::math::quantile(boost::math::complement(dist, 0.025));
        rep.p_lo = slope - tq * se;
        rep.p_hi = slope + tq * se;
    } else {
        rep.p_lo = rep.p_hi = slope;
    }
    return rep;
}

OracleReport compare(const SigmaRadialFunction& eval, const RadialOperator& op, int l,
                     const std::function<cplx(double)>& forcing, const std::vector<double>& sigmas,
                     double weight_exponent, const Grid& grid, double r_lo, double r_hi, double c_hi)
{
    for (std::size_t i = 1; i < sigmas.size(); ++i)
        if (!(sigmas[i] < sigmas[i - 1])) throw ValidationError("compare: sigma list must be decreasing");
    std::vector<double> errs;
    for (double s : sigmas) {
        OracleRun run;
        run.op = op;
        run.l = l;
        run.sigma = s;
        run.forcing = forcing;
        ModeProfile ref = limiting_resolvent(run, grid);
        double top = std::min(r_hi, c_hi / s), e = 0.0;
        for (int i = 0; i < grid.size(); ++i) {
            double r = grid.x(i);
            if (r < r_lo || r > top) continue;
            e = std::max(e, std::abs(eval(s, r) - ref.samples[i]) * std::pow(1.0 + r, weight_exponent));
        }
        errs.push_back(e);
    }
    return fit_power(sigmas, errs, weight_exponent);
}

PhaseFit hypergeometric_phase(double m, double sigma, double r0, double r1)
{
    if (!(r0 > m + 1 && r1 > r0)) throw ValidationError("hypergeometric_phase: window must lie in (m + 1, inf)");
    if (!(sigma > 0)) throw ValidationError("hypergeometric_phase: sigma must be positive");
    // u'' = -sigma^2 u / (1 - m/r); state (u, u')
    auto sys = [&](const State& y, State& dy, double r) {
        dy[0] = y[1];
        dy[1] = -sigma * sigma * y[0] / (1.0 - m / r);
    };
    // WKB data u = k^{-1/2} e^{i phi}, k = sigma / sqrt(1 - m/r), at r0
    double k = sigma / std::sqrt(1.0 - m / r0);
    double dk = -0.5 * k * (m / (r0 * r0)) / (1.0 - m / r0);
    State y(2);
    y[0] = 1.0 / std::sqrt(k);
    y[1] = y[0] * (I * k - 0.5 * dk / k);
    const int N = 400;
    std::vector<double> rs(N);
    for (int i = 0; i < N; ++i) rs[i] = r0 * std::pow(r1 / r0, double(i) / (N - 1));
    std::vector<State> out;
    auto stepper = odeint::make_dense_output(1e-300, 1e-12, odeint::runge_kutta_dopri5<State>());
    odeint::integrate_times(stepper, sys, y, rs.begin(), rs.end(), 0.1 / sigma,
                            [&](const State& s, double) { out.push_back(s); });
    std::vector<double> ph(N);
    double prev = 0.0;
    for (int i = 0; i < N; ++i) {
        double p = std::arg(out[i][0] * std::exp(-I * sigma * rs[i]));
        if (i > 0) {
            double dp = std::remainder(p - prev, 2 * M_PI);
            if (std::fabs(dp) > M_PI / 2) throw NumericError("hypergeometric_phase: phase-unwrap failure");
            p = ph[i - 1] + dp;
        }
        ph[i] = p;
        prev = std::arg(out[i][0] * std::exp(-I * sigma * rs[i]));
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < N; ++i) {
        double x = std::log(rs[i]);
        sx += x;
        sy += ph[i];
        sxx += x * x;
        sxy += x * ph[i];
    }
    PhaseFit fit;
    fit.b = (N * sxy - sx * sy) / (N * sxx - sx * sx);
    fit.a = (sy - fit.b * sx) / N;
    double ss = 0;
    for (int i = 0; i < N; ++i) ss += std::pow(ph[i] - fit.a - fit.b * std::log(rs[i]), 2);
    fit.rms = std::sqrt(ss / N);
    return fit;
}

}  // namespace lerexp
