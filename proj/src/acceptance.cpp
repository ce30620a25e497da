#include "lerexp/acceptance.hpp"

#include <fmt/format.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <chrono>
#include <random>

#include "lerexp/oracle.hpp"
#include "lerexp/quasimode.hpp"

namespace lerexp {

namespace {

const double PI = 3.14159265358979323846;
const cplx I(0.0, 1.0);

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    bool pass = false;
    std::string detail;
};

// ---------------------------------------------------------------- 1, 2: index sets

Outcome multipole_sets()
{
    const double H = 6.0;
    ConeData cone = ConeData::euclidean(3, 12);
    auto t0 = Clock::now();
    bool ok = true;
    std::string bad;
    for (int ell = 0; ell <= 3; ++ell) {
        std::vector<IndexSet> El(ell, IndexSet(H, SetKind::index));
        auto fp = fixed_point_zf(cone, ell, IndexSet(H, SetKind::index), El, INF, INF, H);
        IndexSet C(H, SetKind::index);
        for (int l = ell; l < int(cone.modes.size()) && cone.modes[l].c.re() <= H; ++l)
            C = set_union(C, single(cone.modes[l].c, 0, H));
        if (fp.I != C) {
            ok = false;
            bad += fmt::format(" I(ell={})", ell);
        }
        for (int l = 0; l < ell; ++l)
            if (fp.I_l[l] != single(cone.modes[l].c, 0, H)) {
                ok = false;
                bad += fmt::format(" I_{}(ell={})", l, ell);
            }
    }
    double t = since(t0);
    return {ok && t < 1.0, fmt::format("ell = 0..3, horizon 6: {}", ok ? "exact" : "mismatch in" + bad)};
}

IndexSet random_index_set(std::mt19937_64& rng, double h)
{
    std::uniform_int_distribution<int> n(0, 4), num(1, 12), den(1, 3), kk(0, 2);
    std::vector<IndexTerm> v;
    int m = n(rng);
    for (int i = 0; i < m; ++i) v.push_back({Exponent(Rat(num(rng), den(rng))), kk(rng)});
    return IndexSet(v, h, SetKind::index);
}

Outcome uplus_identity(std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> num(-2, 12), den(1, 3);
    std::uniform_real_distribution<double> hd(2.0, 6.0);
    auto t0 = Clock::now();
    int held = 0, resonant = 0;
    for (int it = 0; it < 200; ++it) {
        IndexSet E = random_index_set(rng, hd(rng));
        Exponent a(Rat(num(rng), den(rng)));
        // every other draw puts a on an exponent of E
        if (it % 2 == 0 && !E.empty()) {
            a = E.terms()[it % E.size()].j;
            ++resonant;
        }
        IndexSet lhs = uplus(a, 0, set_union(uplus(a + Exponent(1), 0, shift(E, Exponent(1), 0)), E));
        if (lhs == uplus(a, 0, E)) ++held;
    }
    double t = since(t0);
    return {held == 200 && t < 1.0,
            fmt::format("{}/200 cases hold ({} resonant), seed {}", held, resonant, seed)};
}

// ---------------------------------------------------------------- 3, 4: zf

Outcome resonance_vectors()
{
    auto cone = ConeData::euclidean(3, 3);
    auto rho = [](int j) { return PhgSeries::monomial(Var::rho, j); };
    struct Vec {
        int l, j;
        Exponent out;
        int k;
        double c;
    };
    // r^-3 -> r^-1 log r, r^-4 -> -r^-2 / 2, l = 1: r^-4 -> r^-2 log r / 3 (coefficients in rho, log rho)
    std::vector<Vec> vs{{0, 3, 1, 1, -1.0}, {0, 4, 2, 0, -0.5}, {1, 4, 2, 1, -1.0 / 3.0}};
    double worst = 0;
    bool shape = true;
    for (const auto& v : vs) {
        auto u = green_apply_exact(cone, v.l, rho(v.j));
        shape = shape && u.terms().size() == 1;
        worst = std::max(worst, std::abs(u.coeff(v.out, v.k) - v.c));
        auto res = apply_L_exact(cone, v.l, u) - rho(v.j);
        worst = std::max(worst, res.max_abs_coeff());
    }
    return {shape && worst < 1e-12, fmt::format("3 vectors, max coefficient error {:.2e}{}", worst,
                                                shape ? "" : ", unexpected extra terms")};
}

Outcome coulomb_monopole()
{
    auto t0 = Clock::now();
    auto cone = ConeData::euclidean(3, 0);
    ZfNumerics num;
    auto charge = [](double r) { return cplx(std::exp(-r * r)); };
    auto f = ModeProfile::sample(0, Var::r, num.grid(), charge, PhgSeries(Var::rho), num.R_tail);
    auto u = green_apply_numeric(cone, 0, f, num);
    double total = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [&](double r) { return 4 * PI * r * r * charge(r).real(); }, 0.0, 30.0, 15, 1e-15);
    double expect = total / (4 * PI);
    double rel = std::abs(u.tail.coeff(1, 0) - expect) / expect;
    double t = since(t0);
    return {rel < 1e-6 && t < 5.0, fmt::format("tail coefficient {:.12f} vs {:.12f}, relative {:.2e}",
                                               u.tail.coeff(1, 0).real(), expect, rel)};
}

// ---------------------------------------------------------------- 5, 6: tf

Outcome tf_kernels()
{
    Grid G = Grid::geometric(1e-2, 20.0, 2048);
    double worst = 0;
    for (int d : {3, 4, 5}) {
        auto cone = ConeData::euclidean(d, 4);
        for (int l = 0; l <= 4; ++l) {
            double lam = cone.modes[l].lambda;
            for (TfBranch br : {TfBranch::recessive, TfBranch::outgoing}) {
                ModeProfile u = ModeProfile::zero(l, Var::rhat, G);
                u.dsamples.resize(G.size());
                for (int i = 0; i < G.size(); ++i) {
                    auto k = tf_kernel_value(cone, l, br, G.x(i));
                    u.samples[i] = k.w;
                    u.dsamples[i] = k.dw;
                }
                CVec Lw = apply_Ltf_numeric(cone, l, u);
                CVec w2 = d_dx(G, u.dsamples, 8);
                for (int i = 0; i < G.size(); ++i) {
                    double x = G.x(i);
                    double scale = std::abs(w2[i]) + std::abs(((d - 1) / x + 2.0 * I) * u.dsamples[i]) +
                                   std::abs((lam / (x * x) - I * (d - 1.0) / x) * u.samples[i]);
                    worst = std::max(worst, std::abs(Lw[i]) / scale);
                }
            }
        }
    }
    auto cone3 = ConeData::euclidean(3, 0);
    cplx C = -I * std::sqrt(2 / PI);
    double closed = 0;
    for (double x : {1e-3, 0.1, 1.0, 5.0, 11.9, 12.1, 50.0, 300.0}) {
        auto o = tf_kernel_value(cone3, 0, TfBranch::outgoing, x);
        closed = std::max(closed, std::abs(o.w - C / x) / std::abs(C / x));
    }
    return {worst < 1e-8 && closed < 1e-12,
            fmt::format("d = 3..5, l <= 4, both branches: relative residual {:.2e}; d = 3 outgoing vs C/rhat {:.2e}",
                        worst, closed)};
}

Outcome tf_far_field()
{
    auto t0 = Clock::now();
    TfNumerics num;
    Grid G = num.grid();
    auto bump = ModeProfile::sample(0, Var::rhat, G, [](double x) {
        double s = (x - 0.5) / 2.5;
        if (s <= 0 || s >= 1) return cplx(0.0);
        return cplx(smooth_step(2 * s).v * (1 - smooth_step(2 * s - 1).v));
    });
    double worst = 0;
    std::string fits;
    for (int d : {3, 4, 5}) {
        auto cone = ConeData::euclidean(d, 2);
        for (int l : {0, 1, 2}) {
            auto p = TfProblem::make(cone, l, bump);
            p.forcing.l = l;
            double e = fitted_decay_exponent(tf_solve(p, num), 40.0, 400.0);
            worst = std::max(worst, std::abs(e - 0.5 * (d - 1)) / (0.5 * (d - 1)));
            if (l == 0) fits += fmt::format(" d={}: {:.4f}", d, e);
        }
    }
    double t = since(t0);
    return {worst < 0.02 && t < 10.0,
            fmt::format("fitted exponents (l = 0){}; worst relative deviation {:.2e} over l <= 2", fits, worst)};
}

// ---------------------------------------------------------------- 7, 8, 10: driver against the oracle

const std::vector<double> SIGMAS{1e-1, 3e-2, 1e-2, 3e-3, 1e-3};

cplx gaussian(double r) { return std::exp(-r * r); }

RadialOperator criterion_operator(double eps)
{
    auto op = RadialOperator::free(ConeData::euclidean(3, 10));
    if (eps == 0) return op;
    op.V = [eps](double r) { return eps * smooth_step((r - 0.5) / 2.0).v / (r * r * r); };
    op.V_tail = PhgSeries::monomial(Var::rho, 3, 0, eps);
    op.tail_radius = 2.5;
    op.support_min = 0.5;
    return op;
}

struct ConvergenceRun {
    double eps = 0;
    RadialOperator op;
    Grid grid;
    std::vector<ModeProfile> refs;  // oracle per sigma
    QuasimodeState s2, s3;
    std::vector<double> e2, e3;
    OracleReport r2, r3;
};

double window_error(const ConvergenceRun& c, std::size_t i, const std::function<cplx(double)>& eval)
{
    double s = SIGMAS[i], top = std::min(1e9, 10.0 / s), e = 0;
    for (int k = 0; k < c.grid.size(); ++k) {
        double r = c.grid.x(k);
        if (r < 1e-2 || r > top) continue;
        e = std::max(e, std::abs(eval(r) - c.refs[i].samples[k]));
    }
    return e;
}

ConvergenceRun convergence_run(double eps)
{
    ConvergenceRun c;
    c.eps = eps;
    c.op = criterion_operator(eps);
    c.grid = Grid::geometric(1e-3, 1e5, 4096);
    for (double s : SIGMAS) {
        OracleRun run;
        run.op = c.op;
        run.sigma = s;
        run.forcing = gaussian;
        c.refs.push_back(limiting_resolvent(run, c.grid));
    }
    auto f = ModeProfile::sample(0, Var::r, ZfNumerics{}.grid(), gaussian);
    DriverOptions opt;
    opt.target_order = 2.0;
    c.s2 = iterate(c.op, 0, f, opt);
    c.s3 = c.s2;
    add_rounds(c.s3, 1);
    for (std::size_t i = 0; i < SIGMAS.size(); ++i) {
        double s = SIGMAS[i];
        c.e2.push_back(window_error(c, i, [&](double r) { return evaluate(c.s2, s, r); }));
        c.e3.push_back(window_error(c, i, [&](double r) { return evaluate(c.s3, s, r); }));
    }
    c.r2 = fit_power(SIGMAS, c.e2, 0.0);
    c.r3 = fit_power(SIGMAS, c.e3, 0.0);
    return c;
}

struct Shared {
    std::vector<ConvergenceRun> runs;
    std::string failure;  // set when the runs could not be produced
    double seconds = 0;
};

Outcome quasimode_convergence(Shared& sh)
{
    auto t0 = Clock::now();
    try {
        for (double eps : {0.0, 0.1}) sh.runs.push_back(convergence_run(eps));
    } catch (const std::exception& e) {
        sh.failure = e.what();
        sh.runs.clear();
        return {false, fmt::format("driver/oracle failed: {}", e.what())};
    }
    sh.seconds = since(t0);
    bool ok = sh.seconds < 120.0;
    std::string d;
    for (const auto& c : sh.runs) {
        double pred = c.s2.sum_eps();
        bool near = std::abs(c.r2.p - pred) <= 0.15 * pred;
        bool gain = c.r3.p - c.r2.p >= 0.5;
        ok = ok && near && gain && c.s2.rounds.size() == 2 && c.s3.rounds.size() == 3;
        d += fmt::format("V = {} r^-3: p = {:.3f} vs sum eps {:.3f} ({} rounds), third round p = {:.3f} (+{:.3f}); ",
                         c.eps, c.r2.p, pred, c.s2.rounds.size(), c.r3.p, c.r3.p - c.r2.p);
    }
    d.resize(d.size() - 2);
    return {ok, d};
}

Outcome audit(const Shared& sh)
{
    if (sh.runs.empty()) return {false, "criterion 7 states unavailable: " + sh.failure};
    std::size_t entries = 0;
    int bad = 0;
    for (const auto& c : sh.runs)
        for (const QuasimodeState* s : {&c.s2, &c.s3}) {
            entries += s->audit.size();
            bad += s->audit_violations();
        }
    return {bad == 0 && entries > 0, fmt::format("{} audited coefficients in 4 states, {} violations", entries, bad)};
}

Outcome cutoff_independence(const Shared& sh)
{
    if (sh.runs.empty()) return {false, "criterion 7 states unavailable: " + sh.failure};
    bool ok = true;
    std::string d;
    for (const auto& c : sh.runs) {
        DriverOptions opt = c.s2.opt;
        opt.chi0 = opt.chi0.widened(2.0);
        opt.chi1 = opt.chi1.widened(2.0);
        auto wide = iterate(c.op, 0, c.s2.forcing, opt);
        double worst = 0;
        for (std::size_t i = 0; i < SIGMAS.size(); ++i) {
            double s = SIGMAS[i];
            // the two expansions against each other, measured against the baseline's oracle error
            double top = std::min(1e9, 10.0 / s), delta = 0;
            for (int k = 0; k < c.grid.size(); ++k) {
                double r = c.grid.x(k);
                if (r < 1e-2 || r > top) continue;
                delta = std::max(delta, std::abs(evaluate(c.s2, s, r) - evaluate(wide, s, r)));
            }
            worst = std::max(worst, delta / c.e2[i]);
        }
        ok = ok && worst < 1.0;
        d += fmt::format("V = {} r^-3: max change / residual band = {:.3g}; ", c.eps, worst);
    }
    d.resize(d.size() - 2);
    return {ok, d};
}

// ---------------------------------------------------------------- 9

Outcome log_phase()
{
    auto t0 = Clock::now();
    double worst = 0;
    std::string d;
    for (auto [m, s] : std::vector<std::pair<double, double>>{{1, 0.05}, {-1, 0.05}, {2, 0.02}}) {
        auto fit = hypergeometric_phase(m, s, 10.0 / s, 1000.0 / s);
        double expect = s * m / 2;
        worst = std::max(worst, std::abs(fit.b - expect) / std::abs(expect));
        d += fmt::format("(m, sigma) = ({}, {}): b = {:.6f} vs {:.6f}; ", m, s, fit.b, expect);
    }
    double t = since(t0);
    d += fmt::format("worst relative {:.2e}", worst);
    return {worst < 0.01 && t < 10.0, d};
}

}  // namespace

std::string format_result(const CriterionResult& r)
{
    return fmt::format("{}  {:>2}  {}: {} ({:.2f} s)", r.pass ? "PASS" : "FAIL", r.id, r.title, r.detail, r.seconds);
}

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opt,
                                            const std::function<void(const CriterionResult&)>& report)
{
    Shared sh;
    std::vector<std::pair<std::string, std::function<Outcome()>>> suite{
        {"index-set multipole reproduction", multipole_sets},
        {"uplus identity", [&] { return uplus_identity(opt.seed); }},
        {"zf resonance vectors", resonance_vectors},
        {"Coulomb monopole", coulomb_monopole},
        {"tf kernel annihilation", tf_kernels},
        {"tf far-field exponent", tf_far_field},
        {"quasimode convergence", [&] { return quasimode_convergence(sh); }},
        {"index containment audit", [&] { return audit(sh); }},
        {"long-range log phase", log_phase},
        {"cutoff independence", [&] { return cutoff_independence(sh); }},
    };
    std::vector<CriterionResult> out;
    int id = 0;
    for (auto& [title, run] : suite) {
        CriterionResult r;
        r.id = ++id;
        r.title = title;
        auto t0 = Clock::now();
        try {
            Outcome o = run();
            r.pass = o.pass;
            r.detail = o.detail;
        } catch (const std::exception& e) {
            r.pass = false;
            r.detail = fmt::format("threw: {}", e.what());
        }
        r.seconds = since(t0);
        if (report) report(r);
        out.push_back(r);
    }
    return out;
}

}  // namespace lerexp
