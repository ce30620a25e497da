#include "lerexp/quasimode.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lerexp/errors.hpp"

namespace lerexp {

namespace {

const cplx I(0.0, 1.0);

using Key = std::pair<Exponent, int>;

struct Stratum {
    ModeProfile p;
    double scale = 0.0;  // sum of the contributions' sizes, to detect cancellation
};

double window_max(const ModeProfile& p, const CVec& v, double x0)
{
    double m = 0.0;
    for (int i = 0; i < p.grid.size(); ++i)
        if (p.grid.x(i) >= x0) m = std::max(m, std::abs(v[i]));
    return m;
}

// tf strata are measured away from rhat = 0, where singular contributions dominate
constexpr double TF_WINDOW = 0.1;
constexpr double CANCEL = 1e-9;

bool significant(const Stratum& s, double x0, double abs_tol)
{
    double n = window_max(s.p, s.p.samples, x0);
    return n > abs_tol && n > CANCEL * s.scale;
}

ModeProfile empty_zf(int l, const Grid& g)
{
    ModeProfile p;
    p.l = l;
    p.var = Var::r;
    p.grid = g;
    p.samples.assign(g.size(), 0.0);
    p.tail = PhgSeries(Var::rho);
    p.x_tail = g.xmin();
    p.head = PhgSeries(Var::r);
    return p;
}

ModeProfile empty_tf(int l, const Grid& g)
{
    ModeProfile p;
    p.l = l;
    p.var = Var::rhat;
    p.grid = g;
    p.samples.assign(g.size(), 0.0);
    p.tail = PhgSeries(Var::rhohat);
    p.x_tail = INF;
    p.head = PhgSeries(Var::rhat);
    p.has_head = true;
    return p;
}

// zf factor from samples and an exact tail valid from x_tail on
ProfilePtr zf_factor(int l, const Grid& g, const std::function<cplx(double)>& f, const PhgSeries& tail, double x_tail)
{
    return std::make_shared<const ModeProfile>(ModeProfile::sample(l, Var::r, g, f, tail, x_tail));
}

// tf factor with exact samples and head
ProfilePtr tf_factor(int l, const Grid& g, const std::function<StepValue(double)>& f, const PhgSeries& head,
                     double x_tail)
{
    ModeProfile p = empty_tf(l, g);
    p.dsamples.resize(g.size());
    for (int i = 0; i < g.size(); ++i) {
        StepValue s = f(g.x(i));
        p.samples[i] = s.v;
        p.dsamples[i] = s.d1;
    }
    p.head = head;
    p.x_tail = x_tail;
    return std::make_shared<const ModeProfile>(std::move(p));
}

PhgSeries zero_head() { return PhgSeries(Var::rhat); }

std::map<Key, Stratum> zf_strata_acc(const QuasimodeState& s, double max_order)
{
    std::map<Key, Stratum> out;
    const Grid& g = s.zf_grid;
    const int n = g.size();
    std::vector<double> logr(n);
    for (int i = 0; i < n; ++i) logr[i] = std::log(g.x(i));
    for (const auto& pc : s.residual) {
        const ModeProfile& a = *pc.a;
        const ModeProfile& b = *pc.b;
        if (std::abs(pc.coeff) == 0.0) continue;
        for (const auto& t : b.head.terms()) {
            for (const auto& sp : sigma_rewrite(t, +1)) {
                Exponent order = pc.alpha + sp.alpha;
                if (order.re() > max_order + EXPONENT_TOL) continue;
                if (s.any_zf_solved && compare(order, s.solved_below) <= 0) continue;
                Key key{order, pc.kappa + sp.kappa};
                auto it = out.find(key);
                if (it == out.end()) it = out.emplace(key, Stratum{empty_zf(s.l, g), 0.0}).first;
                Stratum& st = it->second;
                cplx c = pc.coeff * sp.term.c;
                const Exponent& j = sp.term.j;
                const int k = sp.term.k;
                double cmax = 0.0;
                for (int i = 0; i < n; ++i) {
                    cplx y = std::exp(j.value() * logr[i]) * (k ? std::pow(logr[i], k) : 1.0);
                    cplx v = c * y * a.samples[i];
                    st.p.samples[i] += v;
                    cmax = std::max(cmax, std::abs(v));
                }
                st.scale += cmax;
                // r^j log^k r = rho^{-j} (-log rho)^k
                PhgSeries tl = mul_monomial(a.tail, -j, k) * (c * (k % 2 ? -1.0 : 1.0));
                st.p.tail += tl;
                st.p.x_tail = std::max(st.p.x_tail, a.x_tail);
            }
        }
    }
    for (auto& [key, st] : out) st.p.snap_to_tail();
    return out;
}

std::map<Key, Stratum> tf_strata_acc(const QuasimodeState& s, double K)
{
    std::map<Key, Stratum> out;
    const Grid& g = s.tf_grid;
    const int n = g.size();
    std::vector<double> logx(n);
    for (int i = 0; i < n; ++i) logx[i] = std::log(g.x(i));
    for (const auto& pc : s.residual) {
        const ModeProfile& a = *pc.a;
        const ModeProfile& b = *pc.b;
        if (a.tail.empty() || std::abs(pc.coeff) == 0.0) continue;
        if (pc.alpha.re() + a.tail.error_order() <= K + EXPONENT_TOL)
            throw NumericError(fmt::format("tf restriction: piece '{}' at sigma^{} known only to order {}", pc.tag,
                                           pc.alpha.str(), pc.alpha.re() + a.tail.error_order()));
        for (const auto& t : a.tail.terms()) {
            for (const auto& sp : sigma_rewrite(t, -1)) {
                Exponent T = pc.alpha + sp.alpha;
                if (T.re() > K + EXPONENT_TOL) continue;
                Key key{T, pc.kappa + sp.kappa};
                if (std::find(pc.tf_done.begin(), pc.tf_done.end(), key) != pc.tf_done.end()) continue;
                auto it = out.find(key);
                if (it == out.end()) it = out.emplace(key, Stratum{empty_tf(s.l, g), 0.0}).first;
                Stratum& st = it->second;
                cplx c = pc.coeff * sp.term.c;
                const Exponent& j = sp.term.j;
                const int k = sp.term.k;
                double cmax = 0.0;
                for (int i = 0; i < n; ++i) {
                    cplx y = std::exp(j.value() * logx[i]) * (k ? std::pow(logx[i], k) : 1.0);
                    cplx v = c * y * b.samples[i];
                    st.p.samples[i] += v;
                    if (g.x(i) >= TF_WINDOW) cmax = std::max(cmax, std::abs(v));
                }
                st.scale += cmax;
                if (b.has_head) st.p.head += mul_monomial(b.head, j, k) * c;
                else st.p.has_head = false;
            }
        }
    }
    return out;
}

std::map<Key, ModeProfile> strip(std::map<Key, Stratum> m)
{
    std::map<Key, ModeProfile> out;
    for (auto& [k, v] : m) out.emplace(k, std::move(v.p));
    return out;
}

double zf_validity(const QuasimodeState& s)
{
    double v = INF;
    for (const auto& pc : s.residual)
        if (pc.b->has_head) v = std::min(v, pc.alpha.re() + pc.b->head.error_order());
    return v;
}

ModeProfile with_samples(const ModeProfile& base, CVec samples, const PhgSeries& tail)
{
    ModeProfile p = base;
    p.samples = std::move(samples);
    p.dsamples.clear();
    p.tail = tail;
    p.has_head = false;
    p.head = PhgSeries(p.var);
    p.snap_to_tail();
    return p;
}

ProfilePtr share(ModeProfile p) { return std::make_shared<const ModeProfile>(std::move(p)); }

ResidualPiece piece(const Exponent& alpha, int kappa, cplx c, ProfilePtr a, ProfilePtr b, std::string tag,
                    std::vector<std::pair<Exponent, int>> tf_done = {})
{
    ResidualPiece p;
    p.alpha = alpha;
    p.kappa = kappa;
    p.coeff = c;
    p.a = std::move(a);
    p.b = std::move(b);
    p.tag = std::move(tag);
    p.tf_done = std::move(tf_done);
    return p;
}

IndexSet one_mode(const std::vector<IndexSet>& v, int l) { return v.at(l); }

void record(QuasimodeState& s, int round, const char* what, const Exponent& j, int k, double c, bool ok)
{
    s.audit.push_back(AuditEntry{round, what, j, k, c, ok});
}

int current_round(const QuasimodeState& s) { return int(s.rounds.size()) + 1; }

}  // namespace

const char* face_name(Face f) { return f == Face::zf ? "zf" : "tf"; }

double QuasimodeState::sum_eps() const
{
    double t = 0.0;
    for (double e : eps) t += e;
    return t;
}

int QuasimodeState::audit_violations() const
{
    return int(std::count_if(audit.begin(), audit.end(), [](const AuditEntry& e) { return !e.ok; }));
}

CVec conjugated_operator_apply(const RadialOperator& op, int l, double sigma, const Grid& g, const CVec& u)
{
    const double d = op.cone.d, lam = op.cone.modes.at(l).lambda;
    CVec du = d_dx(g, u, 4), d2u = d2_dx2(g, u, 4), out(g.size());
    for (int i = 0; i < g.size(); ++i) {
        double r = g.x(i);
        out[i] = -d2u[i] - (d - 1) / r * du[i] + (lam / (r * r) + op.potential_at(r)) * u[i] -
                 2.0 * I * sigma * du[i] - I * sigma * (d - 1) / r * u[i];
    }
    return out;
}

QuasimodeState make_state(const RadialOperator& op, int l, const ModeProfile& f, const DriverOptions& opt)
{
    if (f.var != Var::r) throw ValidationError("quasimode: forcing must be a zf profile in r");
    if (l < 0 || l >= int(op.cone.modes.size())) throw ValidationError(fmt::format("quasimode: mode {} not in the cone data", l));
    if (!(opt.target_order >= 0)) throw ValidationError("quasimode: target order must be nonnegative");
    if (opt.K_eff() < opt.target_order) throw ValidationError("quasimode: K below the target order");
    if (!(opt.chi0.lo > 0 && opt.chi0.hi > opt.chi0.lo) || !(opt.chi1.lo > 0 && opt.chi1.hi > opt.chi1.lo))
        throw ValidationError("quasimode: cutoffs need 0 < lo < hi");

    QuasimodeState s;
    s.op = op;
    s.l = l;
    s.opt = opt;
    s.forcing = f;
    s.forcing.l = l;
    if (!std::isfinite(s.forcing.x_tail)) {
        if (std::abs(f.samples.back()) > 1e-14 * std::max(1.0, f.max_abs()))
            throw ValidationError("quasimode: forcing has neither a tail nor vanishes at the grid end");
        s.forcing.x_tail = f.grid.xmax();
        s.forcing.samples.back() = 0.0;
    }
    s.zf_grid = f.grid;
    s.tf_grid = opt.tf.grid();
    s.f_scale = f.max_abs();

    const double H = opt.horizon_eff();
    const int d = op.cone.d;
    s.E_bf = single(Exponent(Rat(d + 1, 2)), 0, H);
    s.J = single(Exponent(0), 0, H);
    s.F = f.tail.pruned(1e-14).index_set_of(H).as_kind(SetKind::index);
    s.solved_below = Exponent(0);

    // chi1(1/r) and its r-derivatives
    const Cutoff c1 = opt.chi1;
    const double r1 = 1.0 / c1.lo;
    const Grid& G = s.zf_grid;
    auto c1v = [c1](double r) { return c1.at(1.0 / r); };
    s.c1 = zf_factor(l, G, [=](double r) { return cplx(c1v(r).v); }, PhgSeries::monomial(Var::rho, 0), r1);
    auto c1p = [=](double r) { return -c1v(r).d1 / (r * r); };
    auto c1pp = [=](double r) {
        StepValue v = c1v(r);
        return v.d2 / (r * r * r * r) + 2.0 * v.d1 / (r * r * r);
    };
    s.c1p = zf_factor(l, G, [=](double r) { return cplx(c1p(r)); }, PhgSeries(Var::rho), r1);
    s.c1pp = zf_factor(l, G, [=](double r) { return cplx(c1pp(r)); }, PhgSeries(Var::rho), r1);
    s.c1p_over_r = zf_factor(l, G, [=](double r) { return cplx(c1p(r) / r); }, PhgSeries(Var::rho), r1);
    if (!op.zero())
        s.c1V = zf_factor(l, G, [=](double r) { return cplx(c1v(r).v * op.potential_at(r)); }, op.V_tail,
                          std::max(r1, op.tail_radius));

    const Cutoff c0 = opt.chi0;
    s.chi0 = tf_factor(l, s.tf_grid, [c0](double x) { return c0.at(x); }, PhgSeries::monomial(Var::rhat, 0), c0.hi);
    s.chi0p = tf_factor(l, s.tf_grid, [c0](double x) { StepValue v = c0.at(x); return StepValue{v.d1, v.d2, 0.0}; },
                        zero_head(), c0.hi);
    s.chi0pp = tf_factor(l, s.tf_grid, [c0](double x) { StepValue v = c0.at(x); return StepValue{v.d2, 0.0, 0.0}; },
                         zero_head(), c0.hi);
    {
        ModeProfile ph = empty_tf(l, s.tf_grid);
        ph.dsamples.resize(s.tf_grid.size());
        for (int i = 0; i < s.tf_grid.size(); ++i) {
            cplx e = std::exp(-I * s.tf_grid.x(i));
            ph.samples[i] = e;
            ph.dsamples[i] = -I * e;
        }
        const int N = int(std::ceil(opt.forcing_head_order));
        ph.head = PhgSeries(Var::rhat, N);
        cplx c = 1.0;
        for (int m = 0; m < N; ++m) {
            ph.head.add_term(Exponent(m), 0, c);
            c *= -I / double(m + 1);
        }
        s.phase = share(std::move(ph));
    }
    if (s.f_scale > 0) s.residual.push_back(piece(Exponent(0), 0, 1.0, share(s.forcing), s.phase, "f"));
    return s;
}

std::map<Key, ModeProfile> zf_strata(const QuasimodeState& s, double max_order)
{
    return strip(zf_strata_acc(s, max_order));
}

std::map<Key, ModeProfile> tf_strata(const QuasimodeState& s, double K) { return strip(tf_strata_acc(s, K)); }

Exponent leading_zf_order(const QuasimodeState& s, double* norm)
{
    auto strata = zf_strata_acc(s, s.opt.horizon_eff());
    for (const auto& [key, st] : strata) {
        if (!significant(st, 0.0, s.opt.tol * s.f_scale)) continue;
        if (norm) *norm = st.p.max_abs();
        return key.first;
    }
    if (norm) *norm = 0.0;
    return Exponent::from_double(INF);
}

ZfStepResult zf_step(QuasimodeState& s)
{
    ZfStepResult res;
    const double H = s.opt.horizon_eff(), K = s.opt.K_eff();
    auto strata = zf_strata_acc(s, H);
    const Exponent* lead = nullptr;
    for (const auto& [key, st] : strata)
        if (significant(st, 0.0, s.opt.tol * s.f_scale)) {
            lead = &key.first;
            break;
        }
    if (!lead) return res;
    const Exponent a = *lead;
    if (zf_validity(s) <= a.re() + EXPONENT_TOL)
        throw NumericError(fmt::format("zf_step: residual heads known only to order {} < {}", zf_validity(s), a.str()));

    const int round = current_round(s);
    const int d = s.op.cone.d;
    const double alpha_max = K - a.re() + 3.0;
    std::vector<ResidualPiece> added;
    for (const auto& [key, st] : strata) {
        if (compare(key.first, a) != 0 || !significant(st, 0.0, s.opt.tol * s.f_scale)) continue;
        const int kappa = key.second;
        const ModeProfile& Gs = st.p;
        record(s, round, "zf-order", a, kappa, Gs.max_abs(), s.J.contains(a, kappa));
        if (!(Gs.tail.pruned(1e-12).pi_min() > 2.0 + EXPONENT_TOL))
            throw InvariantViolation(fmt::format("zf_step: stratum sigma^{} L^{} has a tail of order {} <= 2", a.str(),
                                                 kappa, Gs.tail.pruned(1e-12).pi_min()));
        ModeProfile W = solve_perturbed(s.op, s.l, Gs, alpha_max, s.opt.zf).u;
        if (W.dsamples.empty()) W.dsamples = d_dx(W.grid, W.samples, 8);

        // tail prediction for this solve
        try {
            std::vector<IndexSet> E_l(s.l + 1, IndexSet(H));
            E_l[s.l] = shift(Gs.tail.pruned(1e-12).index_set_of(H + 2), Exponent(-2)).with_horizon(H);
            auto fp = fixed_point_zf(s.op.cone, s.l + 1, IndexSet(H), E_l, s.op.beth(), s.op.beth0(), H);
            IndexSet Iw = one_mode(fp.I_l, s.l);
            double scale = std::max(1e-300, W.tail.max_abs_coeff());
            for (const auto& t : W.tail.terms()) {
                if (std::abs(t.c) <= 1e-10 * scale || t.j.re() > H) continue;
                record(s, round, "zf-tail", t.j, t.k, std::abs(t.c), Iw.contains(t.j, t.k));
            }
            s.F = set_union(s.F, shift(Iw, a + Exponent(2)).with_horizon(H));
        } catch (const ValidationError& e) {
            record(s, round, "zf-tail", a, kappa, 0.0, false);
        }

        ModeProfile Wp = with_samples(W, W.dsamples, d_r(W.tail));
        CVec wr(W.grid.size()), bw(W.grid.size());
        for (int i = 0; i < W.grid.size(); ++i) {
            double r = W.grid.x(i);
            wr[i] = W.samples[i] / r;
            bw[i] = -2.0 * I * W.dsamples[i] - I * double(d - 1) * wr[i];
        }
        PhgSeries rhoW = mul_monomial(W.tail, Exponent(1));
        ModeProfile Wr = with_samples(W, wr, rhoW);
        ModeProfile BW = with_samples(W, bw, d_r(W.tail) * (-2.0 * I) + rhoW * (-I * double(d - 1)));
        ProfilePtr pW = share(W), pG = share(Gs);
        const std::string tag = fmt::format("zf{}:{}:{}", round, a.str(), kappa);
        added.push_back(piece(a, kappa, -1.0, pG, s.chi0, tag + ":G"));
        added.push_back(piece(a + Exponent(2), kappa, 1.0, pW, s.chi0pp, tag + ":W chi0''"));
        added.push_back(piece(a + Exponent(1), kappa, 2.0, share(Wp), s.chi0p, tag + ":W' chi0'"));
        added.push_back(piece(a + Exponent(1), kappa, double(d - 1), share(Wr), s.chi0p, tag + ":W/r chi0'"));
        added.push_back(piece(a + Exponent(1), kappa, -1.0, share(BW), s.chi0, tag + ":BW"));
        added.push_back(piece(a + Exponent(2), kappa, 2.0 * I, pW, s.chi0p, tag + ":W chi0'"));

        res.terms.push_back(QuasimodeTerm{a, kappa, Face::zf, s.l, W, round});
        s.J = set_union(s.J, single(a + Exponent(1), kappa, H));
    }
    for (auto& p : added) s.residual.push_back(std::move(p));
    for (const auto& t : res.terms) s.terms.push_back(t);
    res.order = a;
    res.solved = !res.terms.empty();
    s.solved_below = a;
    s.any_zf_solved = true;
    return res;
}

TfStepResult tf_step(QuasimodeState& s, double K)
{
    TfStepResult res;
    const double H = s.opt.horizon_eff();
    const int round = current_round(s);
    const int d = s.op.cone.d;
    const Exponent an = s.solved_below;
    auto strata = tf_strata_acc(s, K);

    std::vector<ResidualPiece> added;
    std::vector<Key> solved;
    for (auto& [key, st] : strata) {
        if (!significant(st, TF_WINDOW, s.opt.tol * s.f_scale)) continue;
        const Exponent& T = key.first;
        const int kappa = key.second;
        solved.push_back(key);
        record(s, round, "tf-order", T, kappa, window_max(st.p, st.p.samples, TF_WINDOW), s.F.contains(T, kappa));
        ModeProfile v = tf_solve(TfProblem::make(s.op.cone, s.l, st.p), s.opt.tf);
        ModeProfile vp = v;
        vp.samples = v.dsamples;
        vp.dsamples.clear();
        vp.head = d_r(v.head);

        const Exponent beta = T - Exponent(2);
        const std::string tag = fmt::format("tf{}:{}:{}", round, T.str(), kappa);
        ProfilePtr pv = share(v), ph = share(st.p), pvp = share(vp);
        added.push_back(piece(T, kappa, -1.0, s.c1, ph, tag + ":h", {key}));
        if (s.c1V) added.push_back(piece(beta, kappa, -1.0, s.c1V, pv, tag + ":cV v"));
        added.push_back(piece(beta, kappa, 1.0, s.c1pp, pv, tag + ":c'' v"));
        added.push_back(piece(beta + Exponent(1), kappa, 2.0, s.c1p, pvp, tag + ":c' v'"));
        added.push_back(piece(beta, kappa, double(d - 1), s.c1p_over_r, pv, tag + ":c'/r v"));
        added.push_back(piece(beta + Exponent(1), kappa, 2.0 * I, s.c1p, pv, tag + ":c' v"));
        res.terms.push_back(QuasimodeTerm{beta, kappa, Face::tf, s.l, v, round});
    }

    // predicted zf index of the tf corrections and the next tf set, relative to the current level
    const Exponent lvl = an + Exponent(2);
    const double Hrel = H - lvl.re();
    std::vector<IndexTerm> rel;
    for (const auto& t : s.F.terms()) {
        Exponent j = t.j - lvl;
        if (j.re() > EXPONENT_TOL) rel.push_back({j, t.k});
    }
    IndexSet Frel(rel, Hrel, SetKind::index);
    std::vector<IndexSet> F_l(s.l + 1, IndexSet(Hrel, SetKind::index));
    F_l[s.l] = Frel;
    const double Krel = K - lvl.re();
    BethVector beth{s.op.beth(), INF, INF, INF, INF, INF};
    TfStepSets sets = tf_step_sets(s.op.cone, s.l + 1, IndexSet(Hrel, SetKind::index), F_l, Krel,
                                   std::vector<double>(s.l + 1, Krel), beth, H - an.re());
    IndexSet Krel_set = one_mode(sets.K_l, s.l);
    for (const auto& t : res.terms) {
        double scale = std::max(1e-300, t.profile.head.max_abs_coeff());
        for (const auto& h : t.profile.head.terms()) {
            if (std::abs(h.c) <= 1e-10 * scale) continue;
            Exponent zo = t.alpha + h.j - an;
            if (zo.re() > H - an.re()) continue;
            record(s, round, "tf-head", zo + an, h.k + t.kappa, std::abs(h.c), Krel_set.contains(zo, h.k + t.kappa));
        }
    }
    s.J = set_union(s.J, shift(Krel_set, an).with_horizon(H));
    std::vector<IndexTerm> keep;
    for (const auto& t : s.F.terms())
        if (t.j.re() > K + EXPONENT_TOL) keep.push_back(t);
    s.F = set_union(IndexSet(keep, H, SetKind::index), shift(one_mode(sets.F_l_plus, s.l), lvl).with_horizon(H));

    for (auto& p : s.residual) p.tf_done.insert(p.tf_done.end(), solved.begin(), solved.end());
    for (auto& p : added) s.residual.push_back(std::move(p));
    for (const auto& t : res.terms) s.terms.push_back(t);
    return res;
}

namespace {

void run_round(QuasimodeState& s)
{
    const int round = current_round(s);
    RoundRecord rec;
    rec.round = round;
    ZfStepResult z = zf_step(s);
    rec.zf_order = z.solved ? z.order : s.solved_below;
    for (const auto& t : z.terms) rec.zf_logs.push_back(t.kappa);
    if (s.opt.target_order > 0) {
        TfStepResult t = tf_step(s, s.opt.K_eff());
        for (const auto& q : t.terms) rec.tf_strata.push_back({q.alpha + Exponent(2), q.kappa});
    }
    rec.next_order = leading_zf_order(s);
    double gain = rec.next_order.re() - rec.zf_order.re();
    rec.eps = z.solved ? std::min(1.0, gain) : 1.0;
    rec.J = s.J;
    rec.F = s.F;
    s.eps.push_back(rec.eps);
    s.rounds.push_back(std::move(rec));
}

void check_stagnation(const QuasimodeState& s)
{
    int n = int(s.eps.size());
    if (n >= 3 && s.eps[n - 1] < 1e-3 && s.eps[n - 2] < 1e-3 && s.eps[n - 3] < 1e-3)
        throw NumericError("quasimode: stagnation (three rounds below 1e-3 gain)\n" + manifest(s));
}

}  // namespace

QuasimodeState iterate(const RadialOperator& op, int l, const ModeProfile& f, const DriverOptions& opt)
{
    QuasimodeState s = make_state(op, l, f, opt);
    if (s.residual.empty()) return s;
    if (opt.target_order <= 0) {
        run_round(s);
        return s;
    }
    while (s.sum_eps() < opt.target_order - 1e-12) {
        if (int(s.rounds.size()) >= opt.max_rounds)
            throw NumericError(fmt::format("quasimode: {} rounds without reaching order {}\n{}", opt.max_rounds,
                                           opt.target_order, manifest(s)));
        run_round(s);
        check_stagnation(s);
    }
    return s;
}

void add_rounds(QuasimodeState& s, int rounds)
{
    if (s.residual.empty()) return;
    for (int i = 0; i < rounds; ++i) {
        run_round(s);
        check_stagnation(s);
    }
}

cplx evaluate_conjugated(const QuasimodeState& s, double sigma, double r)
{
    if (!(sigma > 0)) throw ValidationError("quasimode: evaluation needs sigma > 0");
    const double L = std::log(sigma);
    const double c1 = s.opt.chi1(1.0 / r);
    cplx sum = 0.0;
    for (const auto& t : s.terms) {
        cplx pre = std::exp(t.alpha.value() * L) * std::pow(L, t.kappa);
        if (t.face == Face::zf) {
            double c = s.opt.chi0(sigma * r);
            if (c != 0.0) sum += pre * c * t.profile.at(r);
        } else if (c1 != 0.0) {
            sum += pre * c1 * t.profile.at(sigma * r);
        }
    }
    return sum;
}

cplx evaluate(const QuasimodeState& s, double sigma, double r)
{
    return std::exp(I * sigma * r) * evaluate_conjugated(s, sigma, r);
}

QuasimodeState truncated_rounds(const QuasimodeState& s, int n)
{
    QuasimodeState t = s;
    t.terms.clear();
    for (const auto& q : s.terms)
        if (q.round <= n) t.terms.push_back(q);
    if (int(t.rounds.size()) > n) t.rounds.resize(n);
    if (int(t.eps.size()) > n) t.eps.resize(n);
    t.residual.clear();
    return t;
}

std::string manifest(const QuasimodeState& s)
{
    std::ostringstream o;
    o << fmt::format("operator: d = {}, mode l = {}, lambda = {}, modes = {}\n", s.op.cone.d, s.l,
                     s.op.cone.modes.at(s.l).lambda, s.op.cone.modes.size());
    if (s.op.zero()) o << "potential: none\n";
    else o << fmt::format("potential: tail order {} from r = {}, beth = {}\n", s.op.V_tail.pi_min(), s.op.tail_radius, s.op.beth());
    o << fmt::format("target = {}, K = {}, horizon = {}, chi0 = [{}, {}], chi1 = [{}, {}]\n", s.opt.target_order,
                     s.opt.K_eff(), s.opt.horizon_eff(), s.opt.chi0.lo, s.opt.chi0.hi, s.opt.chi1.lo, s.opt.chi1.hi);
    o << "bf set (pinned): {";
    for (std::size_t i = 0; i < s.E_bf.terms().size(); ++i)
        o << fmt::format("{}({}, {})", i ? ", " : "", s.E_bf.terms()[i].j.str(), s.E_bf.terms()[i].k);
    o << "}\n";
    for (const auto& r : s.rounds) {
        o << fmt::format("round {}: zf order {} logs", r.round, r.zf_order.str());
        for (int k : r.zf_logs) o << ' ' << k;
        o << "; tf strata";
        for (const auto& [T, k] : r.tf_strata) o << fmt::format(" ({}, {})", T.str(), k);
        o << fmt::format("; next order {}; eps = {:.6g}\n", r.next_order.str(), r.eps);
    }
    o << fmt::format("sum eps = {:.6g}, terms = {}, residual pieces = {}\n", s.sum_eps(), s.terms.size(),
                     s.residual.size());
    o << fmt::format("audit: {} entries, {} violations\n", s.audit.size(), s.audit_violations());
    for (const auto& e : s.audit)
        if (!e.ok) o << fmt::format("  round {} {} ({}, {}) |c| = {:.3g} not predicted\n", e.round, e.what, e.j.str(), e.k, e.coeff);
    return o.str();
}

std::string terms_csv(const QuasimodeState& s, const std::string& profile_prefix)
{
    std::string out = "alpha, kappa, face, mode, profile-file\n";
    for (std::size_t i = 0; i < s.terms.size(); ++i) {
        const auto& t = s.terms[i];
        out += fmt::format("{}, {}, {}, {}, {}_{}.csv\n", t.alpha.str(), t.kappa, face_name(t.face), t.l,
                           profile_prefix, i);
    }
    return out;
}

}  // namespace lerexp
