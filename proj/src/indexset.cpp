#include "lerexp/indexset.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

namespace lerexp {

namespace {

bool within(double re, double horizon) { return re <= horizon + EXPONENT_TOL; }

}  // namespace

IndexSet::IndexSet(double horizon, SetKind kind) : horizon_(horizon), kind_(kind) {}

IndexSet::IndexSet(std::vector<IndexTerm> terms, double horizon, SetKind kind)
    : terms_(std::move(terms)), horizon_(horizon), kind_(kind)
{
    normalize();
}

void IndexSet::normalize()
{
    for (const auto& t : terms_)
        if (t.k < 0) throw ValidationError("IndexSet: negative log power");
    std::vector<IndexTerm> out;
    out.reserve(terms_.size() * 2);
    for (const auto& t : terms_) {
        if (!within(t.j.re(), horizon_)) continue;
        for (int k = 0; k <= t.k; ++k) out.push_back({t.j, k});
    }
    if (kind_ == SetKind::index && !out.empty()) {
        if (!std::isfinite(horizon_)) throw ValidationError("IndexSet: index-set kind needs a finite horizon");
        std::size_t n = out.size();
        for (std::size_t i = 0; i < n; ++i) {
            Exponent j = out[i].j + Exponent(1);
            while (within(j.re(), horizon_)) {
                out.push_back({j, out[i].k});
                j += Exponent(1);
            }
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    terms_ = std::move(out);
}

bool IndexSet::contains(const IndexTerm& t) const
{
    return std::binary_search(terms_.begin(), terms_.end(), t);
}

int IndexSet::max_log(const Exponent& j) const
{
    int m = -1;
    for (const auto& t : terms_)
        if (t.j == j) m = std::max(m, t.k);
    return m;
}

std::vector<Exponent> IndexSet::exponents() const
{
    std::vector<Exponent> out;
    for (const auto& t : terms_)
        if (out.empty() || out.back() != t.j) out.push_back(t.j);
    return out;
}

bool IndexSet::subset_of(const IndexSet& o) const
{
    for (const auto& t : terms_)
        if (!o.contains(t)) return false;
    return true;
}

IndexSet IndexSet::with_horizon(double h) const { return IndexSet(terms_, h, kind_); }

IndexSet IndexSet::as_kind(SetKind k) const { return IndexSet(terms_, horizon_, k); }

std::string IndexSet::to_text() const
{
    std::string s;
    for (const auto& t : terms_) s += fmt::format("{:.12g} {:.12g} {}\n", t.j.re(), t.j.im(), t.k);
    return s;
}

IndexSet single(const Exponent& j, int k, double horizon, SetKind kind)
{
    return IndexSet({{j, k}}, horizon, kind);
}

// ---------------------------------------------------------------- cone data

IndicialRoots indicial_roots_exact(int d, double lambda)
{
    if (d < 3) throw ValidationError("indicial_roots: d must be >= 3");
    if (lambda < 0) throw ValidationError("indicial_roots: lambda must be >= 0");
    Rat dm2(d - 2);
    if (auto q = rationalize(lambda)) {
        Exponent s = Exponent::sqrt_of(dm2 * dm2 + Rat(4) * *q);
        return {(s - Exponent(dm2)) * Rat(1, 2), (s + Exponent(dm2)) * Rat(1, 2)};
    }
    double s = std::sqrt(double((d - 2) * (d - 2)) + 4.0 * lambda);
    return {Exponent::from_double(0.5 * (s - (d - 2))), Exponent::from_double(0.5 * (s + (d - 2)))};
}

std::pair<double, double> indicial_roots(int d, double lambda)
{
    auto r = indicial_roots_exact(d, lambda);
    return {r.b.re(), r.c.re()};
}

ConeData ConeData::from_eigenvalues(int d, const std::vector<double>& lambdas)
{
    if (d < 3) throw ValidationError("ConeData: d must be >= 3");
    ConeData c;
    c.d = d;
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        if (i > 0 && lambdas[i] < lambdas[i - 1]) throw ValidationError("ConeData: eigenvalues must be nondecreasing");
        auto r = indicial_roots_exact(d, lambdas[i]);
        c.modes.push_back({lambdas[i], r.b, r.c});
    }
    return c;
}

ConeData ConeData::euclidean(int d, int lmax)
{
    std::vector<double> lam;
    for (int l = 0; l <= lmax; ++l) lam.push_back(double(l) * double(l + d - 2));
    return from_eigenvalues(d, lam);
}

double ConeData::nu(int l) const
{
    return 0.5 * std::sqrt(double((d - 2) * (d - 2)) + 4.0 * modes.at(l).lambda);
}

// ---------------------------------------------------------------- basic operations

bool is_pre_index_set(const std::vector<IndexTerm>& s)
{
    for (const auto& t : s) {
        if (t.k < 0) return false;
        for (int k = 0; k < t.k; ++k) {
            bool found = std::any_of(s.begin(), s.end(), [&](const IndexTerm& u) { return u.k == k && u.j == t.j; });
            if (!found) return false;
        }
    }
    return true;
}

IndexSet set_union(const IndexSet& a, const IndexSet& b)
{
    std::vector<IndexTerm> t = a.terms();
    t.insert(t.end(), b.terms().begin(), b.terms().end());
    bool ia = a.kind() == SetKind::index, ib = b.kind() == SetKind::index;
    // an empty operand carries no closure obligation
    bool idx = a.empty() ? (b.empty() ? (ia || ib) : ib) : (b.empty() ? ia : (ia && ib));
    SetKind kind = idx ? SetKind::index : SetKind::pre;
    return IndexSet(std::move(t), std::min(a.horizon(), b.horizon()), kind);
}

IndexSet uplus(const Exponent& j, int k, const IndexSet& e)
{
    std::vector<IndexTerm> t = e.terms();
    t.push_back({j, k});
    int kappa = e.max_log(j);
    if (kappa >= 0) {
        Exponent jd = j;
        while (within(jd.re(), e.horizon())) {
            t.push_back({jd, k + kappa + 1});
            jd += Exponent(1);
        }
    }
    return IndexSet(std::move(t), e.horizon(), e.kind());
}

IndexSet shift(const IndexSet& e, const Exponent& gamma, int kappa)
{
    std::vector<IndexTerm> t;
    for (const auto& x : e.terms()) t.push_back({x.j + gamma, x.k + kappa});
    return IndexSet(std::move(t), e.horizon() + gamma.re(), e.kind());
}

IndexSet shift_order(const IndexSet& e, double order)
{
    if (!std::isfinite(order)) return IndexSet(INF, e.kind());
    return shift(e, Exponent::from_double(order), 0);
}

IndexSet truncate(const IndexSet& e, double alpha, Side side)
{
    std::vector<IndexTerm> t;
    for (const auto& x : e.terms()) {
        bool below = x.j.re() < alpha - EXPONENT_TOL;
        if ((side == Side::below) == below) t.push_back(x);
    }
    if (side == Side::below) return IndexSet(std::move(t), std::min(alpha, e.horizon()), SetKind::pre);
    return IndexSet(std::move(t), e.horizon(), e.kind());
}

double pi_min(const IndexSet& e)
{
    double m = INF;
    for (const auto& t : e.terms()) m = std::min(m, t.j.re());
    return m;
}

IndexSet c_uplus(const ConeData& cone, int ell, const IndexSet& e)
{
    IndexSet res = e.as_kind(SetKind::index);
    for (std::size_t l = ell;; ++l) {
        if (l >= cone.modes.size())
            throw InsufficientModes(fmt::format("c_uplus: mode list ends at l={} with c_l <= horizon {}", l, e.horizon()));
        const Exponent& c = cone.modes[l].c;
        if (c.re() > e.horizon() + EXPONENT_TOL) break;
        res = set_union(res, uplus(c, 0, e).as_kind(SetKind::index));
    }
    return res;
}

IndexSet b_ge(const ConeData& cone, int ell, const IndexSet& g)
{
    IndexSet res = g.as_kind(SetKind::index);
    for (std::size_t l = ell;; ++l) {
        if (l >= cone.modes.size())
            throw InsufficientModes(fmt::format("b_ge: mode list ends at l={} with b_l <= horizon {}", l, g.horizon()));
        const Exponent& b = cone.modes[l].b;
        if (b.re() > g.horizon() + EXPONENT_TOL) break;
        res = set_union(res, uplus(b, 0, g).as_kind(SetKind::index));
    }
    return res;
}

// ---------------------------------------------------------------- zf recursion

ZfFixedPoint zf_recursion_start(const IndexSet& E, const std::vector<IndexSet>& E_l, double horizon)
{
    ZfFixedPoint s;
    s.I = E.with_horizon(horizon);
    for (const auto& x : E_l) s.I_l.push_back(x.with_horizon(horizon));
    return s;
}

ZfFixedPoint zf_recursion_step(const ConeData& cone, int ell, const IndexSet& E, const std::vector<IndexSet>& E_l,
                               double beth, double beth0, double horizon, const ZfFixedPoint& cur)
{
    if ((int)E_l.size() != ell || (int)cur.I_l.size() != ell)
        throw ValidationError("zf recursion: need one E_l per mode l < ell");
    IndexSet Eh = E.with_horizon(horizon);
    IndexSet Icup = cur.I;
    for (const auto& x : cur.I_l) Icup = set_union(Icup, x);
    IndexSet sym = shift_order(Icup, 1.0 + beth0);
    ZfFixedPoint next;
    next.iterations = cur.iterations + 1;
    IndexSet A = set_union(set_union(Eh, sym), shift_order(cur.I, 1.0 + beth)).with_horizon(horizon);
    next.I = set_union(cur.I, c_uplus(cone, ell, A)).as_kind(SetKind::index).with_horizon(horizon);
    for (int l = 0; l < ell; ++l) {
        IndexSet Al = set_union(set_union(E_l[l].with_horizon(horizon), sym), shift_order(cur.I_l[l], 1.0 + beth))
                          .with_horizon(horizon);
        IndexSet u = uplus(cone.modes.at(l).c, 0, Al).as_kind(SetKind::index);
        next.I_l.push_back(set_union(cur.I_l[l], u).as_kind(SetKind::index).with_horizon(horizon));
    }
    return next;
}

int zf_iteration_bound(const ConeData& cone, const IndexSet& E, const std::vector<IndexSet>& E_l, double beth,
                       double alpha)
{
    double m = std::min(double(cone.d - 2), pi_min(E));
    for (const auto& x : E_l) m = std::min(m, pi_min(x));
    double num = alpha - m;
    if (num <= 0) return 0;
    if (!std::isfinite(beth)) return 0;
    return (int)std::ceil(num / (1.0 + beth) - 1e-12);
}

ZfFixedPoint fixed_point_zf(const ConeData& cone, int ell, const IndexSet& E, const std::vector<IndexSet>& E_l,
                            double beth, double beth0, double horizon)
{
    if (beth > beth0) throw ValidationError("fixed_point_zf: need beth <= beth0");
    // the bound counts iterations after which truncations are stable; one extra pass
    // is needed to produce the first nontrivial iterate and one more to observe stability
    int cap = zf_iteration_bound(cone, E, E_l, beth, horizon) + 2;
    ZfFixedPoint cur = zf_recursion_start(E, E_l, horizon);
    for (int it = 0; it < cap; ++it) {
        ZfFixedPoint next = zf_recursion_step(cone, ell, E, E_l, beth, beth0, horizon, cur);
        bool same = next.I == cur.I;
        for (int l = 0; l < ell && same; ++l) same = next.I_l[l] == cur.I_l[l];
        if (same) {
            cur.iterations = next.iterations - 1;
            return cur;
        }
        cur = std::move(next);
    }
    throw InvariantViolation(fmt::format("fixed_point_zf: no fixed point within {} iterations", cap));
}

// ---------------------------------------------------------------- tf step sets

TfStepSets tf_step_sets(const ConeData& cone, int ell, const IndexSet& F, const std::vector<IndexSet>& F_l, double K,
                        const std::vector<double>& K_l, const BethVector& beth, double horizon_K)
{
    if ((int)F_l.size() != ell || (int)K_l.size() != ell)
        throw ValidationError("tf_step_sets: need one F_l and K_l per mode l < ell");
    auto check_positive = [](const IndexSet& s, const char* name) {
        for (const auto& t : s.terms())
            if (t.j.re() <= 0)
                throw ValidationError(fmt::format("tf_step_sets: {} has term ({},{}) with Re j <= 0", name, t.j.str(), t.k));
    };
    check_positive(F, "F");
    for (const auto& x : F_l) check_positive(x, "F_l");
    double HK = horizon_K == -INF ? F.horizon() : horizon_K;

    TfStepSets out;
    out.K = IndexSet(HK, SetKind::index);
    for (const auto& j : F.exponents()) {
        if (j.re() > K + EXPONENT_TOL) continue;
        int kj = F.max_log(j);
        for (int k = 0; k <= kj; ++k) {
            IndexSet g = single(Exponent(1) - j, kj - k, HK - j.re());
            out.K = set_union(out.K, shift(b_ge(cone, ell, g), j).with_horizon(HK));
        }
    }
    for (int l = 0; l < ell; ++l) {
        IndexSet Kl(HK, SetKind::index);
        for (const auto& j : F_l[l].exponents()) {
            if (j.re() > K_l[l] + EXPONENT_TOL) continue;
            int kj = F_l[l].max_log(j);
            for (int k = 0; k <= kj; ++k)
                Kl = set_union(Kl, uplus(cone.modes.at(l).b + j, 0, single(Exponent(1), kj - k, HK)));
        }
        out.K_l.push_back(Kl);
    }
    auto check_k = [](const IndexSet& s, const std::string& name) {
        for (const auto& t : s.terms())
            if (t.j.re() <= 0)
                throw PositivityViolation(fmt::format("tf_step_sets: {} contains ({},{}) with Re j <= 0", name, t.j.str(), t.k));
    };
    check_k(out.K, "K");
    for (int l = 0; l < ell; ++l) check_k(out.K_l[l], fmt::format("K_{}", l));

    double o1 = 1.0 + std::min({beth[0], beth[2], beth[4]});
    double o2 = 1.0 + std::min({beth[1], beth[3], beth[5]});
    IndexSet Fcup = F;
    for (const auto& x : F_l) Fcup = set_union(Fcup, x);
    out.F_plus = set_union(set_union(truncate(F, K, Side::at_or_above), shift_order(F, o1)), shift_order(Fcup, o2))
                     .with_horizon(F.horizon());
    for (int l = 0; l < ell; ++l)
        out.F_l_plus.push_back(
            set_union(truncate(F_l[l], K_l[l], Side::at_or_above), shift_order(F_l[l], o1)).with_horizon(F_l[l].horizon()));

    int d = cone.d;
    out.bf_update = [d, beth](const IndexSet& E, const std::vector<IndexSet>& E_l) {
        Exponent h(Rat(d - 1, 2));
        double a1 = std::min({2.0 + beth[0], 1.0 + beth[2], 1.0 + beth[4]});
        double a2 = std::min({2.0 + beth[1], 1.0 + beth[3], 1.0 + beth[5]});
        IndexSet Ep = uplus(h, 0, E);
        std::vector<IndexSet> Elp;
        IndexSet Ecup = Ep;
        for (const auto& x : E_l) {
            Elp.push_back(uplus(h, 0, x));
            Ecup = set_union(Ecup, Elp.back());
        }
        BfSets r;
        r.E = set_union(set_union(E, shift_order(Ep, a1)), shift_order(Ecup, a2)).with_horizon(E.horizon());
        for (std::size_t l = 0; l < E_l.size(); ++l)
            r.E_l.push_back(set_union(set_union(E_l[l], shift_order(Elp[l], a1)), shift_order(Ecup, a2))
                                .with_horizon(E_l[l].horizon()));
        return r;
    };
    return out;
}

}  // namespace lerexp
