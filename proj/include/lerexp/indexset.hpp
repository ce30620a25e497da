#pragma once
// Calculus of (pre-)index sets: finite sets of (exponent, log power) pairs truncated at a horizon.
#include <array>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "lerexp/errors.hpp"
#include "lerexp/exponent.hpp"

namespace lerexp {

constexpr double INF = std::numeric_limits<double>::infinity();

struct IndexTerm {
    Exponent j;
    int k = 0;
    friend bool operator==(const IndexTerm& a, const IndexTerm& b) { return a.k == b.k && a.j == b.j; }
    friend bool operator<(const IndexTerm& a, const IndexTerm& b)
    {
        int c = compare(a.j, b.j);
        return c != 0 ? c < 0 : a.k < b.k;
    }
};

enum class SetKind { pre, index };
enum class Side { below, at_or_above };

/// Value type. Terms with Re j > horizon are never stored. For kind == index the set is
/// closed under j -> j+1 as long as Re(j+1) <= horizon; both kinds are closed under k -> k-1.
class IndexSet {
public:
    explicit IndexSet(double horizon = INF, SetKind kind = SetKind::pre);
    IndexSet(std::vector<IndexTerm> terms, double horizon, SetKind kind = SetKind::pre);

    const std::vector<IndexTerm>& terms() const { return terms_; }
    double horizon() const { return horizon_; }
    SetKind kind() const { return kind_; }
    bool empty() const { return terms_.empty(); }
    std::size_t size() const { return terms_.size(); }

    bool contains(const IndexTerm& t) const;
    bool contains(const Exponent& j, int k) const { return contains(IndexTerm{j, k}); }
    /// largest k with (j,k) in the set, -1 if j does not occur
    int max_log(const Exponent& j) const;
    /// distinct exponents in increasing order
    std::vector<Exponent> exponents() const;
    bool subset_of(const IndexSet& o) const;

    IndexSet with_horizon(double h) const;
    IndexSet as_kind(SetKind k) const;

    /// sorted lines "Re(j) Im(j) k"
    std::string to_text() const;

    friend bool operator==(const IndexSet& a, const IndexSet& b) { return a.terms_ == b.terms_; }
    friend bool operator!=(const IndexSet& a, const IndexSet& b) { return !(a == b); }

private:
    std::vector<IndexTerm> terms_;
    double horizon_;
    SetKind kind_;
    void normalize();
};

/// an index set consisting of (j,0..k) and, for kind index, its integer translates
IndexSet single(const Exponent& j, int k, double horizon, SetKind kind = SetKind::index);

struct ConeMode {
    double lambda;
    Exponent b, c;
};

struct ConeData {
    int d = 3;
    std::vector<ConeMode> modes;
    /// eigenvalues l(l+d-2), l = 0..lmax (one entry per distinct eigenvalue)
    static ConeData euclidean(int d, int lmax);
    static ConeData from_eigenvalues(int d, const std::vector<double>& lambdas);
    double nu(int l) const;
};

struct IndicialRoots {
    Exponent b, c;
};
IndicialRoots indicial_roots_exact(int d, double lambda);
std::pair<double, double> indicial_roots(int d, double lambda);

bool is_pre_index_set(const std::vector<IndexTerm>& s);
IndexSet set_union(const IndexSet& a, const IndexSet& b);
IndexSet uplus(const Exponent& j, int k, const IndexSet& e);
IndexSet shift(const IndexSet& e, const Exponent& gamma, int kappa = 0);
/// shift by a real order that may be +infinity (then the result is empty)
IndexSet shift_order(const IndexSet& e, double order);
IndexSet truncate(const IndexSet& e, double alpha, Side side);
double pi_min(const IndexSet& e);
IndexSet c_uplus(const ConeData& cone, int ell, const IndexSet& e);
IndexSet b_ge(const ConeData& cone, int ell, const IndexSet& g);

struct ZfFixedPoint {
    IndexSet I;
    std::vector<IndexSet> I_l;
    int iterations = 0;
};

/// one application of the recursion; state (I, I_l) -> next
ZfFixedPoint zf_recursion_step(const ConeData& cone, int ell, const IndexSet& E, const std::vector<IndexSet>& E_l,
                               double beth, double beth0, double horizon, const ZfFixedPoint& cur);
/// initial state I^(0) = E, I_l^(0) = E_l
ZfFixedPoint zf_recursion_start(const IndexSet& E, const std::vector<IndexSet>& E_l, double horizon);
/// bound k(alpha) on the number of iterations after which truncations below alpha are stable
int zf_iteration_bound(const ConeData& cone, const IndexSet& E, const std::vector<IndexSet>& E_l, double beth,
                       double alpha);
ZfFixedPoint fixed_point_zf(const ConeData& cone, int ell, const IndexSet& E, const std::vector<IndexSet>& E_l,
                            double beth, double beth0, double horizon);

/// orders (beth, beth0, beth1, beth2, beth3, beth4)
using BethVector = std::array<double, 6>;

struct BfSets {
    IndexSet E;
    std::vector<IndexSet> E_l;
};

struct TfStepSets {
    IndexSet K;
    std::vector<IndexSet> K_l;
    IndexSet F_plus;
    std::vector<IndexSet> F_l_plus;
    /// maps (E, E_l) to (E^{++}, E_l^{++})
    std::function<BfSets(const IndexSet&, const std::vector<IndexSet>&)> bf_update;
};

/// K sets are computed up to horizon_K (defaults to F's horizon)
TfStepSets tf_step_sets(const ConeData& cone, int ell, const IndexSet& F, const std::vector<IndexSet>& F_l, double K,
                        const std::vector<double>& K_l, const BethVector& beth, double horizon_K = -INF);

}  // namespace lerexp
