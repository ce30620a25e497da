#pragma once
// Quasimode iteration for P(sigma) u = e^{-i sigma r} f on one radial mode, with
//   P(sigma) = Delta + V - 2i sigma d_r - i sigma (d-1)/r  =  P(0) + sigma B,
// so that R(sigma^2 + i0) f = e^{i sigma r} u. Terms live at zf (profile in r, cutoff chi0(sigma r))
// or at tf (profile in rhat = sigma r, cutoff chi1(1/r)).
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "lerexp/cutoff.hpp"
#include "lerexp/tf_solver.hpp"

namespace lerexp {

enum class Face { zf, tf };
const char* face_name(Face f);

struct QuasimodeTerm {
    Exponent alpha;  // sigma power
    int kappa = 0;   // log sigma power
    Face face = Face::zf;
    int l = 0;
    ModeProfile profile;  // var r for zf, rhat for tf
    int round = 0;
};

using ProfilePtr = std::shared_ptr<const ModeProfile>;

/// sigma^alpha (log sigma)^kappa coeff a(r) b(rhat); a carries an exact rho tail, b an exact head at rhat -> 0
struct ResidualPiece {
    Exponent alpha;
    int kappa = 0;
    cplx coeff = 1.0;
    ProfilePtr a, b;
    std::string tag;
    // tf strata (T, k) already solved: this piece's share of them was cancelled exactly
    std::vector<std::pair<Exponent, int>> tf_done;
};

struct DriverOptions {
    double target_order = 2.0;
    double K = -1.0;        // tf strata with Re T <= K are solved each round; < 0 selects target + 2
    std::vector<double> K_l;  // per-mode thresholds (only the driven mode is used; equal to K when empty)
    Cutoff chi0{}, chi1{};
    ZfNumerics zf{};
    TfNumerics tf{};
    double forcing_head_order = 16.0;  // Taylor order kept for e^{-i rhat}
    double tol = 1e-12;                // strata below tol * |f| are treated as zero
    double horizon = -1.0;             // index-set horizon; < 0 selects K + 2
    int max_rounds = 12;
    double K_eff() const { return K >= 0 ? K : target_order + 2.0; }
    double horizon_eff() const { return horizon >= 0 ? horizon : K_eff() + 2.0; }
};

struct AuditEntry {
    int round = 0;
    std::string what;  // "zf-order", "zf-tail", "tf-order", "tf-head"
    Exponent j;
    int k = 0;
    double coeff = 0.0;
    bool ok = true;
};

struct RoundRecord {
    int round = 0;
    Exponent zf_order;           // sigma order of the zf stratum solved
    std::vector<int> zf_logs;    // log powers solved at that order
    std::vector<std::pair<Exponent, int>> tf_strata;  // (T, k) solved
    double eps = 0.0;
    Exponent next_order;         // leading zf order of the residual afterwards
    IndexSet J, F;               // predicted zf / tf sets of the residual after the round (absolute sigma orders)
};

struct QuasimodeState {
    RadialOperator op;
    int l = 0;
    DriverOptions opt;
    ModeProfile forcing;
    std::vector<QuasimodeTerm> terms;
    std::vector<ResidualPiece> residual;
    std::vector<RoundRecord> rounds;
    std::vector<double> eps;
    std::vector<AuditEntry> audit;
    Exponent solved_below;  // zf strata of order <= this have been solved
    bool any_zf_solved = false;
    IndexSet E_bf, J, F;      // bf set (pinned), predicted residual zf / tf sets
    Grid zf_grid, tf_grid;
    double f_scale = 1.0;
    // shared factors
    ProfilePtr c1, c1p, c1pp, c1p_over_r, c1V;  // chi1(1/r) and derivatives, on the zf grid
    ProfilePtr chi0, chi0p, chi0pp, phase;       // on the tf grid

    double sum_eps() const;
    int audit_violations() const;
};

/// P(sigma) on grid samples by 4th-order differences
CVec conjugated_operator_apply(const RadialOperator& op, int l, double sigma, const Grid& g, const CVec& u);

QuasimodeState make_state(const RadialOperator& op, int l, const ModeProfile& f, const DriverOptions& opt);

struct ZfStepResult {
    std::vector<QuasimodeTerm> terms;
    Exponent order;
    bool solved = false;
};
/// solves the leading zf stratum (all its log powers) of the residual
ZfStepResult zf_step(QuasimodeState& s);

struct TfStepResult {
    std::vector<QuasimodeTerm> terms;
};
/// solves every tf stratum with Re T <= K
TfStepResult tf_step(QuasimodeState& s, double K);

/// strata of the residual: (order, log) -> radial function, at zf (var r) or tf (var rhat)
std::map<std::pair<Exponent, int>, ModeProfile> zf_strata(const QuasimodeState& s, double max_order);
std::map<std::pair<Exponent, int>, ModeProfile> tf_strata(const QuasimodeState& s, double K);
/// leading zf order above solved_below among strata larger than tol * |f|; +inf if none
Exponent leading_zf_order(const QuasimodeState& s, double* norm = nullptr);

QuasimodeState iterate(const RadialOperator& op, int l, const ModeProfile& f, const DriverOptions& opt);
/// continues an existing state for `rounds` more rounds
void add_rounds(QuasimodeState& s, int rounds);

/// e^{i sigma r} times the sum of terms; out-of-hull throws std::out_of_range
cplx evaluate(const QuasimodeState& s, double sigma, double r);
/// the conjugated sum u (without e^{i sigma r})
cplx evaluate_conjugated(const QuasimodeState& s, double sigma, double r);
/// state restricted to terms of the first n rounds
QuasimodeState truncated_rounds(const QuasimodeState& s, int n);

/// plain-text run manifest and "alpha, kappa, face, mode, profile-file" table
std::string manifest(const QuasimodeState& s);
std::string terms_csv(const QuasimodeState& s, const std::string& profile_prefix = "term");

}  // namespace lerexp
