#pragma once
// Per-harmonic solves of the transition-face model operator
//   L_l = -d^2 - ((d-1)/x + 2i) d + lambda_l/x^2 - i(d-1)/x,   x = rhat,
// which is e^{-ix}(Delta - 1)e^{ix}. Kernels are e^{-ix} x^{-(d-2)/2} {J_nu, H+_nu}.
#include <vector>

#include "lerexp/bessel.hpp"
#include "lerexp/zf_solver.hpp"

namespace lerexp {

struct TfProblem {
    ConeData cone;
    int l = 0;
    double nu = 0.0;
    ModeProfile forcing;  // variable rhat
    static TfProblem make(const ConeData& cone, int l, ModeProfile forcing);
};

struct TfNumerics {
    double x_min = 1e-4, x_max = 400.0, h = 0.01;
    double head_order = 6.0;  // error order of the r̂ -> 0 expansion returned with the solution
    Grid grid() const { return Grid::softplus(x_min, x_max, h); }
};

enum class TfBranch { recessive, outgoing };

struct KernelValue {
    cplx w, dw;
};
KernelValue tf_kernel_value(const ConeData& cone, int l, TfBranch branch, double x);
std::function<cplx(double)> tf_kernel(const TfProblem& p, TfBranch branch);

/// recessive kernel near 0 as an exact-exponent series, error order `order`
PhgSeries tf_recessive_series(const ConeData& cone, int l, double order);
/// L_l on series in rhat
PhgSeries apply_Ltf_exact(const ConeData& cone, int l, const PhgSeries& v);
/// formal solution of L_l v = h near 0 (no homogeneous x^{b_l}, x^{-c_l} terms added)
PhgSeries tf_formal_solution(const ConeData& cone, int l, const PhgSeries& h, double order);
/// L_l on grid samples by differences of the given order
CVec apply_Ltf_numeric(const ConeData& cone, int l, const Grid& g, const CVec& u, int order = 8);
/// same, differencing the stored derivative samples once
CVec apply_Ltf_numeric(const ConeData& cone, int l, const ModeProfile& u);

/// the solution regular at 0 and outgoing at infinity; samples on the forcing grid with exact
/// derivative samples and the r̂ -> 0 expansion as head
ModeProfile tf_solve(const TfProblem& p, const TfNumerics& num = {});

enum class FitEnd { zero, infinity };
struct FitTerm {
    IndexTerm term;
    cplx coeff;
    double residual = 0.0;  // relative weighted residual of the whole fit
};
/// least squares on the leading (up to max_terms) candidates over one decade at the given end of
/// the grid (or [x0, 10 x0] when x0 > 0). Basis x^j log^k x at zero, x^{-j} log^k(1/x) at infinity.
std::vector<FitTerm> tf_asymptotic_fit(const ModeProfile& u, FitEnd end, const IndexSet& candidates,
                                       int max_terms = 3, double x0 = 0.0);
/// slope p of log|u| ~ -p log x over [x0, x1]
double fitted_decay_exponent(const ModeProfile& u, double x0, double x1);

}  // namespace lerexp
