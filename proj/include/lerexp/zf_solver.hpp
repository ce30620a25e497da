#pragma once
// Zero-energy radial solves of L_l = -d_r^2 - (d-1)/r d_r + lambda_l/r^2 (+ V), symbolic on
// polyhomogeneous tails and numeric on a geometric grid.
#include <functional>
#include <string>

#include "lerexp/grid.hpp"
#include "lerexp/phg_series.hpp"

namespace lerexp {

/// A single-harmonic radial function: samples on a grid, an exact 1/x series valid for
/// x >= x_tail and optionally an exact series in x used below the grid.
struct ModeProfile {
    int l = 0;
    Var var = Var::r;
    Grid grid;
    CVec samples;
    CVec dsamples;  // d/dx samples when known exactly from the construction (may be empty)
    PhgSeries tail{Var::rho};
    double x_tail = INF;
    PhgSeries head{Var::r};
    bool has_head = false;

    /// samples f below x_tail and the tail from x_tail on
    static ModeProfile sample(int l, Var v, const Grid& g, const std::function<cplx(double)>& f,
                              const PhgSeries& tail = PhgSeries(Var::rho), double x_tail = INF);
    static ModeProfile zero(int l, Var v, const Grid& g);

    /// throws std::out_of_range outside the representable range
    cplx at(double x) const;
    /// max |samples - tail| / max |samples| over grid points with x >= x_tail
    double tail_mismatch() const;
    void snap_to_tail();
    double max_abs() const;

    ModeProfile& operator+=(const ModeProfile& o);
    ModeProfile& operator*=(cplx s);

    /// "r, Re(u), Im(u)" (column name follows the variable tag)
    std::string to_csv() const;
};

struct ZfNumerics {
    int n = 2048;
    double r_min = 1e-3, R_grid = 1e3, R_tail = 1e2;
    double tail_tol = 1e-9;
    Grid grid() const { return Grid::geometric(r_min, R_grid, n); }
};

/// Radial potential: V(r) on the grid, exactly equal to V_tail(1/r) for r >= tail_radius.
struct RadialOperator {
    ConeData cone;
    std::function<double(double)> V;
    PhgSeries V_tail{Var::rho};
    double tail_radius = 0.0;
    double support_min = 0.0;  // V = 0 for r < support_min
    bool zero() const { return !V; }
    /// V(r), switching to the tail at tail_radius
    double potential_at(double r) const;
    static RadialOperator free(const ConeData& cone);
    /// short-range orders: beth = pi_min(V_tail) - 3 (inf for V = 0); beth0 = inf (radial V does not couple modes)
    double beth() const;
    double beth0() const { return INF; }
};

/// L_l applied to a series in rho
PhgSeries apply_L_exact(const ConeData& cone, int l, const PhgSeries& u);
/// L_l applied on the grid (interior 4th-order differences)
CVec apply_L_numeric(const ConeData& cone, int l, const Grid& g, const CVec& u);
/// same, differencing the stored derivative samples once (8th order) when they are available
CVec apply_L_numeric(const ConeData& cone, int l, const ModeProfile& u);

/// particular decaying solution of L_l u = g with zero (c_l,0) coefficient
PhgSeries green_apply_exact(const ConeData& cone, int l, const PhgSeries& g);
ModeProfile green_apply_numeric(const ConeData& cone, int l, const ModeProfile& g, const ZfNumerics& num = {});

struct PerturbedSolve {
    ModeProfile u;
    int iterations = 0;
    double contraction = 0.0;  // last ratio of successive Neumann corrections
    std::vector<double> tail_pi_min;  // pi_min of each Neumann correction's tail
};
/// one symbolic pass of the tail iteration T <- G_exact(f_tail - V_tail T) + A rho^{c_l}; each pass
/// fixes 1 + beth further orders of the tail
PhgSeries zf_tail_pass(const RadialOperator& op, int l, const PhgSeries& f_tail, cplx A, const PhgSeries& T);

/// (L_l + V) u = f by Neumann iteration u <- G(f - V u); tails carried to error order alpha_max
PerturbedSolve solve_perturbed(const RadialOperator& op, int l, const ModeProfile& f, double alpha_max,
                               const ZfNumerics& num = {});

}  // namespace lerexp
