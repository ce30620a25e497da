#pragma once
// One-dimensional grids x = phi(t) with t uniform, plus high-order quadrature and
// differentiation in t.
#include <complex>
#include <vector>

namespace lerexp {

using cplx = std::complex<double>;
using CVec = std::vector<cplx>;

enum class GridMap { geometric, softplus };

class Grid {
public:
    Grid() = default;
    /// geometric: x = e^t on [xmin, xmax] with n points
    static Grid geometric(double xmin, double xmax, int n);
    /// softplus: x = log(1 + e^t), t uniform with step h, covering [xmin, xmax]
    static Grid softplus(double xmin, double xmax, double h);

    int size() const { return n_; }
    double h() const { return h_; }
    double t(int i) const { return t0_ + h_ * i; }
    double x(int i) const { return xs_[i]; }
    const std::vector<double>& xs() const { return xs_; }
    double dxdt(int i) const { return dx_[i]; }
    double d2xdt2(int i) const { return d2x_[i]; }
    double xmin() const { return xs_.front(); }
    double xmax() const { return xs_.back(); }
    GridMap map() const { return map_; }

    double t_of(double x) const;
    /// fractional index of x
    double index_of(double x) const { return (t_of(x) - t0_) / h_; }
    bool contains(double x) const { return x >= xs_.front() * (1 - 1e-12) && x <= xs_.back() * (1 + 1e-12); }

private:
    GridMap map_ = GridMap::geometric;
    double t0_ = 0, h_ = 1;
    int n_ = 0;
    std::vector<double> xs_, dx_, d2x_;
    void fill();
};

/// F_i = int_{t_0}^{t_i} f dt, degree-5 local interpolation per interval
CVec cumulative_integral(const CVec& f, double h);
/// first and second t-derivatives of even accuracy order (one-sided stencils at the ends)
CVec d_dt(const CVec& f, double h, int order = 4);
CVec d2_dt2(const CVec& f, double h, int order = 4);
/// x-derivatives on a mapped grid
CVec d_dx(const Grid& g, const CVec& f, int order = 4);
CVec d2_dx2(const Grid& g, const CVec& f, int order = 4);
/// 6-point Lagrange interpolation in t
cplx interpolate(const Grid& g, const CVec& f, double x);

}  // namespace lerexp
