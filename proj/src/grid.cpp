#include "lerexp/grid.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "lerexp/errors.hpp"

namespace lerexp {

namespace {

constexpr int NS = 6;

// Fornberg weights for derivatives 0..m at z from nodes x[0..n)
std::vector<std::vector<double>> fornberg(double z, const std::vector<double>& x, int m)
{
    int n = int(x.size());
    std::vector<std::vector<double>> c(n, std::vector<double>(m + 1, 0.0));
    double c1 = 1.0, c4 = x[0] - z;
    c[0][0] = 1.0;
    for (int i = 1; i < n; ++i) {
        int mn = std::min(i, m);
        double c2 = 1.0, c5 = c4;
        c4 = x[i] - z;
        for (int j = 0; j < i; ++j) {
            double c3 = x[i] - x[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k) c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for (int k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    return c;
}

// w[p][m] = int_p^{p+1} l_m(s) ds for Lagrange basis on nodes 0..5
std::array<std::array<double, NS>, NS - 1> interval_weights()
{
    std::array<std::array<double, NS>, NS - 1> w{};
    for (int m = 0; m < NS; ++m) {
        std::vector<double> poly{1.0};  // ascending coefficients
        double den = 1.0;
        for (int q = 0; q < NS; ++q) {
            if (q == m) continue;
            std::vector<double> np(poly.size() + 1, 0.0);
            for (std::size_t i = 0; i < poly.size(); ++i) {
                np[i] -= q * poly[i];
                np[i + 1] += poly[i];
            }
            poly = np;
            den *= (m - q);
        }
        for (int p = 0; p < NS - 1; ++p) {
            double s = 0.0;
            for (std::size_t i = 0; i < poly.size(); ++i)
                s += poly[i] * (std::pow(p + 1.0, i + 1) - std::pow(double(p), i + 1)) / (i + 1);
            w[p][m] = s / den;
        }
    }
    return w;
}

const auto& iw()
{
    static const auto w = interval_weights();
    return w;
}

double softplus(double t) { return t > 30 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

}  // namespace

Grid Grid::geometric(double xmin, double xmax, int n)
{
    if (!(xmin > 0 && xmax > xmin && n >= NS)) throw ValidationError("Grid::geometric: bad parameters");
    Grid g;
    g.map_ = GridMap::geometric;
    g.n_ = n;
    g.t0_ = std::log(xmin);
    g.h_ = (std::log(xmax) - g.t0_) / (n - 1);
    g.fill();
    return g;
}

Grid Grid::softplus(double xmin, double xmax, double h)
{
    if (!(xmin > 0 && xmax > xmin && h > 0)) throw ValidationError("Grid::softplus: bad parameters");
    Grid g;
    g.map_ = GridMap::softplus;
    g.h_ = h;
    g.t0_ = std::log(std::expm1(xmin));
    double t1 = xmax + std::log(-std::expm1(-xmax));
    g.n_ = int(std::ceil((t1 - g.t0_) / h)) + 1;
    g.fill();
    return g;
}

void Grid::fill()
{
    xs_.resize(n_);
    dx_.resize(n_);
    d2x_.resize(n_);
    for (int i = 0; i < n_; ++i) {
        double tt = t(i);
        if (map_ == GridMap::geometric) {
            xs_[i] = dx_[i] = d2x_[i] = std::exp(tt);
        } else {
            xs_[i] = lerexp::softplus(tt);
            double s = 1.0 / (1.0 + std::exp(-tt));
            dx_[i] = s;
            d2x_[i] = s * (1.0 - s);
        }
    }
}

double Grid::t_of(double x) const
{
    if (map_ == GridMap::geometric) return std::log(x);
    return x + std::log(-std::expm1(-x));
}

CVec cumulative_integral(const CVec& f, double h)
{
    int n = int(f.size());
    CVec F(n, 0.0);
    if (n < NS) throw ValidationError("cumulative_integral: too few points");
    const auto& w = iw();
    for (int i = 0; i + 1 < n; ++i) {
        int s = std::clamp(i - 2, 0, n - NS);
        int p = i - s;
        cplx acc = 0.0;
        for (int m = 0; m < NS; ++m) acc += w[p][m] * f[s + m];
        F[i + 1] = F[i] + h * acc;
    }
    return F;
}

namespace {

// central (p+1)-point stencils in the interior, one-sided (p+2)-point stencils within p/2 of the ends
CVec derivative(const CVec& f, double h, int deriv, int p)
{
    int n = int(f.size());
    int half = p / 2, wide = p + 2;
    if (n < wide) throw ValidationError("derivative: too few points");
    std::vector<double> cn(p + 1);
    for (int m = 0; m <= p; ++m) cn[m] = m - half;
    auto cw = fornberg(0.0, cn, deriv);
    CVec out(n);
    double scale = deriv == 1 ? 1.0 / h : 1.0 / (h * h);
    for (int i = 0; i < n; ++i) {
        cplx acc = 0.0;
        if (i >= half && i + half < n) {
            for (int m = 0; m <= p; ++m) acc += cw[m][deriv] * f[i - half + m];
        } else {
            int s0 = std::clamp(i - half, 0, n - wide);
            std::vector<double> nodes(wide);
            for (int m = 0; m < wide; ++m) nodes[m] = s0 + m;
            auto w = fornberg(double(i), nodes, deriv);
            for (int m = 0; m < wide; ++m) acc += w[m][deriv] * f[s0 + m];
        }
        out[i] = acc * scale;
    }
    return out;
}

}  // namespace

CVec d_dt(const CVec& f, double h, int order) { return derivative(f, h, 1, order); }
CVec d2_dt2(const CVec& f, double h, int order) { return derivative(f, h, 2, order); }

CVec d_dx(const Grid& g, const CVec& f, int order)
{
    CVec ft = d_dt(f, g.h(), order);
    for (int i = 0; i < g.size(); ++i) ft[i] /= g.dxdt(i);
    return ft;
}

CVec d2_dx2(const Grid& g, const CVec& f, int order)
{
    CVec ft = d_dt(f, g.h(), order), ftt = d2_dt2(f, g.h(), order);
    CVec out(g.size());
    for (int i = 0; i < g.size(); ++i) {
        double xt = g.dxdt(i);
        out[i] = (ftt[i] - g.d2xdt2(i) / xt * ft[i]) / (xt * xt);
    }
    return out;
}

cplx interpolate(const Grid& g, const CVec& f, double x)
{
    if (!g.contains(x)) throw std::out_of_range("interpolate: point outside grid");
    double q = std::clamp(g.index_of(x), 0.0, double(g.size() - 1));
    int i = int(std::floor(q));
    int s = std::clamp(i - 2, 0, g.size() - NS);
    double z = q - s;
    cplx acc = 0.0;
    for (int m = 0; m < NS; ++m) {
        double l = 1.0;
        for (int p = 0; p < NS; ++p)
            if (p != m) l *= (z - p) / double(m - p);
        acc += l * f[s + m];
    }
    return acc;
}

}  // namespace lerexp
