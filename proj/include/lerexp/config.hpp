#pragma once
// Run configuration: a line-based sectioned key = value format with '#' comments.
//
//   [problem]    d, l_max | eigenvalues, mode, ell, V (repeatable), V_radius, beth, m
//   [forcing]    type = gaussian | power-tail | file, plus parameters
//   [indexsets]  optional explicit bf sets E, E_<l> as "j k; j k; ..."
//   [numerics]   grids, tolerance, horizon, target_order, K, K_l, cutoffs, sigma sweep
//   [output]     directory, profiles, plots
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lerexp/quasimode.hpp"

namespace lerexp {

/// coeff r^{-exponent} (log r)^logpower
struct PotentialTerm {
    double coeff = 0.0;
    Exponent exponent;
    int logpower = 0;
};

enum class ForcingType { gaussian, power_tail, file };

struct RunConfig {
    std::string source = "<config>";
    std::string base_dir = ".";  // relative file paths resolve here

    // [problem]
    int d = 3;
    int l_max = -1;                  // euclidean cross-section with l = 0..l_max
    std::vector<double> eigenvalues;  // or an explicit cross-section spectrum
    int mode = 0;                     // driven mode for tf / quasimode / verify
    int ell = -1;                     // modes l < ell are tracked separately; < 0 selects mode + 1
    std::vector<PotentialTerm> V;
    double V_radius = 0.0;            // V is exact for r >= V_radius and vanishes below V_radius / 5
    std::optional<BethVector> beth;   // declared orders; derived from V when absent
    double m = 0.0;                   // long-range coefficient of the phase experiment

    // [forcing]
    ForcingType forcing = ForcingType::gaussian;
    double amplitude = 1.0, width = 1.0;  // gaussian amplitude e^{-(r/width)^2}
    Exponent tail_exponent{3};            // power-tail amplitude r^{-a} (log r)^k cut off below radius
    int tail_log = 0;
    double tail_radius = 2.5;
    std::string forcing_file, forcing_tail_file;
    // file data, read while parsing: samples "r, Re(f), Im(f)" and an optional exact tail from tail_radius
    std::vector<double> file_r;
    CVec file_values;
    std::optional<PhgSeries> file_tail;

    // [indexsets]
    std::optional<std::vector<IndexTerm>> E;
    std::map<int, std::vector<IndexTerm>> E_l;

    // [numerics]
    ZfNumerics zf{};
    TfNumerics tf{};
    double tolerance = 1e-12;
    double horizon = -1.0;  // < 0: 6 for index sets and multipole tails, automatic for the driver
    double target_order = 2.0;
    double K = -1.0;
    std::vector<double> K_l;
    Cutoff chi0{}, chi1{};
    int max_rounds = 12;
    std::vector<double> sigmas{1e-1, 3e-2, 1e-2, 3e-3, 1e-3};
    double weight_exponent = 0.0;
    double r_lo = 1e-2, r_hi = 1e9, c_hi = 10.0;
    int oracle_n = 4096;
    double oracle_r_min = 1e-3, oracle_r_max = 1e5;
    double verify_tolerance = 0.15;

    // [output]
    std::string output_dir = "out";
    bool profiles = true, plots = true;

    ConeData cone() const;
    RadialOperator op() const;
    BethVector beth_vector() const;
    double horizon_or(double fallback) const { return horizon >= 0 ? horizon : fallback; }
    int ell_eff() const { return ell >= 0 ? ell : mode + 1; }
    /// bf sets for fixed_point_zf: explicit [indexsets] entries, else the forcing's tail
    IndexSet E_set(double horizon) const;
    std::vector<IndexSet> E_l_sets(double horizon) const;
    std::function<cplx(double)> forcing_function() const;
    /// forcing on a grid, with its exact tail for the power-tail type
    ModeProfile forcing_profile(int l, Var v, const Grid& g) const;
    /// f = 0 (to double precision) beyond this radius, INF for an infinite tail
    double forcing_support() const;
    DriverOptions driver_options() const;
};

/// throws ValidationError "source:line: message"; relative file paths resolve against base_dir
RunConfig parse_config(const std::string& text, const std::string& source = "<config>",
                       const std::string& base_dir = ".");
RunConfig load_config(const std::string& path);

/// C^infinity step used for potential and forcing cutoffs: 0 below R/5, 1 above R
double radial_cutoff(double r, double R);

}  // namespace lerexp
