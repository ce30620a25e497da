// lerexp_cli: batch front end for index sets, zero-energy multipoles, transition-face solves,
// the quasimode driver, the oracle comparison and the acceptance suite.
#include <fmt/format.h>

#include <CLI11.hpp>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <thread>

#include "lerexp/acceptance.hpp"
#include "lerexp/config.hpp"
#include "lerexp/errors.hpp"
#include "lerexp/oracle.hpp"
#include "lerexp/quasimode.hpp"

using namespace lerexp;
namespace fs = std::filesystem;

namespace {

struct Flags {
    std::string config, output_dir;
    int jobs = 1;
    double horizon = -1.0, tolerance = -1.0;
    std::uint64_t seed = 2024;
};

class Output {
public:
    explicit Output(fs::path dir) : dir_(std::move(dir)) {}
    void write(const std::string& name, const std::string& text)
    {
        fs::create_directories(dir_);
        std::ofstream out(dir_ / name, std::ios::binary);
        out << text;
        if (!out) throw ValidationError(fmt::format("cannot write {}", (dir_ / name).string()));
    }

private:
    fs::path dir_;
};

// runs fn(i) for i < n on up to `jobs` threads; the first failure by index is rethrown
void parallel_for(int n, int jobs, const std::function<void(int)>& fn)
{
    std::vector<std::exception_ptr> err(n);
    auto work = [&](int start) {
        for (int i = start; i < n; i += jobs) {
            try {
                fn(i);
            } catch (...) {
                err[i] = std::current_exception();
            }
        }
    };
    jobs = std::max(1, std::min(jobs, n));
    std::vector<std::thread> pool;
    for (int t = 1; t < jobs; ++t) pool.emplace_back(work, t);
    work(0);
    for (auto& t : pool) t.join();
    for (auto& e : err)
        if (e) std::rethrow_exception(e);
}

std::string gnuplot_header(const std::string& title)
{
    return fmt::format("# gnuplot script\nset datafile separator ','\nset key autotitle columnhead\nset title '{}'\n", title);
}

std::string term_text(const IndexSet& s)
{
    std::string out = "{";
    for (std::size_t i = 0; i < s.terms().size(); ++i)
        out += fmt::format("{}({}, {})", i ? ", " : "", s.terms()[i].j.str(), s.terms()[i].k);
    return out + "}";
}

std::string set_rows(const std::string& name, const IndexSet& s)
{
    std::string out;
    for (const auto& t : s.terms())
        out += fmt::format("{}, {}, {:.12g}, {:.12g}, {}\n", name, t.j.str(), t.j.re(), t.j.im(), t.k);
    return out;
}

ZfFixedPoint predicted_sets(const RunConfig& c, double H)
{
    auto b = c.beth_vector();
    return fixed_point_zf(c.cone(), c.ell_eff(), c.E_set(H), c.E_l_sets(H), b[0], b[1], H);
}

// ---------------------------------------------------------------- subcommands

int cmd_indexsets(const RunConfig& c, Output& out)
{
    double H = c.horizon_or(6.0);
    auto fp = predicted_sets(c, H);
    std::string csv = "set, j, Re(j), Im(j), k\n" + set_rows("I", fp.I);
    fmt::print("horizon = {}, ell = {}, beth = {}, beth0 = {}, iterations = {}\n", H, c.ell_eff(), c.beth_vector()[0],
               c.beth_vector()[1], fp.iterations);
    fmt::print("I = {}\n", term_text(fp.I));
    for (std::size_t l = 0; l < fp.I_l.size(); ++l) {
        csv += set_rows(fmt::format("I_{}", l), fp.I_l[l]);
        fmt::print("I_{} = {}\n", l, term_text(fp.I_l[l]));
    }
    out.write("indexsets.csv", csv);
    if (c.plots) {
        std::string gp = gnuplot_header("index sets") + "set xlabel 'Re j'\nset ylabel 'log power k'\n";
        gp += "plot 'indexsets.csv' using 3:5 with points pt 7 title 'all sets'\n";
        out.write("indexsets.gp", gp);
    }
    return 0;
}

int cmd_multipole(const RunConfig& c, Output& out, int jobs)
{
    double H = c.horizon_or(6.0);
    auto op = c.op();
    auto fp = predicted_sets(c, H);
    int n = c.ell_eff();
    Grid g = c.zf.grid();
    std::vector<PerturbedSolve> sol(n);
    parallel_for(n, jobs, [&](int l) { sol[l] = solve_perturbed(op, l, c.forcing_profile(l, Var::r, g), H, c.zf); });

    std::string csv = "l, j, Re(j), Im(j), k, Re(c), Im(c), predicted\n";
    int violations = 0;
    for (int l = 0; l < n; ++l) {
        const auto& u = sol[l].u;
        for (const auto& t : u.tail.terms()) {
            bool pred = fp.I_l[l].contains(t.j, t.k);
            if (std::abs(t.c) > 1e-10 && t.j.re() <= H && !pred) ++violations;
            csv += fmt::format("{}, {}, {:.12g}, {:.12g}, {}, {:.17g}, {:.17g}, {}\n", l, t.j.str(), t.j.re(), t.j.im(),
                               t.k, t.c.real(), t.c.imag(), pred ? 1 : 0);
        }
        fmt::print("l = {}: {} Neumann iterations, {} tail terms, predicted I_{} = {}\n", l, sol[l].iterations,
                   u.tail.terms().size(), l, term_text(fp.I_l[l]));
        if (c.profiles) {
            out.write(fmt::format("multipole_l{}.csv", l), u.to_csv());
            out.write(fmt::format("multipole_l{}.tail", l), u.tail.to_text());
        }
    }
    out.write("multipole.csv", csv);
    if (c.plots && c.profiles) {
        std::string gp = gnuplot_header("zero-energy mode solutions") + "set logscale xy\nset xlabel 'r'\nplot ";
        for (int l = 0; l < n; ++l)
            gp += fmt::format("{}'multipole_l{}.csv' using 1:(sqrt($2**2 + $3**2)) with lines title '|u_{}|'", l ? ", " : "",
                              l, l);
        out.write("multipole.gp", gp + "\n");
    }
    fmt::print("tail audit: {} coefficients above 1e-10 outside the predicted sets\n", violations);
    if (violations) throw InvariantViolation(fmt::format("{} tail coefficients outside the predicted index sets", violations));
    return 0;
}

int cmd_tf(const RunConfig& c, Output& out)
{
    auto cone = c.cone();
    int l = c.mode;
    Grid g = c.tf.grid();
    auto f = ModeProfile::sample(l, Var::rhat, g, c.forcing_function());
    auto p = TfProblem::make(cone, l, f);
    p.forcing.l = l;
    auto u = tf_solve(p, c.tf);
    double x1 = c.tf.x_max, x0 = x1 / 10.0;
    double e = fitted_decay_exponent(u, x0, x1);
    std::string report = fmt::format("mode l = {}, nu = {:.12g}, grid [{}, {}] h = {}\n", l, cone.nu(l), c.tf.x_min,
                                     c.tf.x_max, c.tf.h);
    report += fmt::format("far-field exponent over [{}, {}] = {:.6f} (outgoing kernel: {})\n", x0, x1, e, 0.5 * (cone.d - 1));
    report += fmt::format("head at rhat -> 0: {} terms, error order {}\n", u.head.terms().size(), u.head.error_order());
    fmt::print("{}", report);
    out.write("tf.txt", report);
    if (c.profiles) {
        out.write(fmt::format("tf_l{}.csv", l), u.to_csv());
        out.write(fmt::format("tf_l{}.head", l), u.head.to_text());
        if (c.plots) {
            std::string gp = gnuplot_header("transition-face solution") + "set logscale xy\nset xlabel 'rhat'\n";
            gp += fmt::format("plot 'tf_l{}.csv' using 1:(sqrt($2**2 + $3**2)) with lines title '|v|'\n", l);
            out.write("tf.gp", gp);
        }
    }
    return 0;
}

QuasimodeState run_driver(const RunConfig& c)
{
    return iterate(c.op(), c.mode, c.forcing_profile(c.mode, Var::r, c.zf.grid()), c.driver_options());
}

void write_driver(const RunConfig& c, const QuasimodeState& s, Output& out)
{
    out.write("manifest.txt", manifest(s));
    out.write("terms.csv", terms_csv(s, "term"));
    if (!c.profiles) return;
    for (std::size_t i = 0; i < s.terms.size(); ++i) out.write(fmt::format("term_{}.csv", i), s.terms[i].profile.to_csv());
}

int cmd_quasimode(const RunConfig& c, Output& out)
{
    auto s = run_driver(c);
    write_driver(c, s, out);
    if (c.plots && c.profiles && !s.terms.empty()) {
        std::string gp = gnuplot_header("quasimode terms") + "set logscale xy\nplot ";
        for (std::size_t i = 0; i < s.terms.size(); ++i)
            gp += fmt::format("{}'term_{}.csv' using 1:(sqrt($2**2 + $3**2)) with lines title 'sigma^{} log^{} ({})'",
                              i ? ", " : "", i, s.terms[i].alpha.str(), s.terms[i].kappa, face_name(s.terms[i].face));
        out.write("quasimode.gp", gp + "\n");
    }
    fmt::print("{}", manifest(s));
    if (s.audit_violations())
        throw InvariantViolation(fmt::format("{} emitted coefficients outside the predicted index sets", s.audit_violations()));
    return 0;
}

int cmd_verify(const RunConfig& c, Output& out, int jobs)
{
    double support = c.forcing_support();
    if (!(support <= 20.0))
        throw ValidationError("verify: the oracle needs a forcing that vanishes beyond r = 20 (gaussian width <= 3, or a file without tail)");
    auto s = run_driver(c);
    write_driver(c, s, out);
    auto op = c.op();
    auto f = c.forcing_function();
    Grid og = Grid::geometric(c.oracle_r_min, c.oracle_r_max, c.oracle_n);
    auto eval = [&](double sg, double r) { return evaluate(s, sg, r); };
    int n = int(c.sigmas.size());
    std::vector<double> errs(n);
    parallel_for(n, jobs, [&](int i) {
        errs[i] = compare(eval, op, c.mode, f, {c.sigmas[i]}, c.weight_exponent, og, c.r_lo, c.r_hi, c.c_hi).err[0];
    });
    auto rep = fit_power(c.sigmas, errs, c.weight_exponent);
    out.write("verify.csv", rep.to_csv());

    double pred = s.sum_eps();
    double dev = pred > 0 ? std::abs(rep.p - pred) / pred : INF;
    std::string report = rep.summary();
    report += fmt::format("predicted sum eps = {:.6f} after {} rounds\n", pred, s.rounds.size());
    report += fmt::format("relative deviation = {:.4f} (tolerance {})\n", dev, c.verify_tolerance);
    report += fmt::format("audit: {} entries, {} violations\n", s.audit.size(), s.audit_violations());

    if (c.m != 0.0) {
        std::string phase = "sigma, b, expected, rel\n";
        for (double sg : c.sigmas) {
            auto fit = hypergeometric_phase(c.m, sg, 10.0 / sg, 1000.0 / sg);
            double expect = sg * c.m / 2;
            phase += fmt::format("{:.17g}, {:.17g}, {:.17g}, {:.6e}\n", sg, fit.b, expect, std::abs(fit.b - expect) / std::abs(expect));
        }
        out.write("verify_phase.csv", phase);
        report += "log-phase fits written to verify_phase.csv\n";
    }
    out.write("verify.txt", report);
    if (c.plots) {
        std::string gp = gnuplot_header("error against the oracle") + "set logscale xy\nset xlabel 'sigma'\nset ylabel 'err'\n";
        gp += fmt::format("p = {:.17g}\nc = {:.17g}\n", rep.p, errs.back() / std::pow(c.sigmas.back(), rep.p));
        gp += "plot 'verify.csv' using 1:2 with linespoints pt 7 title 'err', c * x**p with lines title 'fit'\n";
        out.write("verify.gp", gp);
    }
    fmt::print("{}", report);
    if (s.audit_violations())
        throw InvariantViolation(fmt::format("{} emitted coefficients outside the predicted index sets", s.audit_violations()));
    if (!(dev <= c.verify_tolerance))
        throw NumericError(fmt::format("fitted p = {:.4f} is not within {} of sum eps = {:.4f}", rep.p, c.verify_tolerance, pred));
    return 0;
}

int cmd_selftest(const Flags& fl, Output* out)
{
    AcceptanceOptions opt;
    opt.seed = fl.seed;
    std::string text;
    auto results = run_acceptance(opt, [&](const CriterionResult& r) {
        std::string line = format_result(r);
        fmt::print("{}\n", line);
        std::fflush(stdout);
        text += line + "\n";
    });
    int failed = 0;
    for (const auto& r : results) failed += !r.pass;
    std::string tail = fmt::format("{} of {} criteria passed\n", int(results.size()) - failed, results.size());
    fmt::print("{}", tail);
    if (out) out->write("selftest.txt", text + tail);
    if (failed) throw InvariantViolation(fmt::format("{} acceptance criteria failed", failed));
    return 0;
}

int exit_code(std::exception_ptr e, const std::string& stage)
{
    try {
        std::rethrow_exception(e);
    } catch (const ValidationError& x) {
        fmt::print(stderr, "lerexp: [{}] validation error: {}\n", stage, x.what());
        return 1;
    } catch (const NumericError& x) {
        fmt::print(stderr, "lerexp: [{}] numeric failure: {}\n", stage, x.what());
        return 2;
    } catch (const InvariantViolation& x) {
        fmt::print(stderr, "lerexp: [{}] invariant violation: {}\n", stage, x.what());
        return 3;
    } catch (const std::exception& x) {
        fmt::print(stderr, "lerexp: [{}] numeric failure: {}\n", stage, x.what());
        return 2;
    }
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Low-energy resolvent expansions on exact cones"};
    app.fallthrough();
    app.require_subcommand(1);
    Flags fl;
    app.add_option("--config", fl.config, "run configuration file");
    app.add_option("--output-dir", fl.output_dir, "output directory (overrides [output] directory)");
    app.add_option("--jobs", fl.jobs, "worker threads for per-mode and per-sigma work")->check(CLI::PositiveNumber);
    app.add_option("--horizon", fl.horizon, "index-set horizon (overrides [numerics] horizon)")->check(CLI::PositiveNumber);
    app.add_option("--tolerance", fl.tolerance, "coefficient tolerance (overrides [numerics] tolerance)")
        ->check(CLI::PositiveNumber);
    app.add_option("--seed", fl.seed, "seed for the randomized acceptance cases");

    struct Sub {
        const char* name;
        const char* help;
    };
    const std::vector<Sub> subs{{"indexsets", "index sets I, I_l up to the horizon"},
                                {"multipole", "zero-energy mode solutions and their tails"},
                                {"tf", "transition-face model solve for the driven mode"},
                                {"quasimode", "run the quasimode driver and write its manifest"},
                                {"verify", "driver against the limiting-absorption oracle over the sigma sweep"},
                                {"selftest", "run the acceptance suite"}};
    for (const auto& s : subs) app.add_subcommand(s.name, s.help);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }
    std::string cmd = app.get_subcommands().front()->get_name();

    RunConfig cfg;
    bool have_config = !fl.config.empty();
    if (!have_config && cmd != "selftest") {
        fmt::print(stderr, "lerexp: [config] validation error: {} needs --config\n", cmd);
        return 1;
    }
    if (have_config) {
        try {
            cfg = load_config(fl.config);
        } catch (...) {
            return exit_code(std::current_exception(), "config");
        }
    }
    if (!fl.output_dir.empty()) cfg.output_dir = fl.output_dir;
    if (fl.horizon > 0) cfg.horizon = fl.horizon;
    if (fl.tolerance > 0) cfg.tolerance = fl.tolerance;

    Output out(cfg.output_dir);
    try {
        if (cmd == "indexsets") return cmd_indexsets(cfg, out);
        if (cmd == "multipole") return cmd_multipole(cfg, out, fl.jobs);
        if (cmd == "tf") return cmd_tf(cfg, out);
        if (cmd == "quasimode") return cmd_quasimode(cfg, out);
        if (cmd == "verify") return cmd_verify(cfg, out, fl.jobs);
        return cmd_selftest(fl, have_config || !fl.output_dir.empty() ? &out : nullptr);
    } catch (...) {
        return exit_code(std::current_exception(), cmd);
    }
}
