#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <fmt/format.h>
#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "lerexp/config.hpp"
#include "lerexp/errors.hpp"

using namespace lerexp;
namespace fs = std::filesystem;

namespace {

std::string env(const char* name)
{
    const char* v = std::getenv(name);
    REQUIRE_MESSAGE(v, name << " is not set");
    return v;
}

fs::path scratch(const std::string& name)
{
    fs::path p = fs::temp_directory_path() / ("lerexp_cli_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void put(const fs::path& p, const std::string& text)
{
    std::ofstream out(p, std::ios::binary);
    out << text;
}

struct Run {
    int code = -1;
    std::string out, err;
};

Run cli(const std::string& args, const fs::path& dir)
{
    std::string cmd = "\"" + env("LEREXP_CLI") + "\" " + args + " > \"" + (dir / "stdout").string() + "\" 2> \"" +
                      (dir / "stderr").string() + "\"";
    int st = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    r.out = slurp(dir / "stdout");
    r.err = slurp(dir / "stderr");
    return r;
}

std::string example(const std::string& name) { return env("LEREXP_SOURCE") + "/tools/examples/" + name; }

// message of the ValidationError thrown for `text`, empty if it parses
std::string parse_error(const std::string& text)
{
    try {
        parse_config(text, "t.cfg");
    } catch (const ValidationError& e) {
        return e.what();
    }
    return "";
}

const std::string BASE = "[problem]\nd = 3\nl_max = 4\n";

}  // namespace

TEST_CASE("config: sections, comments and defaults")
{
    auto c = parse_config("# header\n[problem]\nd = 4   # dimension\nl_max = 3\nmode = 1\nV = 0.5, 7/2, 1\nV = -1, 3, 0\n"
                          "V_radius = 3\n\n[forcing]\ntype = gaussian\nwidth = 2\n[numerics]\nsigma = 0.1, 0.01\n"
                          "chi0 = 0.2, 0.9\n[output]\nprofiles = no\n",
                          "t.cfg");
    CHECK(c.d == 4);
    CHECK(c.mode == 1);
    CHECK(c.ell_eff() == 2);
    REQUIRE(c.V.size() == 2);
    CHECK(c.V[0].exponent == Exponent(Rat(7, 2)));
    CHECK(c.V[0].logpower == 1);
    CHECK(c.sigmas == std::vector<double>{0.1, 0.01});
    CHECK(c.chi0.hi == 0.9);
    CHECK(!c.profiles);
    CHECK(c.cone().modes.size() == 4);
    auto op = c.op();
    CHECK(op.tail_radius == 3.0);
    CHECK(op.support_min == doctest::Approx(0.6));
    CHECK(op.beth() == doctest::Approx(0.0));
    // (log r)^1 = -(log rho): the tail coefficient flips sign
    CHECK(op.V_tail.coeff(Exponent(Rat(7, 2)), 1) == cplx(-0.5));
    CHECK(op.potential_at(5.0) == doctest::Approx(0.5 * std::pow(5.0, -3.5) * std::log(5.0) - std::pow(5.0, -3.0)));
    CHECK(op.potential_at(0.5) == 0.0);
    CHECK(c.forcing_function()(2.0) == std::exp(-1.0));
}

TEST_CASE("config: validation errors cite the line")
{
    CHECK(parse_error("[problem]\n\nd = 2\n").find("t.cfg:3:") == 0);
    CHECK(parse_error(BASE + "V = 1, 2, 0\nV_radius = 1\n").find("t.cfg:4:") == 0);
    CHECK(parse_error(BASE + "V = 1, 3, 0\n").find("t.cfg:4: V terms need V_radius") == 0);
    CHECK(parse_error(BASE + "[numerics]\nsigma = 0.1, 0.1\n").find("t.cfg:5:") == 0);
    CHECK(parse_error(BASE + "[numerics]\nsigma = 0.1, -0.01\n").find("t.cfg:5:") == 0);
    CHECK(parse_error(BASE + "colour = red\n").find("t.cfg:4: unknown key") == 0);
    CHECK(parse_error(BASE + "d = 5\n").find("t.cfg:4: duplicate key 'd' (first at line 2)") == 0);
    CHECK(parse_error(BASE + "[nonsense]\n").find("t.cfg:4: unknown section") == 0);
    CHECK(parse_error(BASE + "beth = 0, 1\n").find("t.cfg:4:") == 0);
    CHECK(parse_error(BASE + "beth = 2, 1, inf, inf, inf, inf\n").find("t.cfg:4: beth: need beth <= beth0") == 0);
    CHECK(parse_error(BASE + "V = 1, 4, 0\nV_radius = 1\nbeth = 3, inf, inf, inf, inf, inf\n").find("t.cfg:6:") == 0);
    CHECK(parse_error(BASE + "mode = 9\n").find("t.cfg:4:") == 0);
    CHECK(parse_error(BASE + "[forcing]\ntype = square\n").find("t.cfg:5:") == 0);
    CHECK(parse_error(BASE + "[forcing]\ntype = gaussian\nexponent = 3\n").find("t.cfg:6:") == 0);
    CHECK(parse_error(BASE + "[indexsets]\nE_3 = 1 0\n").find("t.cfg:5:") == 0);
    CHECK(parse_error(BASE + "[indexsets]\nE = 1\n").find("t.cfg:5:") == 0);
    CHECK(parse_error("d = 3\n").find("t.cfg:1: key outside of any section") == 0);
    CHECK(parse_error("[forcing]\ntype = gaussian\n").find("missing [problem]") != std::string::npos);
    CHECK(parse_error(BASE + "l_max\n").find("t.cfg:4:") == 0);
    CHECK(parse_error(BASE) == "");
}

TEST_CASE("config property: sigma sweeps are accepted iff strictly decreasing and positive")
{
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(-8.0, 0.0);
    std::uniform_int_distribution<int> N(1, 7), coin(0, 3);
    for (int trial = 0; trial < 200; ++trial) {
        int n = N(rng);
        std::vector<double> s(n);
        for (auto& x : s) x = std::pow(10.0, U(rng));
        std::sort(s.rbegin(), s.rend());
        int mutation = coin(rng);
        if (mutation == 1 && n > 1) s[1] = s[0];                   // repeated value
        if (mutation == 2 && n > 1) std::swap(s[0], s[n - 1]);    // increasing pair
        if (mutation == 3) s[n - 1] = -s[n - 1];                  // non-positive
        bool valid = true;
        for (int i = 0; i < n; ++i) {
            if (!(s[i] > 0)) valid = false;
            if (i > 0 && !(s[i] < s[i - 1])) valid = false;
        }
        std::string list;
        for (int i = 0; i < n; ++i) list += (i ? ", " : "") + fmt::format("{:.17g}", s[i]);
        std::string err = parse_error(BASE + "# sweep\n[numerics]\nsigma = " + list + "\n");
        INFO(list);
        if (valid) CHECK(err == "");
        else CHECK(err.find("t.cfg:6:") == 0);
    }
}

TEST_CASE("config: file forcing with a sidecar tail")
{
    fs::path dir = scratch("file");
    std::string csv = "r, Re(u), Im(u)\n";
    for (int i = 1; i <= 50; ++i) {
        double r = 0.1 * i;
        csv += fmt::format("{:.17g}, {:.17g}, 0\n", r, std::pow(r, -4.0) * radial_cutoff(r, 2.5));
    }
    put(dir / "f.csv", csv);
    put(dir / "f.tail", PhgSeries::monomial(Var::rho, 4).to_text());
    put(dir / "run.cfg", BASE + "ell = 2\n[forcing]\ntype = file\nfile = f.csv\ntail = f.tail\ntail_radius = 3\n");
    auto c = load_config((dir / "run.cfg").string());
    CHECK(c.file_r.size() == 50);
    CHECK(std::abs(c.forcing_function()(10.0) - 1e-4) < 1e-18);
    CHECK(std::abs(c.forcing_function()(1.05) - 0.5 * (c.file_values[9] + c.file_values[10])) < 1e-15);
    auto E = c.E_l_sets(6.0);
    REQUIRE(E.size() == 2);
    CHECK(E[1].contains(4, 0));
    CHECK(E[1].contains(5, 0));
    put(dir / "bad.cfg", BASE + "[forcing]\ntype = file\nfile = missing.csv\n");
    CHECK_THROWS_WITH_AS(load_config((dir / "bad.cfg").string()), doctest::Contains("bad.cfg:6:"), ValidationError);
}

TEST_CASE("cli indexsets: Schwartz forcing gives the multipole table")
{
    fs::path dir = scratch("schwartz");
    auto r = cli("indexsets --config \"" + example("schwartz_multipole.cfg") + "\" --output-dir \"" + dir.string() + "\"", dir);
    REQUIRE(r.code == 0);
    std::string csv = slurp(dir / "indexsets.csv");
    CHECK(csv.rfind("set, j, Re(j), Im(j), k\n", 0) == 0);
    // I_l = (c_l, 0) and its integer translates, c_l = l + 1
    for (int l = 0; l < 3; ++l)
        for (int j = 1; j <= 6; ++j) {
            std::string row = fmt::format("I_{}, {}, {}, 0, 0\n", l, j, j);
            CHECK((csv.find(row) != std::string::npos) == (j >= l + 1));
        }
    CHECK(csv.find(", 1\n") == std::string::npos);  // no logs
    CHECK(r.out.find("I_0 = {(1, 0), (2, 0), (3, 0), (4, 0), (5, 0), (6, 0)}") != std::string::npos);
    CHECK(fs::exists(dir / "indexsets.gp"));
}

TEST_CASE("cli indexsets: beth = 0 example")
{
    fs::path dir = scratch("beth0");
    auto r = cli("indexsets --config \"" + example("beth0.cfg") + "\" --output-dir \"" + dir.string() + "\"", dir);
    REQUIRE(r.code == 0);
    CHECK(r.out.find("I_0 = {(1, 0), (1, 1), (2, 0), (2, 1)}\n") != std::string::npos);
    std::string csv = slurp(dir / "indexsets.csv");
    CHECK(csv.find("I_0, 1, 1, 0, 0\nI_0, 1, 1, 0, 1\nI_0, 2, 2, 0, 0\nI_0, 2, 2, 0, 1\n") != std::string::npos);

    // --horizon overrides the config
    auto h = cli("indexsets --config \"" + example("beth0.cfg") + "\" --horizon 3.5 --output-dir \"" + dir.string() + "\"", dir);
    REQUIRE(h.code == 0);
    CHECK(h.out.find("horizon = 3.5") != std::string::npos);
    CHECK(h.out.find("(3, 1)") != std::string::npos);
}

TEST_CASE("cli: malformed configs and bad invocations exit nonzero")
{
    fs::path dir = scratch("bad");
    put(dir / "bad.cfg", "[problem]\nd = 3\nV = 1, 2.5, 0\nV_radius = 2\n");
    auto r = cli("indexsets --config \"" + (dir / "bad.cfg").string() + "\" --output-dir \"" + dir.string() + "\"", dir);
    CHECK(r.code == 1);
    CHECK(r.err.find("[config]") != std::string::npos);
    CHECK(r.err.find("bad.cfg:3:") != std::string::npos);
    CHECK(cli("quasimode --output-dir \"" + dir.string() + "\"", dir).code == 1);
    CHECK(cli("indexsets --config \"" + (dir / "absent.cfg").string() + "\"", dir).code == 1);
    CHECK(cli("frobnicate", dir).code != 0);
    CHECK(cli("indexsets --jobs 0 --config \"" + example("beth0.cfg") + "\"", dir).code != 0);
    // a stage failure carries the stage tag: verify needs a compactly supported forcing
    put(dir / "tail.cfg", "[problem]\nd = 3\nl_max = 6\n[forcing]\ntype = power-tail\nexponent = 4\n");
    auto v = cli("verify --config \"" + (dir / "tail.cfg").string() + "\" --output-dir \"" + dir.string() + "\"", dir);
    CHECK(v.code == 1);
    CHECK(v.err.find("[verify]") != std::string::npos);
}

TEST_CASE("cli multipole: tails lie in the predicted sets")
{
    fs::path dir = scratch("multipole");
    auto r = cli("multipole --jobs 2 --config \"" + example("coulomb_tail.cfg") + "\" --horizon 4 --output-dir \"" +
                     dir.string() + "\"",
                 dir);
    REQUIRE(r.code == 0);
    std::string csv = slurp(dir / "multipole.csv");
    CHECK(csv.rfind("l, j, Re(j), Im(j), k, Re(c), Im(c), predicted\n0, 1, 1, 0, 0, ", 0) == 0);
    CHECK(csv.find(", 0\n") == std::string::npos);  // every row predicted
    CHECK(r.out.find("0 coefficients above 1e-10 outside") != std::string::npos);
    CHECK(fs::exists(dir / "multipole_l0.csv"));
    CHECK(fs::exists(dir / "multipole_l0.tail"));
}

TEST_CASE("cli tf: far-field exponent of the driven mode")
{
    fs::path dir = scratch("tf");
    auto r = cli("tf --config \"" + example("free_verify.cfg") + "\" --output-dir \"" + dir.string() + "\"", dir);
    REQUIRE(r.code == 0);
    CHECK(r.out.find("far-field exponent over [40, 400] = 1.0000") != std::string::npos);
    CHECK(slurp(dir / "tf_l0.csv").rfind("rhat, Re(u), Im(u)\n", 0) == 0);
}

TEST_CASE("cli quasimode: target 0 gives a single-round manifest, outputs are deterministic")
{
    fs::path dir = scratch("q0");
    std::string cfg = slurp(example("free_verify.cfg"));
    auto pos = cfg.find("target_order = 2");
    REQUIRE(pos != std::string::npos);
    cfg.replace(pos, 16, "target_order = 0");
    put(dir / "t0.cfg", cfg);
    auto run = [&](const std::string& sub) {
        return cli("quasimode --config \"" + (dir / "t0.cfg").string() + "\" --output-dir \"" + (dir / sub).string() + "\"", dir);
    };
    auto a = run("a");
    REQUIRE(a.code == 0);
    std::string m = slurp(dir / "a" / "manifest.txt");
    int rounds = 0;
    for (std::size_t p = m.find("\nround "); p != std::string::npos; p = m.find("\nround ", p + 1)) ++rounds;
    CHECK(rounds == 1);
    CHECK(m.find("round 1: zf order 0 logs 0") != std::string::npos);
    CHECK(slurp(dir / "a" / "terms.csv") == "alpha, kappa, face, mode, profile-file\n0, 0, zf, 0, term_0.csv\n");
    REQUIRE(run("b").code == 0);
    for (const char* f : {"terms.csv", "term_0.csv", "manifest.txt"}) CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
}

TEST_CASE("cli verify: V = 0 reference reports the fitted power")
{
    fs::path dir = scratch("verify");
    auto r = cli("verify --jobs 3 --config \"" + example("free_verify.cfg") + "\" --output-dir \"" + dir.string() + "\"", dir);
    CHECK(r.code == 0);
    CHECK(r.out.find("fitted p = 1.99") != std::string::npos);
    CHECK(r.out.find("predicted sum eps = 2.000000 after 2 rounds") != std::string::npos);
    std::string csv = slurp(dir / "verify.csv");
    CHECK(csv.rfind("sigma, err, weight\n0.1, ", 0) == 0);
    // the per-sigma work is split over threads; the result does not depend on it
    fs::path dir1 = scratch("verify1");
    REQUIRE(cli("verify --config \"" + example("free_verify.cfg") + "\" --output-dir \"" + dir1.string() + "\"", dir1).code == 0);
    CHECK(slurp(dir1 / "verify.csv") == csv);
}

TEST_CASE("cli selftest: acceptance suite passes")
{
    fs::path dir = scratch("selftest");
    auto r = cli("selftest --seed 99 --output-dir \"" + dir.string() + "\"", dir);
    CHECK(r.code == 0);
    CHECK(r.out.find("10 of 10 criteria passed") != std::string::npos);
    CHECK(r.out.find("seed 99") != std::string::npos);
    CHECK(fs::exists(dir / "selftest.txt"));
}
