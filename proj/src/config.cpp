#include "lerexp/config.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "lerexp/errors.hpp"

namespace lerexp {

namespace {

struct Entry {
    std::string key, value;
    int line = 0;
};

struct Section {
    std::string name;
    int line = 0;
    std::vector<Entry> entries;
};

const std::map<std::string, std::set<std::string>>& known_keys()
{
    static const std::map<std::string, std::set<std::string>> k{
        {"problem", {"d", "l_max", "eigenvalues", "mode", "ell", "V", "V_radius", "beth", "m"}},
        {"forcing", {"type", "amplitude", "width", "exponent", "logpower", "radius", "file", "tail", "tail_radius"}},
        {"indexsets", {"E"}},  // plus E_<l>
        {"numerics",
         {"grid_n", "r_min", "R_grid", "R_tail", "tail_tol", "tf_x_min", "tf_x_max", "tf_h", "tf_head_order",
          "tolerance", "horizon", "target_order", "K", "K_l", "chi0", "chi1", "max_rounds", "sigma",
          "weight_exponent", "r_lo", "r_hi", "c_hi", "oracle_n", "oracle_r_min", "oracle_r_max", "verify_tolerance"}},
        {"output", {"directory", "profiles", "plots"}},
    };
    return k;
}

std::string trim(const std::string& s)
{
    auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(trim(cur));
    if (!s.empty() && s.back() == sep) out.push_back("");
    return out;
}

class Reader {
public:
    explicit Reader(std::string src) : src_(std::move(src)) {}

    [[noreturn]] void fail(int line, const std::string& msg) const
    {
        if (line <= 0) throw ValidationError(fmt::format("{}: {}", src_, msg));
        throw ValidationError(fmt::format("{}:{}: {}", src_, line, msg));
    }

    double number(const Entry& e, const std::string& text) const
    {
        const char* b = text.c_str();
        char* end = nullptr;
        double v = std::strtod(b, &end);
        if (text.empty() || end != b + text.size() || std::isnan(v))
            fail(e.line, fmt::format("{}: '{}' is not a number", e.key, text));
        return v;
    }
    double number(const Entry& e) const { return number(e, e.value); }

    long long integer(const Entry& e, const std::string& text) const
    {
        double v = number(e, text);
        if (!std::isfinite(v) || v != std::floor(v) || std::abs(v) > 1e15)
            fail(e.line, fmt::format("{}: '{}' is not an integer", e.key, text));
        return static_cast<long long>(v);
    }
    int integer(const Entry& e) const { return static_cast<int>(integer(e, e.value)); }

    bool boolean(const Entry& e) const
    {
        if (e.value == "true" || e.value == "yes" || e.value == "1") return true;
        if (e.value == "false" || e.value == "no" || e.value == "0") return false;
        fail(e.line, fmt::format("{}: '{}' is not a boolean", e.key, e.value));
    }

    std::vector<double> list(const Entry& e) const
    {
        std::vector<double> out;
        for (const auto& p : split(e.value, ',')) out.push_back(number(e, p));
        return out;
    }

    // "p/q" stays exact, decimals are rationalised when possible
    Exponent exponent(const Entry& e, const std::string& text) const
    {
        auto slash = text.find('/');
        if (slash != std::string::npos) {
            long long p = integer(e, trim(text.substr(0, slash))), q = integer(e, trim(text.substr(slash + 1)));
            if (q == 0) fail(e.line, fmt::format("{}: zero denominator in '{}'", e.key, text));
            return Exponent(Rat(p, q));
        }
        double v = number(e, text);
        if (!std::isfinite(v)) fail(e.line, fmt::format("{}: exponent must be finite", e.key));
        return Exponent::from_double(v);
    }

    std::vector<IndexTerm> terms(const Entry& e) const
    {
        std::vector<IndexTerm> out;
        if (trim(e.value).empty()) return out;
        for (const auto& item : split(e.value, ';')) {
            std::istringstream in(item);
            std::string j, k, extra;
            if (!(in >> j >> k) || (in >> extra))
                fail(e.line, fmt::format("{}: expected 'exponent logpower' pairs separated by ';', got '{}'", e.key, item));
            int kk = static_cast<int>(integer(e, k));
            if (kk < 0) fail(e.line, fmt::format("{}: negative log power", e.key));
            out.push_back({exponent(e, j), kk});
        }
        return out;
    }

    Cutoff cutoff(const Entry& e) const
    {
        auto v = list(e);
        if (v.size() != 2 || !(v[0] > 0 && v[1] > v[0] && std::isfinite(v[1])))
            fail(e.line, fmt::format("{}: expected 'lo, hi' with 0 < lo < hi", e.key));
        return {v[0], v[1]};
    }

private:
    std::string src_;
};

std::vector<Section> tokenize(const std::string& text, const Reader& R)
{
    std::vector<Section> out;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        auto hash = raw.find('#');
        std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') R.fail(line, fmt::format("malformed section header '{}'", s));
            std::string name = trim(s.substr(1, s.size() - 2));
            if (!known_keys().count(name)) R.fail(line, fmt::format("unknown section [{}]", name));
            for (const auto& sec : out)
                if (sec.name == name) R.fail(line, fmt::format("section [{}] repeated (first at line {})", name, sec.line));
            out.push_back({name, line, {}});
            continue;
        }
        auto eq = s.find('=');
        if (eq == std::string::npos) R.fail(line, fmt::format("expected 'key = value', got '{}'", s));
        if (out.empty()) R.fail(line, "key outside of any section");
        Entry e{trim(s.substr(0, eq)), trim(s.substr(eq + 1)), line};
        if (e.key.empty()) R.fail(line, "empty key");
        auto& sec = out.back();
        const auto& keys = known_keys().at(sec.name);
        bool known = keys.count(e.key) || (sec.name == "indexsets" && e.key.rfind("E_", 0) == 0);
        if (!known) R.fail(line, fmt::format("unknown key '{}' in [{}]", e.key, sec.name));
        if (e.key != "V")
            for (const auto& o : sec.entries)
                if (o.key == e.key) R.fail(line, fmt::format("duplicate key '{}' (first at line {})", e.key, o.line));
        sec.entries.push_back(e);
    }
    return out;
}

void load_forcing_file(RunConfig& c, const Reader& R, const Entry& e)
{
    namespace fs = std::filesystem;
    fs::path p = fs::path(c.base_dir) / c.forcing_file;
    std::ifstream in(p);
    if (!in) R.fail(e.line, fmt::format("cannot open forcing file '{}'", p.string()));
    std::string raw;
    int row = 0;
    while (std::getline(in, raw)) {
        ++row;
        std::string s = trim(raw);
        if (s.empty() || s.front() == '#') continue;
        auto cols = split(s, ',');
        if (row == 1 && cols.size() == 3 && cols[0] == "r") continue;  // header
        double v[3];
        bool ok = cols.size() == 3;
        for (int i = 0; ok && i < 3; ++i) {
            char* end = nullptr;
            v[i] = std::strtod(cols[i].c_str(), &end);
            ok = !cols[i].empty() && end == cols[i].c_str() + cols[i].size() && std::isfinite(v[i]);
        }
        if (!ok) R.fail(e.line, fmt::format("forcing file '{}' row {}: expected 'r, Re(f), Im(f)'", p.string(), row));
        if (!c.file_r.empty() && !(v[0] > c.file_r.back()))
            R.fail(e.line, fmt::format("forcing file '{}' row {}: r must increase", p.string(), row));
        if (!(v[0] > 0)) R.fail(e.line, fmt::format("forcing file '{}' row {}: r must be positive", p.string(), row));
        c.file_r.push_back(v[0]);
        c.file_values.emplace_back(v[1], v[2]);
    }
    if (c.file_r.size() < 2) R.fail(e.line, fmt::format("forcing file '{}' has fewer than two rows", p.string()));
}

void load_tail_file(RunConfig& c, const Reader& R, const Entry& e)
{
    namespace fs = std::filesystem;
    fs::path p = fs::path(c.base_dir) / c.forcing_tail_file;
    std::ifstream in(p);
    if (!in) R.fail(e.line, fmt::format("cannot open tail file '{}'", p.string()));
    std::stringstream ss;
    ss << in.rdbuf();
    PhgSeries t;
    try {
        t = PhgSeries::from_text(ss.str());
    } catch (const std::exception& ex) {
        R.fail(e.line, fmt::format("tail file '{}': {}", p.string(), ex.what()));
    }
    if (t.var() != Var::rho) R.fail(e.line, fmt::format("tail file '{}': series must be in rho", p.string()));
    c.file_tail = t;
}

const Entry* find(const Section* s, const std::string& key)
{
    if (!s) return nullptr;
    for (const auto& e : s->entries)
        if (e.key == key) return &e;
    return nullptr;
}

}  // namespace

double radial_cutoff(double r, double R)
{
    return smooth_step((r - 0.2 * R) / (0.8 * R)).v;
}

RunConfig parse_config(const std::string& text, const std::string& source, const std::string& base_dir)
{
    Reader R(source);
    auto sections = tokenize(text, R);
    auto sec = [&](const std::string& name) -> const Section* {
        for (const auto& s : sections)
            if (s.name == name) return &s;
        return nullptr;
    };
    RunConfig c;
    c.source = source;
    c.base_dir = base_dir;

    const Section* problem = sec("problem");
    if (!problem) R.fail(0, "missing [problem] section");
    const Entry* e_d = find(problem, "d");
    if (!e_d) R.fail(problem->line, "[problem] needs d");
    c.d = R.integer(*e_d);
    if (c.d < 3) R.fail(e_d->line, fmt::format("d must be >= 3 (got {})", c.d));

    const Entry* e_lmax = find(problem, "l_max");
    const Entry* e_eig = find(problem, "eigenvalues");
    if (e_lmax && e_eig) R.fail(e_eig->line, "give either l_max or eigenvalues, not both");
    if (e_lmax) {
        c.l_max = R.integer(*e_lmax);
        if (c.l_max < 0) R.fail(e_lmax->line, "l_max must be >= 0");
    }
    if (e_eig) {
        c.eigenvalues = R.list(*e_eig);
        for (std::size_t i = 0; i < c.eigenvalues.size(); ++i) {
            double v = c.eigenvalues[i];
            if (!(v >= 0) || !std::isfinite(v)) R.fail(e_eig->line, "eigenvalues must be finite and >= 0");
            if (i > 0 && v < c.eigenvalues[i - 1]) R.fail(e_eig->line, "eigenvalues must be nondecreasing");
        }
    }
    if (auto e = find(problem, "mode")) {
        c.mode = R.integer(*e);
        if (c.mode < 0) R.fail(e->line, "mode must be >= 0");
    }
    if (auto e = find(problem, "ell")) {
        c.ell = R.integer(*e);
        if (c.ell < 0) R.fail(e->line, "ell must be >= 0");
    }
    int first_V = 0;
    for (const auto& e : problem->entries) {
        if (e.key != "V") continue;
        if (!first_V) first_V = e.line;
        auto parts = split(e.value, ',');
        if (parts.size() != 3) R.fail(e.line, "V: expected 'coeff, exponent, logpower'");
        PotentialTerm t;
        t.coeff = R.number(e, parts[0]);
        if (!std::isfinite(t.coeff)) R.fail(e.line, "V: coefficient must be finite");
        t.exponent = R.exponent(e, parts[1]);
        if (!t.exponent.is_real() || t.exponent.re() < 3.0 - EXPONENT_TOL)
            R.fail(e.line, fmt::format("V: exponent must be real and >= 3 (got {})", parts[1]));
        long long k = R.integer(e, parts[2]);
        if (k < 0) R.fail(e.line, "V: log power must be >= 0");
        t.logpower = static_cast<int>(k);
        c.V.push_back(t);
    }
    if (auto e = find(problem, "V_radius")) {
        c.V_radius = R.number(*e);
        if (!(c.V_radius > 0) || !std::isfinite(c.V_radius)) R.fail(e->line, "V_radius must be positive");
    }
    if (!c.V.empty() && c.V_radius <= 0) R.fail(first_V, "V terms need V_radius");
    if (auto e = find(problem, "beth")) {
        auto v = R.list(*e);
        if (v.size() != 6) R.fail(e->line, fmt::format("beth: expected 6 orders (beth, beth0..beth4), got {}", v.size()));
        BethVector b;
        for (int i = 0; i < 6; ++i) {
            if (!(v[i] >= 0)) R.fail(e->line, "beth: orders must be >= 0 (inf allowed)");
            b[i] = v[i];
        }
        if (b[0] > b[1]) R.fail(e->line, "beth: need beth <= beth0");
        c.beth = b;
        if (!c.V.empty()) {
            double derived = c.op().beth();
            if (b[0] > derived + EXPONENT_TOL)
                R.fail(e->line, fmt::format("beth: declared {} exceeds the order {} of the potential", b[0], derived));
        }
    }
    if (auto e = find(problem, "m")) {
        c.m = R.number(*e);
        if (!std::isfinite(c.m)) R.fail(e->line, "m must be finite");
    }
    int nmodes = c.eigenvalues.empty() ? (c.l_max >= 0 ? c.l_max + 1 : -1) : int(c.eigenvalues.size());
    if (nmodes >= 0) {
        if (c.mode >= nmodes) R.fail(find(problem, "mode") ? find(problem, "mode")->line : problem->line,
                                     fmt::format("mode {} outside the {} listed modes", c.mode, nmodes));
        if (c.ell_eff() > nmodes)
            R.fail(find(problem, "ell") ? find(problem, "ell")->line : problem->line,
                   fmt::format("ell = {} exceeds the {} listed modes", c.ell_eff(), nmodes));
    }

    if (const Section* f = sec("forcing")) {
        const Entry* t = find(f, "type");
        if (!t) R.fail(f->line, "[forcing] needs type");
        if (t->value == "gaussian") c.forcing = ForcingType::gaussian;
        else if (t->value == "power-tail") c.forcing = ForcingType::power_tail;
        else if (t->value == "file") c.forcing = ForcingType::file;
        else R.fail(t->line, fmt::format("type must be gaussian, power-tail or file (got '{}')", t->value));
        auto allowed = [&](std::set<std::string> ok) {
            ok.insert("type");
            for (const auto& e : f->entries)
                if (!ok.count(e.key)) R.fail(e.line, fmt::format("key '{}' does not apply to forcing type {}", e.key, t->value));
        };
        if (auto e = find(f, "amplitude")) {
            c.amplitude = R.number(*e);
            if (!std::isfinite(c.amplitude)) R.fail(e->line, "amplitude must be finite");
        }
        if (c.forcing == ForcingType::gaussian) {
            allowed({"amplitude", "width"});
            if (auto e = find(f, "width")) {
                c.width = R.number(*e);
                if (!(c.width > 0) || !std::isfinite(c.width)) R.fail(e->line, "width must be positive");
            }
        } else if (c.forcing == ForcingType::power_tail) {
            allowed({"amplitude", "exponent", "logpower", "radius"});
            const Entry* e = find(f, "exponent");
            if (!e) R.fail(f->line, "power-tail forcing needs exponent");
            c.tail_exponent = R.exponent(*e, e->value);
            if (!c.tail_exponent.is_real() || !(c.tail_exponent.re() > 0))
                R.fail(e->line, "exponent must be real and positive");
            if (auto k = find(f, "logpower")) {
                c.tail_log = R.integer(*k);
                if (c.tail_log < 0) R.fail(k->line, "logpower must be >= 0");
            }
            if (auto r = find(f, "radius")) {
                c.tail_radius = R.number(*r);
                if (!(c.tail_radius > 0) || !std::isfinite(c.tail_radius)) R.fail(r->line, "radius must be positive");
            }
        } else {
            allowed({"file", "tail", "tail_radius"});
            const Entry* e = find(f, "file");
            if (!e) R.fail(f->line, "file forcing needs file");
            c.forcing_file = e->value;
            load_forcing_file(c, R, *e);
            const Entry* tl = find(f, "tail");
            const Entry* tr = find(f, "tail_radius");
            if (bool(tl) != bool(tr)) R.fail((tl ? tl : tr)->line, "tail and tail_radius go together");
            if (tl) {
                c.forcing_tail_file = tl->value;
                load_tail_file(c, R, *tl);
                c.tail_radius = R.number(*tr);
                if (!(c.tail_radius >= c.file_r.front() && c.tail_radius <= c.file_r.back()))
                    R.fail(tr->line, "tail_radius must lie inside the sampled range");
            }
        }
    }

    if (const Section* s = sec("indexsets")) {
        for (const auto& e : s->entries) {
            if (e.key == "E") {
                c.E = R.terms(e);
                continue;
            }
            long long l = R.integer(e, e.key.substr(2));
            if (l < 0 || l >= c.ell_eff())
                R.fail(e.line, fmt::format("{}: mode must satisfy 0 <= l < ell = {}", e.key, c.ell_eff()));
            c.E_l[int(l)] = R.terms(e);
        }
    }

    if (const Section* n = sec("numerics")) {
        auto pos = [&](const char* key, double& dst) {
            if (auto e = find(n, key)) {
                dst = R.number(*e);
                if (!(dst > 0) || !std::isfinite(dst)) R.fail(e->line, fmt::format("{} must be positive", key));
            }
        };
        auto posint = [&](const char* key, int& dst, int minimum) {
            if (auto e = find(n, key)) {
                dst = R.integer(*e);
                if (dst < minimum) R.fail(e->line, fmt::format("{} must be >= {}", key, minimum));
            }
        };
        posint("grid_n", c.zf.n, 64);
        pos("r_min", c.zf.r_min);
        pos("R_grid", c.zf.R_grid);
        pos("R_tail", c.zf.R_tail);
        pos("tail_tol", c.zf.tail_tol);
        if (!(c.zf.r_min < c.zf.R_tail && c.zf.R_tail < c.zf.R_grid)) {
            const Entry* e = find(n, "R_tail");
            R.fail(e ? e->line : n->line, "need r_min < R_tail < R_grid");
        }
        pos("tf_x_min", c.tf.x_min);
        pos("tf_x_max", c.tf.x_max);
        pos("tf_h", c.tf.h);
        pos("tf_head_order", c.tf.head_order);
        if (!(c.tf.x_min < c.tf.x_max)) {
            const Entry* e = find(n, "tf_x_max");
            R.fail(e ? e->line : n->line, "need tf_x_min < tf_x_max");
        }
        pos("tolerance", c.tolerance);
        pos("horizon", c.horizon);
        if (auto e = find(n, "target_order")) {
            c.target_order = R.number(*e);
            if (!(c.target_order >= 0) || !std::isfinite(c.target_order)) R.fail(e->line, "target_order must be >= 0");
        }
        if (auto e = find(n, "K")) {
            c.K = R.number(*e);
            if (!(c.K >= 0) || !std::isfinite(c.K)) R.fail(e->line, "K must be >= 0");
        }
        if (auto e = find(n, "K_l")) {
            c.K_l = R.list(*e);
            for (double v : c.K_l)
                if (!(v >= 0) || !std::isfinite(v)) R.fail(e->line, "K_l entries must be >= 0");
            if (int(c.K_l.size()) != c.ell_eff())
                R.fail(e->line, fmt::format("K_l needs one entry per mode l < ell = {}", c.ell_eff()));
        }
        if (auto e = find(n, "chi0")) c.chi0 = R.cutoff(*e);
        if (auto e = find(n, "chi1")) c.chi1 = R.cutoff(*e);
        posint("max_rounds", c.max_rounds, 1);
        if (auto e = find(n, "sigma")) {
            c.sigmas = R.list(*e);
            if (c.sigmas.empty()) R.fail(e->line, "sigma sweep is empty");
            for (std::size_t i = 0; i < c.sigmas.size(); ++i) {
                if (!(c.sigmas[i] > 0) || !std::isfinite(c.sigmas[i])) R.fail(e->line, "sigma values must be positive");
                if (i > 0 && !(c.sigmas[i] < c.sigmas[i - 1]))
                    R.fail(e->line, "sigma sweep must be strictly decreasing");
            }
        }
        if (auto e = find(n, "weight_exponent")) {
            c.weight_exponent = R.number(*e);
            if (!std::isfinite(c.weight_exponent)) R.fail(e->line, "weight_exponent must be finite");
        }
        pos("r_lo", c.r_lo);
        pos("r_hi", c.r_hi);
        pos("c_hi", c.c_hi);
        posint("oracle_n", c.oracle_n, 64);
        pos("oracle_r_min", c.oracle_r_min);
        pos("oracle_r_max", c.oracle_r_max);
        if (!(c.oracle_r_min < c.oracle_r_max)) {
            const Entry* e = find(n, "oracle_r_max");
            R.fail(e ? e->line : n->line, "need oracle_r_min < oracle_r_max");
        }
        pos("verify_tolerance", c.verify_tolerance);
    }

    if (const Section* o = sec("output")) {
        if (auto e = find(o, "directory")) {
            if (e->value.empty()) R.fail(e->line, "directory is empty");
            c.output_dir = e->value;
        }
        if (auto e = find(o, "profiles")) c.profiles = R.boolean(*e);
        if (auto e = find(o, "plots")) c.plots = R.boolean(*e);
    }
    return c;
}

RunConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ValidationError(fmt::format("{}: cannot open config", path));
    std::stringstream ss;
    ss << in.rdbuf();
    namespace fs = std::filesystem;
    fs::path parent = fs::path(path).parent_path();
    return parse_config(ss.str(), path, parent.empty() ? "." : parent.string());
}

ConeData RunConfig::cone() const
{
    if (!eigenvalues.empty()) return ConeData::from_eigenvalues(d, eigenvalues);
    if (l_max >= 0) return ConeData::euclidean(d, l_max);
    // enough modes that c_l exceeds every horizon in use
    double h = std::max(horizon_or(6.0), target_order + 4.0);
    return ConeData::euclidean(d, std::max(ell_eff(), mode) + int(std::ceil(h)) + 2);
}

RadialOperator RunConfig::op() const
{
    RadialOperator o = RadialOperator::free(cone());
    if (V.empty()) return o;
    auto terms = V;
    double R = V_radius;
    o.V = [terms, R](double r) {
        double s = 0;
        for (const auto& t : terms) s += t.coeff * std::pow(r, -t.exponent.re()) * std::pow(std::log(r), t.logpower);
        return radial_cutoff(r, R) * s;
    };
    // (log r)^k = (-1)^k (log rho)^k
    PhgSeries tail(Var::rho);
    for (const auto& t : V) tail.add_term(t.exponent, t.logpower, t.coeff * (t.logpower % 2 ? -1.0 : 1.0));
    o.V_tail = tail;
    o.tail_radius = R;
    o.support_min = 0.2 * R;
    return o;
}

BethVector RunConfig::beth_vector() const
{
    if (beth) return *beth;
    return {op().beth(), INF, INF, INF, INF, INF};
}

IndexSet RunConfig::E_set(double h) const
{
    if (E) return IndexSet(*E, h, SetKind::index);
    return IndexSet(h, SetKind::index);
}

std::vector<IndexSet> RunConfig::E_l_sets(double h) const
{
    std::vector<IndexSet> out;
    for (int l = 0; l < ell_eff(); ++l) {
        auto it = E_l.find(l);
        if (it != E_l.end()) {
            out.emplace_back(it->second, h, SetKind::index);
            continue;
        }
        if (E || !E_l.empty()) {
            out.emplace_back(h, SetKind::index);
            continue;
        }
        // the radial forcing drives every tracked mode with its own tail
        if (forcing == ForcingType::power_tail && tail_exponent.re() <= h)
            out.push_back(single(tail_exponent, tail_log, h));
        else if (forcing == ForcingType::file && file_tail)
            out.push_back(IndexSet(file_tail->index_set_of(h).terms(), h, SetKind::index));
        else
            out.emplace_back(h, SetKind::index);
    }
    return out;
}

std::function<cplx(double)> RunConfig::forcing_function() const
{
    switch (forcing) {
    case ForcingType::gaussian: {
        double a = amplitude, w = width;
        return [a, w](double r) { return cplx(a * std::exp(-(r / w) * (r / w))); };
    }
    case ForcingType::power_tail: {
        double a = amplitude, j = tail_exponent.re(), R = tail_radius;
        int k = tail_log;
        return [a, j, k, R](double r) { return cplx(a * radial_cutoff(r, R) * std::pow(r, -j) * std::pow(std::log(r), k)); };
    }
    case ForcingType::file: {
        auto rs = file_r;
        auto vs = file_values;
        auto tail = file_tail;
        double R = tail_radius;
        return [rs, vs, tail, R](double r) -> cplx {
            if (tail && r >= R) return tail->evaluate(1.0 / r);
            if (r <= rs.front()) return vs.front();
            if (r >= rs.back()) return tail ? tail->evaluate(1.0 / r) : cplx(0.0);
            auto it = std::upper_bound(rs.begin(), rs.end(), r);
            std::size_t i = std::size_t(it - rs.begin());
            double t = (r - rs[i - 1]) / (rs[i] - rs[i - 1]);
            return (1 - t) * vs[i - 1] + t * vs[i];
        };
    }
    }
    return {};
}

ModeProfile RunConfig::forcing_profile(int l, Var v, const Grid& g) const
{
    auto f = forcing_function();
    if (forcing == ForcingType::power_tail) {
        PhgSeries t(Var::rho);
        t.add_term(tail_exponent, tail_log, amplitude * (tail_log % 2 ? -1.0 : 1.0));
        return ModeProfile::sample(l, v, g, f, t, tail_radius);
    }
    if (forcing == ForcingType::file && file_tail) return ModeProfile::sample(l, v, g, f, *file_tail, tail_radius);
    return ModeProfile::sample(l, v, g, f);
}

double RunConfig::forcing_support() const
{
    switch (forcing) {
    case ForcingType::gaussian: return 6.5 * width;
    case ForcingType::power_tail: return INF;
    case ForcingType::file: return file_tail ? INF : file_r.back();
    }
    return INF;
}

DriverOptions RunConfig::driver_options() const
{
    DriverOptions o;
    o.target_order = target_order;
    o.K = K;
    o.K_l = K_l;
    o.chi0 = chi0;
    o.chi1 = chi1;
    o.zf = zf;
    o.tf = tf;
    o.tol = tolerance;
    o.horizon = horizon;
    o.max_rounds = max_rounds;
    return o;
}

}  // namespace lerexp
