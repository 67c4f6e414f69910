#include "fharm/experiment.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "fharm/error.hpp"
#include "json.hpp"

namespace fharm {

const char* const kVersion = "1.0.0";

namespace {

using json = nlohmann::json;

// ---- strict reading ----

class Node {
public:
    Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError((path_.empty() ? "/" : path_) + ": expected an object");
    }

    [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
        throw ConfigError(path_ + "/" + key + ": " + msg);
    }

    const json* find(const std::string& key) {
        seen_.insert(key);
        const auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    void number(const std::string& key, double& out) {
        if (const json* p = find(key)) {
            if (!p->is_number()) fail(key, "expected a number");
            out = p->get<double>();
            if (!std::isfinite(out)) fail(key, "must be finite");
        }
    }

    void optional_number(const std::string& key, std::optional<double>& out) {
        if (const json* p = find(key)) {
            if (p->is_null()) {
                out.reset();
                return;
            }
            if (!p->is_number()) fail(key, "expected a number or null");
            out = p->get<double>();
        }
    }

    void integer(const std::string& key, int& out) {
        if (const json* p = find(key)) {
            if (!p->is_number_integer()) fail(key, "expected an integer");
            const auto v = p->get<std::int64_t>();
            if (v < -1000000000 || v > 1000000000) fail(key, "integer out of range");
            out = int(v);
        }
    }

    void unsigned64(const std::string& key, std::uint64_t& out) {
        if (const json* p = find(key)) {
            if (!p->is_number_unsigned()) fail(key, "expected a non-negative integer");
            out = p->get<std::uint64_t>();
        }
    }

    void boolean(const std::string& key, bool& out) {
        if (const json* p = find(key)) {
            if (!p->is_boolean()) fail(key, "expected true or false");
            out = p->get<bool>();
        }
    }

    void string(const std::string& key, std::string& out) {
        if (const json* p = find(key)) {
            if (!p->is_string()) fail(key, "expected a string");
            out = p->get<std::string>();
        }
    }

    void numbers(const std::string& key, std::vector<double>& out) {
        if (const json* p = find(key)) {
            if (!p->is_array()) fail(key, "expected an array of numbers");
            out.clear();
            for (std::size_t i = 0; i < p->size(); ++i) {
                if (!(*p)[i].is_number()) fail(key + "/" + std::to_string(i), "expected a number");
                out.push_back((*p)[i].get<double>());
            }
        }
    }

    void strings(const std::string& key, std::vector<std::string>& out) {
        if (const json* p = find(key)) {
            if (!p->is_array()) fail(key, "expected an array of strings");
            out.clear();
            for (std::size_t i = 0; i < p->size(); ++i) {
                if (!(*p)[i].is_string()) fail(key + "/" + std::to_string(i), "expected a string");
                out.push_back((*p)[i].get<std::string>());
            }
        }
    }

    void points(const std::string& key, std::vector<Vec3>& out) {
        if (const json* p = find(key)) {
            if (!p->is_array()) fail(key, "expected an array of points");
            out.clear();
            for (std::size_t i = 0; i < p->size(); ++i) {
                const json& e = (*p)[i];
                const std::string where = key + "/" + std::to_string(i);
                if (!e.is_array() || e.size() < 2 || e.size() > 3) fail(where, "expected [x, y] or [x, y, z]");
                Vec3 v = Vec3::Zero();
                for (std::size_t a = 0; a < e.size(); ++a) {
                    if (!e[a].is_number()) fail(where + "/" + std::to_string(a), "expected a number");
                    v[a] = e[a].get<double>();
                }
                out.push_back(v);
            }
        }
    }

    std::optional<Node> child(const std::string& key) {
        if (const json* p = find(key)) {
            if (!p->is_object()) fail(key, "expected an object");
            return Node(*p, path_ + "/" + key);
        }
        return std::nullopt;
    }

    void finish() const {
        for (const auto& item : j_.items())
            if (!seen_.count(item.key())) fail(item.key(), "unknown key");
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

void read_model(Node& m, ModelSpec& s) {
    m.string("kind", s.kind);
    m.number("beta", s.beta);
    m.number("B", s.B);
    m.number("vartheta", s.vartheta);
    m.integer("n", s.n);
    m.integer("q", s.q);
    m.string("table_path", s.table_path);
    m.optional_number("A", s.A);
    m.number("energy_bound", s.energy_bound);
    m.finish();
}

void read_grid(Node& g, GridSpec& s) {
    g.integer("n", s.n);
    g.integer("dims", s.dims);
    g.number("spacing", s.spacing);
    g.string("shape", s.shape);
    g.finish();
}

void read_map(Node& m, MapSpec& s) {
    m.string("kind", s.kind);
    m.number("a", s.a);
    m.number("k", s.k);
    m.string("path", s.path);
    m.number("perturb", s.perturb);
    m.string("boundary", s.boundary);
    m.finish();
}

void read_solve(Node& m, SolveSpec& s) {
    m.boolean("enabled", s.enabled);
    m.integer("max_iters", s.cfg.max_iters);
    m.number("step0", s.cfg.step0);
    m.number("backtrack_factor", s.cfg.backtrack_factor);
    m.number("energy_tol", s.cfg.energy_tol);
    m.number("residual_tol", s.cfg.residual_tol);
    m.integer("window", s.cfg.window);
    m.integer("residual_trials", s.residual_trials);
    m.finish();
}

void read_analysis(Node& m, AnalysisSpec& s) {
    m.points("centers", s.centers);
    m.integer("random_centers", s.random_centers);
    m.number("r_min", s.r_min);
    m.number("r_max", s.r_max);
    m.integer("radii_count", s.radii_count);
    m.number("eps_mollifier", s.eps_mollifier);
    m.integer("flux_dirs", s.flux_dirs);
    m.finish();
}

void read_strata(Node& m, StrataSpec& s) {
    auto& t = s.thresholds;
    m.optional_number("eps0", t.eps0);
    m.number("eps_strat", t.eps_strat);
    m.number("delta_pinch", t.delta_pinch);
    m.number("rho", t.rho);
    m.number("r0", t.r0);
    m.number("reifenberg_delta", t.reifenberg_delta);
    m.number("detect_r_max", s.detect_r_max);
    m.integer("detect_radii", s.detect_radii);
    m.number("alpha", s.alpha);
    m.integer("lattice", s.lattice);
    m.number("lattice_extent", s.lattice_extent);
    m.integer("max_singular_points", s.max_singular_points);
    m.number("s_max", s.s_max);
    m.integer("k", s.k);
    m.number("top_radius", s.top_radius);
    m.numbers("minkowski_radii", s.minkowski_radii);
    m.numbers("beta_radii", s.beta_radii);
    m.finish();
}

json point_json(const Vec3& p, int n) {
    json a = json::array();
    for (int i = 0; i < n; ++i) a.push_back(p[i]);
    return a;
}

[[noreturn]] void invalid(const std::string& path, const std::string& msg) { throw ConfigError(path + ": " + msg); }

// ---- output helpers ----

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class Csv {
public:
    Csv(const std::filesystem::path& path, const std::string& header) : f_(path) {
        if (!f_) throw Error("cannot write " + path.string());
        f_ << header << '\n';
    }
    Csv& operator<<(double v) { return field(num(v)); }
    Csv& operator<<(int v) { return field(std::to_string(v)); }
    Csv& operator<<(std::size_t v) { return field(std::to_string(v)); }
    Csv& operator<<(const std::string& s) { return field(s); }
    void end() {
        f_ << '\n';
        first_ = true;
    }

private:
    Csv& field(const std::string& s) {
        if (!first_) f_ << ',';
        f_ << s;
        first_ = false;
        return *this;
    }
    std::ofstream f_;
    bool first_ = true;
};

void write_json(const std::filesystem::path& path, const json& j) {
    std::ofstream f(path);
    if (!f) throw Error("cannot write " + path.string());
    f << j.dump(2) << '\n';
}

// JSON numbers cannot hold inf or nan
json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::vector<double> read_table(const std::string& path, std::vector<double>& F) {
    std::ifstream f(path);
    if (!f) throw ConfigError("/model/table_path: cannot open " + path);
    std::vector<double> p;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream in(line);
        double a, b;
        if (!(in >> a >> b)) {
            if (p.empty()) continue;  // header
            throw ConfigError("/model/table_path: bad row at line " + std::to_string(lineno));
        }
        p.push_back(a);
        F.push_back(b);
    }
    return p;
}

}  // namespace

// ---- config ----

ExperimentConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("parse error: ") + e.what());
    }
    ExperimentConfig cfg;
    Node root(j, "");
    if (auto m = root.child("model")) read_model(*m, cfg.model);
    if (auto m = root.child("grid")) read_grid(*m, cfg.grid);
    if (auto m = root.child("initial")) read_map(*m, cfg.initial);
    if (auto m = root.child("solve")) read_solve(*m, cfg.solve);
    if (auto m = root.child("analysis")) read_analysis(*m, cfg.analysis);
    if (auto m = root.child("strata")) read_strata(*m, cfg.strata);
    root.unsigned64("seed", cfg.seed);
    root.string("output_dir", cfg.output_dir);
    root.strings("stages", cfg.stages);
    root.finish();
    validate_config(cfg);
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

void validate_config(const ExperimentConfig& c) {
    const auto& m = c.model;
    if (m.kind != "dirichlet" && m.kind != "paper_f1" && m.kind != "tabulated")
        invalid("/model/kind", "expected dirichlet, paper_f1 or tabulated");
    if (!(m.B > 0.0)) invalid("/model/B", "must be positive");
    if (!(m.vartheta >= 0.0)) invalid("/model/vartheta", "must be non-negative");
    if (m.kind == "paper_f1" && !(m.beta > 0.0 && m.beta < 1.0)) invalid("/model/beta", "must lie in (0, 1)");
    if (m.kind == "tabulated" && m.table_path.empty()) invalid("/model/table_path", "required for tabulated models");
    if (m.n != 2 && m.n != 3) invalid("/model/n", "must be 2 or 3");
    if (m.q != 2 && m.q != 3) invalid("/model/q", "must be 2 or 3");
    if (m.A && !(*m.A > 0.0)) invalid("/model/A", "must be positive");
    if (!(m.energy_bound >= 0.0)) invalid("/model/energy_bound", "must be non-negative");

    const auto& g = c.grid;
    if (g.n != 2 && g.n != 3) invalid("/grid/n", "must be 2 or 3");
    if (g.n != m.n) invalid("/grid/n", "must equal /model/n");
    if (g.dims < 8) invalid("/grid/dims", "needs at least 8 nodes per axis");
    if (g.dims > 1024) invalid("/grid/dims", "at most 1024 nodes per axis");
    if (!(g.spacing > 0.0)) invalid("/grid/spacing", "must be positive");
    if (g.shape != "ball" && g.shape != "box") invalid("/grid/shape", "expected ball or box");

    const auto& i = c.initial;
    static const std::set<std::string> kinds{"hedgehog", "cylinder", "two_hedgehogs", "constant", "circle", "file"};
    if (!kinds.count(i.kind)) invalid("/initial/kind", "unknown map kind");
    if (i.kind == "file" && i.path.empty()) invalid("/initial/path", "required for file maps");
    if ((i.kind == "cylinder" || i.kind == "two_hedgehogs") && g.n != 3) invalid("/initial/kind", "needs n = 3");
    if (i.kind == "circle" && g.n != 2) invalid("/initial/kind", "needs n = 2");
    if (i.kind == "two_hedgehogs" && !(i.a > 0.0)) invalid("/initial/a", "must be positive");
    if (!(i.perturb >= 0.0)) invalid("/initial/perturb", "must be non-negative");
    if (i.boundary != "hedgehog" && i.boundary != "keep_trace") invalid("/initial/boundary", "expected hedgehog or keep_trace");
    const int q_map = (i.kind == "circle" || (i.kind == "hedgehog" && g.n == 2)) ? 2 : 3;
    if (i.kind != "file" && i.kind != "constant" && q_map != m.q) invalid("/model/q", "does not match the initial map");

    const auto& s = c.solve;
    if (s.cfg.max_iters < 0) invalid("/solve/max_iters", "must be non-negative");
    if (!(s.cfg.step0 > 0.0)) invalid("/solve/step0", "must be positive");
    if (!(s.cfg.backtrack_factor > 0.0 && s.cfg.backtrack_factor < 1.0))
        invalid("/solve/backtrack_factor", "must lie in (0, 1)");
    if (!(s.cfg.energy_tol > 0.0)) invalid("/solve/energy_tol", "must be positive");
    if (!(s.cfg.residual_tol > 0.0)) invalid("/solve/residual_tol", "must be positive");
    if (s.cfg.window < 1) invalid("/solve/window", "must be at least 1");
    if (s.residual_trials < 1) invalid("/solve/residual_trials", "must be at least 1");

    const auto& a = c.analysis;
    if (a.random_centers < 0) invalid("/analysis/random_centers", "must be non-negative");
    if (!(a.r_min > 0.0)) invalid("/analysis/r_min", "must be positive");
    if (!(a.r_max > a.r_min)) invalid("/analysis/r_max", "must exceed r_min");
    if (a.radii_count < 2) invalid("/analysis/radii_count", "must be at least 2");
    if (!(a.eps_mollifier > 0.0 && a.eps_mollifier < 0.5)) invalid("/analysis/eps_mollifier", "must lie in (0, 1/2)");
    if (a.flux_dirs < 0) invalid("/analysis/flux_dirs", "must be non-negative");

    const auto& st = c.strata;
    const auto& t = st.thresholds;
    if (t.eps0 && !(*t.eps0 > 0.0)) invalid("/strata/eps0", "must be positive");
    if (!(t.eps_strat > 0.0)) invalid("/strata/eps_strat", "must be positive");
    if (!(t.delta_pinch > 0.0)) invalid("/strata/delta_pinch", "must be positive");
    if (!(t.rho > 0.0 && t.rho < 1.0)) invalid("/strata/rho", "must lie in (0, 1)");
    if (!(t.r0 > 0.0)) invalid("/strata/r0", "must be positive");
    if (t.r0 < 4.0 * g.spacing * (1 - 1e-12)) invalid("/strata/r0", "must be at least 4 grid spacings");
    if (!(t.reifenberg_delta > 0.0)) invalid("/strata/reifenberg_delta", "must be positive");
    if (st.detect_radii < 1) invalid("/strata/detect_radii", "must be at least 1");
    if (!(st.alpha > 0.0 && st.alpha <= 1.0)) invalid("/strata/alpha", "must lie in (0, 1]");
    if (st.lattice < 0) invalid("/strata/lattice", "must be non-negative");
    if (!(st.lattice_extent >= 0.0)) invalid("/strata/lattice_extent", "must be non-negative");
    if (st.max_singular_points < 0) invalid("/strata/max_singular_points", "must be non-negative");
    if (!(st.s_max >= t.r0)) invalid("/strata/s_max", "must be at least r0");
    if (st.k < 0 || st.k >= g.n) invalid("/strata/k", "must lie in [0, n - 1]");
    if (!(st.top_radius > 0.0)) invalid("/strata/top_radius", "must be positive");
    for (double r : st.minkowski_radii)
        if (!(r > 0.0)) invalid("/strata/minkowski_radii", "radii must be positive");
    for (double r : st.beta_radii)
        if (!(r >= 4.0 * g.spacing * (1 - 1e-12))) invalid("/strata/beta_radii", "radii must be at least 4 grid spacings");

    static const std::set<std::string> stages{"solve", "analyze", "stratify", "beta", "cover", "verify"};
    for (std::size_t k = 0; k < c.stages.size(); ++k)
        if (!stages.count(c.stages[k])) invalid("/stages/" + std::to_string(k), "unknown stage");
    if (c.output_dir.empty()) invalid("/output_dir", "must not be empty");
}

std::string config_to_json(const ExperimentConfig& c) {
    const int n = c.grid.n;
    json j;
    const auto& m = c.model;
    j["model"] = {{"kind", m.kind},         {"beta", m.beta}, {"B", m.B},
                  {"vartheta", m.vartheta}, {"n", m.n},       {"q", m.q},
                  {"table_path", m.table_path},
                  {"A", m.A ? json(*m.A) : json(nullptr)},
                  {"energy_bound", m.energy_bound}};
    j["grid"] = {{"n", c.grid.n}, {"dims", c.grid.dims}, {"spacing", c.grid.spacing}, {"shape", c.grid.shape}};
    const auto& i = c.initial;
    j["initial"] = {{"kind", i.kind}, {"a", i.a},           {"k", i.k},
                    {"path", i.path}, {"perturb", i.perturb}, {"boundary", i.boundary}};
    const auto& s = c.solve;
    j["solve"] = {{"enabled", s.enabled},
                  {"max_iters", s.cfg.max_iters},
                  {"step0", s.cfg.step0},
                  {"backtrack_factor", s.cfg.backtrack_factor},
                  {"energy_tol", s.cfg.energy_tol},
                  {"residual_tol", s.cfg.residual_tol},
                  {"window", s.cfg.window},
                  {"residual_trials", s.residual_trials}};
    const auto& a = c.analysis;
    json centers = json::array();
    for (const auto& p : a.centers) centers.push_back(point_json(p, n));
    j["analysis"] = {{"centers", centers},
                     {"random_centers", a.random_centers},
                     {"r_min", a.r_min},
                     {"r_max", a.r_max},
                     {"radii_count", a.radii_count},
                     {"eps_mollifier", a.eps_mollifier},
                     {"flux_dirs", a.flux_dirs}};
    const auto& st = c.strata;
    const auto& t = st.thresholds;
    j["strata"] = {{"eps0", t.eps0 ? json(*t.eps0) : json(nullptr)},
                   {"eps_strat", t.eps_strat},
                   {"delta_pinch", t.delta_pinch},
                   {"rho", t.rho},
                   {"r0", t.r0},
                   {"reifenberg_delta", t.reifenberg_delta},
                   {"detect_r_max", st.detect_r_max},
                   {"detect_radii", st.detect_radii},
                   {"alpha", st.alpha},
                   {"lattice", st.lattice},
                   {"lattice_extent", st.lattice_extent},
                   {"max_singular_points", st.max_singular_points},
                   {"s_max", st.s_max},
                   {"k", st.k},
                   {"top_radius", st.top_radius},
                   {"minkowski_radii", st.minkowski_radii},
                   {"beta_radii", st.beta_radii}};
    j["seed"] = c.seed;
    j["output_dir"] = c.output_dir;
    j["stages"] = c.stages;
    return j.dump(2);
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : config_to_json(cfg)) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

// ---- presets ----

std::vector<std::string> preset_names() { return {"hedgehog-dirichlet", "hedgehog-f1", "cylinder", "two-hedgehogs"}; }

ExperimentConfig preset_config(const std::string& name) {
    ExperimentConfig c;
    c.model.kind = "dirichlet";
    c.model.B = 5.0;  // F'' p + (nq/2) F' = 4.5 for n = q = 3
    c.output_dir = "out/" + name;
    auto ball = [&](int nodes) {
        c.grid.n = 3;
        c.grid.dims = nodes;
        c.grid.spacing = 2.0 / (nodes - 1);
        c.grid.shape = "ball";
    };
    if (name == "hedgehog-dirichlet") {
        ball(64);
        c.initial.kind = "hedgehog";
        c.initial.boundary = "hedgehog";
        c.solve.cfg.max_iters = 400;
        c.analysis.centers = {Vec3::Zero(), Vec3(0.25, 0.0, 0.0), Vec3(0.0, 0.2, 0.2)};
        c.analysis.random_centers = 5;
        c.analysis.r_min = 0.13;
        c.analysis.r_max = 0.5;
        c.strata.thresholds.r0 = 0.15;
        c.strata.k = 0;
    } else if (name == "hedgehog-f1") {
        ball(48);
        c.model.kind = "paper_f1";
        c.model.beta = 0.5;
        c.model.B = 10.0;
        c.model.energy_bound = 10.0;
        c.initial.kind = "hedgehog";
        c.initial.boundary = "hedgehog";
        c.solve.cfg.max_iters = 400;
        c.analysis.centers = {Vec3::Zero()};
        c.analysis.random_centers = 19;
        c.analysis.r_min = 0.18;
        c.analysis.r_max = 0.45;
        c.strata.thresholds.r0 = 0.18;
        c.strata.beta_radii = {0.18, 0.3};
        c.strata.k = 0;
    } else if (name == "cylinder") {
        ball(64);
        c.initial.kind = "cylinder";
        c.initial.boundary = "keep_trace";
        c.solve.enabled = false;
        c.analysis.centers = {Vec3::Zero(), Vec3(0.0, 0.0, 0.3), Vec3(0.25, 0.0, 0.0)};
        c.analysis.r_min = 0.13;
        c.analysis.r_max = 0.5;
        c.strata.thresholds.r0 = 0.15;
        c.strata.k = 1;
        c.stages = {"analyze", "stratify", "beta", "cover"};
    } else if (name == "two-hedgehogs") {
        ball(48);
        c.initial.kind = "two_hedgehogs";
        // boundary degree is zero; the pair survives minimization only near the boundary
        c.initial.a = 0.6;
        c.initial.boundary = "keep_trace";
        c.solve.cfg.max_iters = 400;
        c.analysis.centers = {Vec3(-0.6, 0.0, 0.0), Vec3(0.6, 0.0, 0.0), Vec3::Zero()};
        c.analysis.r_min = 0.18;
        c.analysis.r_max = 0.38;
        c.strata.thresholds.r0 = 0.18;
        c.strata.beta_radii = {0.18, 0.3};
        c.strata.k = 0;
    } else {
        throw ConfigError("unknown preset '" + name + "'");
    }
    validate_config(c);
    return c;
}

// ---- builders ----

IntegrandModel build_model(const ModelSpec& s) {
    IntegrandModel m;
    if (s.kind == "dirichlet") {
        m = IntegrandModel::dirichlet(s.n, s.q, s.B, s.vartheta);
    } else if (s.kind == "paper_f1") {
        m = IntegrandModel::paper_f1(s.beta, s.n, s.q, s.B, s.vartheta);
    } else if (s.kind == "tabulated") {
        std::vector<double> F;
        auto p = read_table(s.table_path, F);
        m = IntegrandModel::tabulated(std::move(p), std::move(F), s.n, s.q, s.B, s.vartheta);
    } else {
        throw ConfigError("/model/kind: unknown kind");
    }
    if (s.A)
        m.A_constant = *s.A;
    else
        calibrate_A(m, s.energy_bound);
    return m;
}

GridDomain build_grid(const GridSpec& s) {
    const double half = 0.5 * s.spacing * (s.dims - 1);
    GridDomain d = s.shape == "ball" ? GridDomain::ball(s.n, s.dims, half) : GridDomain::centered_box(s.n, s.dims, half);
    d.validate();
    return d;
}

SphereMap build_initial_map(const ExperimentConfig& cfg, const GridDomain& grid) {
    const auto& s = cfg.initial;
    SphereMap u;
    if (s.kind == "hedgehog")
        u = hedgehog_map(grid);
    else if (s.kind == "cylinder")
        u = cylinder_map(grid);
    else if (s.kind == "two_hedgehogs")
        u = two_hedgehogs_map(grid, s.a);
    else if (s.kind == "circle")
        u = circle_map(grid, s.k);
    else if (s.kind == "constant")
        u = constant_map(grid, cfg.model.q, Vec3::UnitX());
    else
        u = load_map(s.path, grid.n_dim);
    if (s.kind == "file") {
        const auto& d = u.domain();
        if (d.dims != grid.dims || std::abs(d.spacing - grid.spacing) > 1e-12 * grid.spacing || d.shape != grid.shape)
            throw ConfigError("/initial/path: map grid does not match /grid");
    }
    if (u.q_dim() != cfg.model.q) throw ConfigError("/model/q: does not match the initial map");
    if (s.perturb > 0.0) {
        // three seeded low-frequency modes on interior nodes
        std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
        std::normal_distribution<double> N01;
        std::uniform_real_distribution<double> U(0.0, 2.0 * M_PI);
        Vec3 amp[3], freq[3];
        double phase[3];
        for (int m = 0; m < 3; ++m) {
            for (int a = 0; a < 3; ++a) amp[m][a] = N01(rng);
            if (u.q_dim() == 2) amp[m][2] = 0.0;
            for (int a = 0; a < 3; ++a) freq[m][a] = 1.0 + 2.0 * std::abs(N01(rng));
            phase[m] = U(rng);
        }
        auto values = u.values();
        const auto& kind = u.node_kind();
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (kind[i] != NodeKind::Interior) continue;
            const Vec3 x = grid.node_position(i);
            Vec3 w = Vec3::Zero();
            for (int m = 0; m < 3; ++m) w += amp[m] * std::sin(freq[m].dot(x) + phase[m]);
            values[i] += s.perturb * w / 3.0;
        }
        u = SphereMap(u.domain(), u.q_dim(), std::move(values));
    }
    return u;
}

// ---- experiment ----

Experiment::Experiment(ExperimentConfig cfg) : cfg_(std::move(cfg)) {
    validate_config(cfg_);
    model_ = build_model(cfg_.model);
    grid_ = build_grid(cfg_.grid);
    map_ = build_initial_map(cfg_, grid_);
    std::filesystem::create_directories(cfg_.output_dir);
}

void Experiment::set_map(SphereMap u) {
    const auto& d = u.domain();
    if (d.n_dim != grid_.n_dim) throw DimensionError("map dimension does not match the config");
    if (d.dims != grid_.dims || std::abs(d.spacing - grid_.spacing) > 1e-12 * grid_.spacing || d.shape != grid_.shape)
        throw DimensionError("map grid does not match the config grid");
    map_ = std::move(u);
    analyzer_.reset();
    detection_.reset();
}

std::filesystem::path Experiment::out(const std::string& name) const {
    return std::filesystem::path(cfg_.output_dir) / name;
}

void Experiment::record(const std::string& name) {
    if (std::find(files_.begin(), files_.end(), name) == files_.end()) files_.push_back(name);
}

DensityAnalyzer& Experiment::analyzer() {
    if (!analyzer_) analyzer_ = std::make_unique<DensityAnalyzer>(map_, model_);
    return *analyzer_;
}

const DetectionResult& Experiment::detection() {
    if (!detection_) {
        const auto& st = cfg_.strata;
        const double r0 = st.thresholds.r0;
        std::vector<double> radii{r0};
        if (st.detect_radii > 1 && st.detect_r_max > r0) radii = log_spaced(r0, st.detect_r_max, st.detect_radii);
        detection_ = singular_detect(analyzer(), st.thresholds, radii);
    }
    return *detection_;
}

SolveReport Experiment::solve_stage() {
    SolveConfig sc = cfg_.solve.cfg;
    sc.boundary = cfg_.initial.boundary == "hedgehog" ? BoundaryCondition::Hedgehog : BoundaryCondition::KeepTrace;
    SolveReport rep = minimize(map_, model_, sc);
    save_map(rep.map, out("map.fhm"));
    record("map.fhm");
    // continue from the stored map so later stages match a standalone run on the file
    set_map(load_map(out("map.fhm"), grid_.n_dim));
    const auto el = el_residual_report(map_, model_, cfg_.solve.residual_trials, cfg_.seed);
    const auto st = stationarity_residual_report(map_, model_, cfg_.solve.residual_trials, cfg_.seed);
    {
        Csv csv(out("solve.csv"), "iteration,energy");
        for (std::size_t i = 0; i < rep.energy_history.size(); ++i) {
            csv << i << rep.energy_history[i];
            csv.end();
        }
    }
    record("solve.csv");
    json j = {{"iterations", rep.iterations},
              {"converged", rep.converged},
              {"final_energy", rep.energy_history.empty() ? 0.0 : rep.energy_history.back()},
              {"final_gradient_ratio", rep.final_gradient_ratio},
              {"el_residual", {{"max", el.max}, {"mean", el.mean}}},
              {"stationarity_residual", {{"max", st.max}, {"mean", st.mean}}},
              {"residual_tol", sc.residual_tol},
              {"residuals_below_tol", el.max < sc.residual_tol && st.max < sc.residual_tol}};
    write_json(out("solve.json"), j);
    record("solve.json");
    stages_run_.push_back("solve");
    return rep;
}

MonotonicityReport Experiment::analyze_stage() {
    const auto& a = cfg_.analysis;
    const auto radii = log_spaced(a.r_min, a.r_max, a.radii_count);
    std::vector<Vec3> centers = a.centers;
    for (const auto& c : centers)
        if (!grid_.contains_ball(c, a.r_max)) throw DomainError("analysis centre too close to the boundary");
    if (a.random_centers > 0) {
        std::mt19937_64 rng(cfg_.seed);
        std::uniform_real_distribution<double> U(-1.0, 1.0);
        const Vec3 lo = grid_.lo(), hi = grid_.hi();
        int tries = 0;
        while (int(centers.size()) < int(a.centers.size()) + a.random_centers) {
            if (++tries > 100000) throw DomainError("no room for random analysis centres");
            Vec3 x = Vec3::Zero();
            for (int k = 0; k < grid_.n_dim; ++k) x[k] = 0.5 * (lo[k] + hi[k]) + 0.5 * (hi[k] - lo[k]) * U(rng);
            if (grid_.contains_ball(x, a.r_max)) centers.push_back(x);
        }
    }
    MonotonicityOptions opt;
    opt.flux_dirs = a.flux_dirs;
    opt.seed = cfg_.seed;
    opt.mollifier_eps = a.eps_mollifier;
    MonotonicityReport rep = monotonicity_report(analyzer(), centers, radii, opt);
    {
        Csv csv(out("profiles.csv"), "center,x,y,z,r,theta,h,theta_bar,theta_smooth,pinch,flux");
        for (std::size_t c = 0; c < rep.profiles.size(); ++c) {
            const auto& p = rep.profiles[c];
            for (std::size_t i = 0; i < p.radii.size(); ++i) {
                const double r = p.radii[i];
                const double w = 8.0 * r <= p.radii.back() * (1 + 1e-12) ? pinch(p, r).value
                                                                         : std::numeric_limits<double>::quiet_NaN();
                csv << c << p.center.x() << p.center.y() << p.center.z() << r << p.theta[i] << p.h[i]
                    << p.theta_bar[i] << p.theta_smooth[i] << w << p.flux[i];
                csv.end();
            }
        }
    }
    record("profiles.csv");
    {
        Csv csv(out("violations.csv"), "kind,center,r_lo,r_hi,increment");
        auto emit = [&](const std::string& kind, const MonotonicityViolation& v) {
            const auto& p = rep.profiles[v.profile];
            csv << kind << v.profile << p.radii[v.index] << p.radii[v.index + 1] << v.increment;
            csv.end();
        };
        for (const auto& v : rep.violations) emit("monotonicity", v);
        for (const auto& v : rep.flux_deficits) emit("flux", v);
    }
    record("violations.csv");
    json j = {{"centers", rep.profiles.size()},
              {"radii", radii.size()},
              {"Lambda", rep.Lambda},
              {"tol", rep.tol},
              {"violations", rep.violations.size()},
              {"flux_deficits", rep.flux_deficits.size()},
              {"worst_increment", rep.worst_increment}};
    write_json(out("monotonicity.json"), j);
    record("monotonicity.json");
    stages_run_.push_back("analyze");
    return rep;
}

void Experiment::stratify_stage() {
    const auto& st = cfg_.strata;
    const auto& t = st.thresholds;
    const int n = grid_.n_dim;
    const DetectionResult& det = detection();
    {
        Csv csv(out("detection.csv"), "x,y,z,theta_bar_r0,singular");
        std::size_t s = 0;
        for (std::size_t i = 0; i < det.flagged.size(); ++i) {
            const bool sing = s < det.singular.size() && det.singular[s] == det.flagged[i];
            if (sing) ++s;
            csv << det.flagged[i].x() << det.flagged[i].y() << det.flagged[i].z() << det.flagged_theta_r0[i]
                << (sing ? 1 : 0);
            csv.end();
        }
    }
    record("detection.csv");

    std::vector<Vec3> pts;
    if (st.lattice > 0) {
        const int L = st.lattice;
        auto coord = [&](int i) { return L == 1 ? 0.0 : -st.lattice_extent + 2.0 * st.lattice_extent * i / (L - 1); };
        for (int i = 0; i < L; ++i)
            for (int j = 0; j < L; ++j)
                for (int k = 0; k < (n == 3 ? L : 1); ++k) pts.emplace_back(coord(i), coord(j), n == 3 ? coord(k) : 0.0);
    }
    const std::size_t ns = det.singular.size();
    const std::size_t take = std::min<std::size_t>(ns, st.max_singular_points);
    for (std::size_t m = 0; m < take; ++m) pts.push_back(det.singular[m * ns / take]);

    const double tol = 0.5 * std::sqrt(double(n)) * grid_.spacing;
    std::vector<StratumReport> reps;
    std::vector<std::size_t> used;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double top = std::min(st.s_max, grid_.distance_to_boundary(pts[i]));
        if (top < t.r0 || !grid_.point_in_shape(pts[i])) continue;
        reps.push_back(stratum_report(map_, pts[i], top, t.r0));
        used.push_back(i);
    }
    int monotone_violations = 0;
    {
        Csv csv(out("strata.csv"), "point,x,y,z,scale,k,ambient,projected");
        for (std::size_t m = 0; m < reps.size(); ++m) {
            const auto& r = reps[m];
            for (std::size_t s = 0; s < r.scales.size(); ++s)
                for (int k = 0; k <= n; ++k) {
                    const auto& D = r.defects[s][k];
                    if (k > 0 && D.ambient < r.defects[s][k - 1].ambient) ++monotone_violations;
                    csv << m << r.x.x() << r.x.y() << r.x.z() << r.scales[s] << k << D.ambient << D.projected;
                    csv.end();
                }
        }
    }
    record("strata.csv");
    {
        std::string header = "point,x,y,z,singular,regularity_scale";
        for (int k = 0; k < n; ++k) header += ",member_k" + std::to_string(k);
        Csv csv(out("strata_points.csv"), header);
        for (std::size_t m = 0; m < reps.size(); ++m) {
            const Vec3& x = reps[m].x;
            bool sing = false;
            for (const auto& f : det.flagged) sing = sing || (f - x).head(n).norm() <= tol;
            csv << m << x.x() << x.y() << x.z() << (sing ? 1 : 0) << regularity_scale(map_, x, st.alpha, cfg_.seed);
            for (int k = 0; k < n; ++k) csv << (stratum_membership(reps[m], k, t.eps_strat, t.r0) ? 1 : 0);
            csv.end();
        }
    }
    record("strata_points.csv");
    // containment over a 3 x 3 x 3 lattice of (k, eps, r)
    std::vector<int> ks;
    for (int k = 0; k < std::min(n, 3); ++k) ks.push_back(k);
    const std::vector<double> epss{0.5 * t.eps_strat, t.eps_strat, 2.0 * t.eps_strat};
    const std::vector<double> rs{t.r0, 2.0 * t.r0, 4.0 * t.r0};
    int containment_violations = 0, checked = 0;
    for (const auto& r : reps)
        for (int k1 : ks)
            for (double e1 : epss)
                for (double r1 : rs)
                    for (int k2 : ks)
                        for (double e2 : epss)
                            for (double r2 : rs) {
                                if (!(k1 <= k2 && e1 >= e2 && r1 <= r2)) continue;
                                ++checked;
                                if (stratum_membership(r, k1, e1, r1) && !stratum_membership(r, k2, e2, r2))
                                    ++containment_violations;
                            }
    json j = {{"eps0", det.eps0},
              {"flagged", det.flagged.size()},
              {"singular", det.singular.size()},
              {"points", reps.size()},
              {"skipped_points", pts.size() - reps.size()},
              {"eps_strat", t.eps_strat},
              {"r0", t.r0},
              {"defect_monotonicity_violations", monotone_violations},
              {"containment_pairs_checked", checked},
              {"containment_violations", containment_violations}};
    write_json(out("strata.json"), j);
    record("strata.json");
    stages_run_.push_back("stratify");
}

void Experiment::beta_stage() {
    const auto& st = cfg_.strata;
    const auto& t = st.thresholds;
    const int n = grid_.n_dim;
    const DetectionResult& det = detection();
    const auto& S = det.singular;
    const MeasureCloud mu = discrete_measure(n, S, std::vector<double>(S.size(), t.r0), st.k);
    {
        Csv csv(out("beta.csv"), "point,x,y,z,r,beta");
        for (std::size_t i = 0; i < S.size(); ++i)
            for (double r : st.beta_radii) {
                csv << i << S[i].x() << S[i].y() << S[i].z() << r << jones_beta(mu, S[i], r, st.k);
                csv.end();
            }
    }
    record("beta.csv");
    const auto reif = reifenberg_integral(mu, Vec3::Zero(), st.top_radius, st.k, t.r0, t.reifenberg_delta);

    std::vector<double> pr;
    for (double r : st.beta_radii) {
        pr.push_back(r);
        pr.push_back(8.0 * r);
    }
    std::sort(pr.begin(), pr.end());
    pr.erase(std::unique(pr.begin(), pr.end()), pr.end());
    const auto profiles = cell_profiles(analyzer(), S, pr);
    int applicable = 0, rows = 0;
    {
        Csv csv(out("l2.csv"), "point,r,applicable,D0,Dk1,lhs,rhs,ratio");
        for (std::size_t i = 0; i < S.size(); ++i)
            for (double r : st.beta_radii) {
                if (!grid_.contains_ball(S[i], 8.0 * r)) continue;
                bool ready = true;
                for (std::size_t y = 0; y < S.size(); ++y)
                    if ((S[y] - S[i]).head(n).norm() <= r * (1 + 1e-12) &&
                        (profiles[y].radii.empty() || profiles[y].radii.back() < 8.0 * r * (1 - 1e-12)))
                        ready = false;
                if (!ready) continue;
                const auto res = l2_approx_check(map_, mu, profiles, S[i], r, st.k, t);
                applicable += res.applicable;
                ++rows;
                csv << i << r << (res.applicable ? 1 : 0) << res.D0 << res.Dk1 << res.lhs << res.rhs << res.ratio;
                csv.end();
            }
    }
    record("l2.csv");
    json j = {{"k", st.k},
              {"atoms", S.size()},
              {"reifenberg", {{"value", reif.value}, {"ratio", reif.ratio}, {"passes", reif.passes},
                              {"delta", t.reifenberg_delta}}},
              {"l2_rows", rows},
              {"l2_applicable", applicable}};
    write_json(out("beta.json"), j);
    record("beta.json");
    stages_run_.push_back("beta");
}

void Experiment::cover_stage() {
    const auto& st = cfg_.strata;
    const auto& t = st.thresholds;
    const int n = grid_.n_dim;
    const DetectionResult& det = detection();
    const auto& S = det.singular;
    const auto profiles = cell_profiles(analyzer(), S, log_spaced(t.r0, std::max(st.top_radius, 2.0 * t.r0), 12));
    std::vector<Vec3> pts;
    std::vector<MonotoneProfile> prof;
    for (std::size_t i = 0; i < S.size(); ++i)
        if (!profiles[i].radii.empty()) {
            pts.push_back(S[i]);
            prof.push_back(profiles[i]);
        }
    const CoverResult cov = covering_refine(n, pts, prof, t, st.k, Vec3::Zero(), st.top_radius);
    int r0_balls = 0, drop_balls = 0;
    {
        Csv csv(out("cover.csv"), "ball,x,y,z,radius,label,stage");
        for (std::size_t b = 0; b < cov.balls.size(); ++b) {
            const auto& B = cov.balls[b];
            const bool r0b = B.label == BallLabel::R0Ball;
            (r0b ? r0_balls : drop_balls)++;
            csv << b << B.center.x() << B.center.y() << B.center.z() << B.radius
                << std::string(r0b ? "r0-ball" : "drop-ball") << B.stage;
            csv.end();
        }
    }
    record("cover.csv");
    const auto mk = minkowski_content(grid_, S, st.minkowski_radii, st.k);
    {
        Csv csv(out("minkowski.csv"), "r,volume,normalized");
        for (std::size_t i = 0; i < mk.radii.size(); ++i) {
            csv << mk.radii[i] << mk.volume[i] << mk.normalized[i];
            csv.end();
        }
    }
    record("minkowski.csv");
    int spanning = 0;
    for (const auto& r : cov.refinements) spanning += r.spans;
    json j = {{"k", st.k},
              {"E", cov.E},
              {"stages", cov.stages},
              {"sum_rk", cov.sum_rk},
              {"balls", cov.balls.size()},
              {"r0_balls", r0_balls},
              {"drop_balls", drop_balls},
              {"refinements", cov.refinements.size()},
              {"spanning_refinements", spanning},
              {"points_without_profile", S.size() - pts.size()}};
    write_json(out("cover.json"), j);
    record("cover.json");
    stages_run_.push_back("cover");
}

AssumptionReport Experiment::verify_stage() {
    const AssumptionReport rep = verify_assumptions(model_);
    auto item = [](const AssumptionItem& it) {
        return json{{"passed", it.passed}, {"worst", finite_or_null(it.worst)}, {"detail", it.detail}};
    };
    json j = {{"kind", model_.kind_name()},
              {"ellipticity", item(rep.ellipticity)},
              {"xz_growth", item(rep.xz_growth)},
              {"convexity", item(rep.convexity)},
              {"integrability", item(rep.integrability)},
              {"derived_fp_bounds", item(rep.derived_fp_bounds)},
              {"C", rep.C ? finite_or_null(*rep.C) : json(nullptr)},
              {"D", rep.D ? finite_or_null(*rep.D) : json(nullptr)},
              {"A", model_.A_constant ? json(*model_.A_constant) : json(nullptr)},
              {"p_max_checked", rep.p_max_checked},
              {"all_passed", rep.all_passed()}};
    write_json(out("integrand.json"), j);
    record("integrand.json");
    stages_run_.push_back("verify");
    return rep;
}

void Experiment::run() {
    for (const auto& s : cfg_.stages) {
        if (s == "solve") {
            if (cfg_.solve.enabled) solve_stage();
        } else if (s == "analyze") {
            analyze_stage();
        } else if (s == "stratify") {
            stratify_stage();
        } else if (s == "beta") {
            beta_stage();
        } else if (s == "cover") {
            cover_stage();
        } else if (s == "verify") {
            verify_stage();
        }
    }
    write_manifest();
}

void Experiment::write_manifest() const {
    char hash[32];
    std::snprintf(hash, sizeof hash, "%016" PRIx64, config_hash(cfg_));
    json j = {{"version", kVersion},
              {"seed", cfg_.seed},
              {"config_hash", hash},
              {"stages", stages_run_},
              {"files", files_},
              {"config", json::parse(config_to_json(cfg_))}};
    write_json(out("manifest.json"), j);
}

}  // namespace fharm
