#include "hpep/cli/config.hpp"

#include "hpep/errors.hpp"
#include "hpep/problems.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace hpep::cli {

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string lower(std::string s)
{
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::string upper(std::string s)
{
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return s;
}

/// Splits on whitespace and commas.
std::vector<std::string> tokens(const std::string& s)
{
    std::string t = s;
    std::replace(t.begin(), t.end(), ',', ' ');
    std::istringstream ss(t);
    std::vector<std::string> out;
    for (std::string w; ss >> w;)
        out.push_back(w);
    return out;
}

struct BadValue {
    std::string reason;
};

double to_double(const std::string& s)
{
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size() || !std::isfinite(v))
            throw BadValue{"expected a finite number"};
        return v;
    } catch (const std::logic_error&) {
        throw BadValue{"expected a number"};
    }
}

long long to_integer(const std::string& s)
{
    try {
        std::size_t used = 0;
        const long long v = std::stoll(s, &used);
        if (used != s.size())
            throw BadValue{"expected an integer"};
        return v;
    } catch (const std::logic_error&) {
        throw BadValue{"expected an integer"};
    }
}

int to_int(const std::string& s)
{
    const long long v = to_integer(s);
    if (v < -1000000000LL || v > 1000000000LL)
        throw BadValue{"integer out of range"};
    return static_cast<int>(v);
}

bool to_bool(const std::string& s)
{
    const std::string v = lower(s);
    if (v == "true" || v == "yes" || v == "on" || v == "1")
        return true;
    if (v == "false" || v == "no" || v == "off" || v == "0")
        return false;
    throw BadValue{"expected true or false"};
}

Eigen::Vector2d to_vec2(const std::string& s)
{
    const auto t = tokens(s);
    if (t.size() != 2)
        throw BadValue{"expected two numbers"};
    return {to_double(t[0]), to_double(t[1])};
}

Side to_side(const std::string& s)
{
    const std::string v = lower(s);
    if (v == "left")
        return Side::Left;
    if (v == "right")
        return Side::Right;
    if (v == "bottom")
        return Side::Bottom;
    if (v == "top")
        return Side::Top;
    throw BadValue{"unknown side '" + s + "' (left, right, bottom, top)"};
}

std::vector<Side> to_sides(const std::string& s)
{
    std::vector<Side> out;
    for (const auto& t : tokens(s))
        if (lower(t) != "none")
            out.push_back(to_side(t));
    return out;
}

using Setter = std::function<void(ProblemConfig&, const std::string&)>;

std::map<std::string, Setter> setters(const std::string& base_dir)
{
    std::map<std::string, Setter> table;
    table["mesh.file"] = [base_dir](ProblemConfig& c, const std::string& v) {
        if (v.empty()) {
            c.mesh_file.clear();
            return;
        }
        std::filesystem::path p(v);
        c.mesh_file = p.is_absolute() ? p.string() : (std::filesystem::path(base_dir) / p).lexically_normal().string();
    };
    table["mesh.generator"] = [](ProblemConfig& c, const std::string& v) {
        if (lower(v) != "unit_square")
            throw BadValue{"unknown generator '" + v + "' (unit_square)"};
        c.generator = "unit_square";
    };
    table["mesh.n"] = [](ProblemConfig& c, const std::string& v) { c.n = to_int(v); };
    table["mesh.degree"] = [](ProblemConfig& c, const std::string& v) { c.degree = to_int(v); };
    table["mesh.dirichlet"] = [](ProblemConfig& c, const std::string& v) { c.dirichlet = to_sides(v); };
    table["mesh.traction"] = [](ProblemConfig& c, const std::string& v) { c.traction = to_sides(v); };
    table["material.lambda"] = [](ProblemConfig& c, const std::string& v) { c.material.lame_lambda = to_double(v); };
    table["material.mu"] = [](ProblemConfig& c, const std::string& v) { c.material.lame_mu = to_double(v); };
    table["material.hardening"] = [](ProblemConfig& c, const std::string& v) { c.material.hardening_k = to_double(v); };
    table["material.sigma_y"] = [](ProblemConfig& c, const std::string& v) { c.material.yield_sigma_y = to_double(v); };
    table["load.mode"] = [](ProblemConfig& c, const std::string& v) {
        const std::string m = lower(v);
        if (m != "constant" && m != "manufactured")
            throw BadValue{"expected constant or manufactured"};
        c.load_mode = m;
    };
    table["load.f"] = [](ProblemConfig& c, const std::string& v) { c.f = to_vec2(v); };
    table["load.g"] = [](ProblemConfig& c, const std::string& v) { c.g = to_vec2(v); };
    table["load.manufactured"] = [](ProblemConfig& c, const std::string& v) {
        const auto names = manufactured_names();
        if (std::find(names.begin(), names.end(), v) == names.end())
            throw BadValue{"unknown manufactured solution '" + v + "'"};
        c.manufactured = v;
    };
    table["solver.rho"] = [](ProblemConfig& c, const std::string& v) { c.solver.rho = to_double(v); };
    table["solver.tol"] = [](ProblemConfig& c, const std::string& v) { c.solver.tol = to_double(v); };
    table["solver.max_iter"] = [](ProblemConfig& c, const std::string& v) { c.solver.max_iter = to_int(v); };
    table["solver.branch"] = [](ProblemConfig& c, const std::string& v) {
        const std::string b = lower(v);
        if (b == "inactive")
            c.solver.kink_branch = KinkBranch::Inactive;
        else if (b == "active")
            c.solver.kink_branch = KinkBranch::Active;
        else
            throw BadValue{"expected inactive or active"};
    };
    table["solver.verbose"] = [](ProblemConfig& c, const std::string& v) { c.solver.verbose = to_bool(v); };
    table["solver.damping"] = [](ProblemConfig& c, const std::string& v) { c.solver.damping = to_bool(v); };
    table["study.levels"] = [](ProblemConfig& c, const std::string& v) { c.levels = to_int(v); };
    table["study.degrees"] = [](ProblemConfig& c, const std::string& v) {
        c.degrees.clear();
        for (const auto& t : tokens(v))
            c.degrees.push_back(to_int(t));
        if (c.degrees.empty())
            throw BadValue{"expected at least one degree"};
    };
    table["study.reference"] = [](ProblemConfig& c, const std::string& v) {
        const std::string r = lower(v);
        if (r == "manufactured")
            c.reference = ReferenceMode::Manufactured;
        else if (r == "overkill")
            c.reference = ReferenceMode::Overkill;
        else
            throw BadValue{"expected manufactured or overkill"};
    };
    table["study.auxiliary"] = [](ProblemConfig& c, const std::string& v) { c.auxiliary = to_bool(v); };
    table["check.seed"] = [](ProblemConfig& c, const std::string& v) {
        const long long s = to_integer(v);
        if (s < 0)
            throw BadValue{"seed must be non-negative"};
        c.seed = static_cast<std::uint64_t>(s);
    };
    table["check.samples"] = [](ProblemConfig& c, const std::string& v) { c.samples = to_int(v); };
    table["output.dir"] = [](ProblemConfig& c, const std::string& v) { c.output_dir = v; };
    return table;
}

} // namespace

EnvLookup process_environment()
{
    return [](const std::string& name) -> std::optional<std::string> {
        if (const char* v = std::getenv(name.c_str()))
            return std::string(v);
        return std::nullopt;
    };
}

std::string side_name(Side s)
{
    switch (s) {
    case Side::Left: return "left";
    case Side::Right: return "right";
    case Side::Bottom: return "bottom";
    case Side::Top: return "top";
    }
    return "?";
}

ProblemConfig parse_config(std::istream& in, const EnvLookup& env, const std::string& base_dir)
{
    ProblemConfig cfg;
    const auto table = setters(base_dir);
    std::string section;
    std::string line;
    int line_no = 0;
    std::map<std::string, int> seen;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto c = line.find_first_of("#;"); c != std::string::npos)
            line.erase(c);
        line = trim(line);
        if (line.empty())
            continue;
        const std::string where = "config line " + std::to_string(line_no) + ": ";
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(where + "malformed section header '" + line + "'");
            section = lower(trim(line.substr(1, line.size() - 2)));
            if (section.empty())
                throw ConfigError(where + "empty section name");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(where + "expected 'key = value', got '" + line + "'");
        const std::string key = lower(trim(line.substr(0, eq)));
        const std::string value = trim(line.substr(eq + 1));
        if (section.empty())
            throw ConfigError(where + "key '" + key + "' appears before any [section]");
        const std::string full = section + "." + key;
        const auto it = table.find(full);
        if (it == table.end())
            throw ConfigError(where + "unknown key '" + key + "' in section [" + section + "]");
        if (const auto prev = seen.find(full); prev != seen.end())
            throw ConfigError(where + "duplicate key '" + full + "' (first set on line " +
                              std::to_string(prev->second) + ")");
        seen[full] = line_no;
        try {
            it->second(cfg, value);
        } catch (const BadValue& b) {
            throw ConfigError(where + "invalid value '" + value + "' for key '" + full + "': " + b.reason);
        }
    }
    if (env) {
        for (const auto& [full, setter] : table) {
            std::string name = "HPEP_" + upper(full);
            std::replace(name.begin(), name.end(), '.', '_');
            if (const auto v = env(name)) {
                try {
                    setter(cfg, trim(*v));
                } catch (const BadValue& b) {
                    throw ConfigError("environment " + name + ": invalid value '" + *v + "' for key '" + full +
                                      "': " + b.reason);
                }
            }
        }
    }
    return cfg;
}

ProblemConfig load_config(const std::string& path, const EnvLookup& env)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file '" + path + "'");
    const auto dir = std::filesystem::path(path).parent_path();
    ProblemConfig cfg = parse_config(in, env, dir.empty() ? std::string(".") : dir.string());
    validate(cfg);
    return cfg;
}

void validate(const ProblemConfig& cfg)
{
    cfg.material.validate();
    cfg.solver.validate();
    if (cfg.levels < 1)
        throw ConfigError("study.levels must be at least 1");
    if (cfg.n < 1)
        throw ConfigError("mesh.n must be at least 1");
    auto degree_ok = [](int p) { return p >= 1 && p <= 10; };
    if (!degree_ok(cfg.degree))
        throw ConfigError("mesh.degree must be between 1 and 10");
    for (int p : cfg.degrees)
        if (!degree_ok(p))
            throw ConfigError("study.degrees entries must be between 1 and 10");
    if (cfg.samples < 1)
        throw ConfigError("check.samples must be at least 1");
    if (!cfg.mesh_file.empty() && !std::filesystem::is_regular_file(cfg.mesh_file))
        throw ConfigError("mesh.file '" + cfg.mesh_file + "' does not exist");
    if (cfg.output_dir.empty())
        throw ConfigError("output.dir must not be empty");
}

HpMesh build_mesh(const ProblemConfig& cfg, std::optional<int> degree)
{
    if (!cfg.mesh_file.empty()) {
        HpMesh m = read_mesh_file(cfg.mesh_file);
        return degree ? with_degrees(m, std::vector<int>(m.num_elements(), *degree)) : m;
    }
    return unit_square(cfg.n, degree.value_or(cfg.degree), cfg.dirichlet, cfg.traction);
}

Problem build_problem(const ProblemConfig& cfg, std::optional<int> degree)
{
    HpMesh mesh = build_mesh(cfg, degree);
    if (cfg.load_mode == "manufactured") {
        // The catalog fields vanish on x = 0 only.
        for (const auto& be : mesh.boundary_edges()) {
            if (be.tag != BoundaryTag::Dirichlet)
                continue;
            const auto ends = mesh.edge_nodes(be.element, be.local_edge);
            for (auto v : ends)
                if (std::abs(mesh.nodes()[v].x()) > 1e-12)
                    throw ConfigError("manufactured loads require all Dirichlet edges on x = 0");
        }
        return manufactured_problem(cfg.manufactured, std::move(mesh), cfg.material);
    }
    Problem p{"constant", std::move(mesh), cfg.material, LoadData::constant(cfg.f, cfg.g), std::nullopt};
    return p;
}

} // namespace hpep::cli
