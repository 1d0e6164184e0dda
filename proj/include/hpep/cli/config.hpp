#pragma once

#include "hpep/analysis.hpp"
#include "hpep/mesh.hpp"
#include "hpep/solver.hpp"
#include "hpep/tensors.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <istream>
#include <optional>
#include <string>
#include <vector>

namespace hpep::cli {

/// Returns the value of an environment variable, if set.
using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

EnvLookup process_environment();

struct ProblemConfig {
    // [mesh]
    std::string mesh_file; // resolved relative to the config file; empty means generator
    std::string generator = "unit_square";
    int n = 4;
    int degree = 1;
    std::vector<Side> dirichlet{Side::Left};
    std::vector<Side> traction{Side::Right};

    // [material]
    MaterialLaw material;

    // [load]
    std::string load_mode = "constant"; // constant | manufactured
    Eigen::Vector2d f = Eigen::Vector2d::Zero();
    Eigen::Vector2d g = Eigen::Vector2d::Zero();
    std::string manufactured = "trig";

    // [solver]
    SolverConfig solver;

    // [study]
    int levels = 3;
    std::vector<int> degrees{1};
    ReferenceMode reference = ReferenceMode::Manufactured;
    bool auxiliary = true;

    // [check]
    std::uint64_t seed = 42;
    int samples = 100;

    // [output]
    std::string output_dir = "out";
};

/// Parses "key = value" lines grouped under "[section]" headers; '#' and ';' start comments.
/// Every known key can be overridden by HPEP_<SECTION>_<KEY> (upper case) from `env`.
/// Errors are ConfigError with "config line N" or the variable name in the message.
ProblemConfig parse_config(std::istream& in, const EnvLookup& env, const std::string& base_dir = ".");

ProblemConfig load_config(const std::string& path, const EnvLookup& env);

/// Checks cross-key invariants (positive sigma_y, levels >= 1, mesh file exists, ...).
void validate(const ProblemConfig& cfg);

/// Mesh described by the config, at the given uniform degree (generator) or as stored (file).
HpMesh build_mesh(const ProblemConfig& cfg, std::optional<int> degree = std::nullopt);

/// Mesh, material, loads and, in manufactured mode, the exact solution.
Problem build_problem(const ProblemConfig& cfg, std::optional<int> degree = std::nullopt);

std::string side_name(Side s);

} // namespace hpep::cli
