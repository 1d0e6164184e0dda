#pragma once

#include "hpep/cli/config.hpp"

#include <string>
#include <vector>

namespace hpep::cli {

struct GroupResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Group names in execution order: quadrature, geometry, biorth, jacobian, complementarity, lambda.
const std::vector<std::string>& check_group_names();

/// Runs the selected groups (all when `groups` is empty). Throws ConfigError for unknown names.
/// Results depend only on the config, including its seed.
std::vector<GroupResult> run_checks(const ProblemConfig& cfg, const std::vector<std::string>& groups);

} // namespace hpep::cli
