#pragma once

#include "hpep/analysis.hpp"

#include <string>
#include <vector>

namespace hpep {

/// Names of the smooth displacement fields available for manufactured elastic problems.
/// Every field vanishes on x = 0 so the left edge can carry the homogeneous Dirichlet condition.
std::vector<std::string> manufactured_names();

/// Exact (u, grad u, p = 0, lambda = dev C eps(u)); throws ConfigError for unknown names.
ExactSolution manufactured_solution(const std::string& name, const MaterialLaw& material);

/// f = -div C eps(u) and the traction C eps(u) n, applied on every non-Dirichlet boundary edge.
LoadData manufactured_loads(const std::string& name, const MaterialLaw& material);

Problem manufactured_problem(const std::string& name, HpMesh mesh, const MaterialLaw& material);

/// Unit square clamped on the left with a constant traction on the right edge.
/// The defaults give a shear load under which about an eighth of the 8x8 nodes yield.
struct BenchmarkSpec {
    int n = 8;
    int degree = 1;
    Eigen::Vector2d traction{0.0, 0.4};
    MaterialLaw material{60.0, 30.0, 15.0, 1.0};
};

Problem plastic_benchmark(const BenchmarkSpec& spec);

} // namespace hpep
