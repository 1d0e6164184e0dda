#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <vector>

namespace hpep {

class HpMesh;

struct GaussRule1D {
    std::vector<double> points;
    std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1] (Golub-Welsch plus one Newton polish).
GaussRule1D gauss_legendre(int n);

/// Gauss-Lobatto-Legendre points of a degree-p Lagrange basis: p + 1 points including +-1.
std::vector<double> gauss_lobatto_points(int degree);

/// Legendre polynomial P_n and its derivative at x.
std::pair<double, double> legendre(int n, double x);

/// Tensor-product Gauss rule with p points per direction on [-1, 1]^d, d in {1, 2}.
/// Point index is k = i_x + p * i_y. For d = 1 the second coordinate is zero.
struct GaussRule {
    int dim = 2;
    std::vector<Eigen::Vector2d> points;
    std::vector<double> weights;

    std::size_t size() const { return points.size(); }
};

GaussRule gauss_rule(int p, int dim);

using ScalarField = std::function<double(const Eigen::Vector2d&)>;

/// Mesh-dependent quadrature on one element: midpoint rule times |T| for p_T = 1,
/// the p_T-point tensor Gauss rule otherwise.
double qhp_local(const HpMesh& mesh, std::size_t element, const ScalarField& f);
double qhp_global(const HpMesh& mesh, const ScalarField& f);

} // namespace hpep
