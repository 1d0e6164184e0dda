#pragma once

// Stand-alone bilinear (Q1) linear-elasticity solver on a structured n x n unit square with the
// left side clamped. It shares no code with the library: its own shape functions, its own
// two-point Gauss rule, its own numbering and a dense solve.

#include <Eigen/Dense>

#include <array>
#include <cmath>

namespace testsupport {

struct Q1Oracle {
    int n;
    double lambda, mu;
    Eigen::VectorXd u; // 2 * node + k, node = i + (n + 1) * j, including clamped nodes (zero)

    Eigen::Vector2d nodal(int i, int j) const
    {
        const int v = i + (n + 1) * j;
        return {u[2 * v], u[2 * v + 1]};
    }
};

namespace detail {

// Shape function a in {0,1,2,3} at corners (-1,-1), (1,-1), (1,1), (-1,1).
inline void q1_shape(double xi, double eta, std::array<double, 4>& N, std::array<Eigen::Vector2d, 4>& dN)
{
    const double sx[4] = {-1, 1, 1, -1}, sy[4] = {-1, -1, 1, 1};
    for (int a = 0; a < 4; ++a) {
        N[a] = 0.25 * (1 + sx[a] * xi) * (1 + sy[a] * eta);
        dN[a] = Eigen::Vector2d(0.25 * sx[a] * (1 + sy[a] * eta), 0.25 * sy[a] * (1 + sx[a] * xi));
    }
}

} // namespace detail

/// Solves -div(C eps(u)) = f with u = 0 on x = 0, traction t on x = 1 and zero traction on
/// the top and bottom sides. f and t are constants.
inline Q1Oracle solve_q1_elasticity(int n, double lambda, double mu, const Eigen::Vector2d& f,
                                    const Eigen::Vector2d& t)
{
    const int nn = (n + 1) * (n + 1);
    const double h = 1.0 / n;
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(2 * nn, 2 * nn);
    Eigen::VectorXd F = Eigen::VectorXd::Zero(2 * nn);
    const double g = 1.0 / std::sqrt(3.0);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const int v[4] = {i + (n + 1) * j, i + 1 + (n + 1) * j, i + 1 + (n + 1) * (j + 1), i + (n + 1) * (j + 1)};
            for (double xi : {-g, g})
                for (double eta : {-g, g}) {
                    std::array<double, 4> N;
                    std::array<Eigen::Vector2d, 4> dN;
                    detail::q1_shape(xi, eta, N, dN);
                    const double w = h * h / 4; // unit weights times det
                    for (int a = 0; a < 4; ++a) {
                        const Eigen::Vector2d ga = dN[a] * (2.0 / h);
                        for (int k = 0; k < 2; ++k)
                            F[2 * v[a] + k] += w * N[a] * f[k];
                        for (int b = 0; b < 4; ++b) {
                            const Eigen::Vector2d gb = dN[b] * (2.0 / h);
                            // K_{(a,k),(b,l)} = lambda d_k N_a d_l N_b + mu (delta_kl grad N_a . grad N_b + d_l N_a d_k N_b)
                            for (int k = 0; k < 2; ++k)
                                for (int l = 0; l < 2; ++l) {
                                    double s = lambda * ga[k] * gb[l] + mu * ga[l] * gb[k];
                                    if (k == l)
                                        s += mu * ga.dot(gb);
                                    K(2 * v[a] + k, 2 * v[b] + l) += w * s;
                                }
                        }
                    }
                }
        }
    // Consistent load of a constant traction along the right side.
    for (int j = 0; j < n; ++j)
        for (int v : {n + (n + 1) * j, n + (n + 1) * (j + 1)})
            for (int k = 0; k < 2; ++k)
                F[2 * v + k] += 0.5 * h * t[k];
    // Clamp the left side by replacing rows and columns with identity.
    for (int j = 0; j <= n; ++j) {
        const int v = (n + 1) * j;
        for (int k = 0; k < 2; ++k) {
            const int r = 2 * v + k;
            K.row(r).setZero();
            K.col(r).setZero();
            K(r, r) = 1.0;
            F[r] = 0.0;
        }
    }
    Q1Oracle out{n, lambda, mu, K.ldlt().solve(F)};
    return out;
}

} // namespace testsupport
