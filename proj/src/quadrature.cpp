#include "hpep/quadrature.hpp"

#include "hpep/errors.hpp"
#include "hpep/mesh.hpp"

#include <cmath>
#include <numbers>

namespace hpep {

std::pair<double, double> legendre(int n, double x)
{
    double p0 = 1.0, p1 = x;
    if (n == 0)
        return {1.0, 0.0};
    for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    // P_n' from the standard recurrence; the endpoint form avoids the 1 - x^2 division.
    double dp;
    if (std::abs(std::abs(x) - 1.0) < 1e-15)
        dp = 0.5 * n * (n + 1.0) * std::pow(x, n + 1);
    else
        dp = n * (x * p1 - p0) / (x * x - 1.0);
    return {p1, dp};
}

GaussRule1D gauss_legendre(int n)
{
    if (n < 1)
        throw Error("gauss_legendre: need at least one point");
    GaussRule1D rule;
    if (n == 1) {
        rule.points = {0.0};
        rule.weights = {2.0};
        return rule;
    }
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) {
        const double beta = k / std::sqrt(4.0 * k * k - 1.0);
        jacobi(k, k - 1) = jacobi(k - 1, k) = beta;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
    rule.points.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        double x = eig.eigenvalues()[i];
        auto [p, dp] = legendre(n, x);
        x -= p / dp;
        dp = legendre(n, x).second;
        rule.points[i] = x;
        rule.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    // Enforce exact symmetry of the rule.
    for (int i = 0; i < n / 2; ++i) {
        const double x = 0.5 * (rule.points[n - 1 - i] - rule.points[i]);
        const double w = 0.5 * (rule.weights[n - 1 - i] + rule.weights[i]);
        rule.points[i] = -x;
        rule.points[n - 1 - i] = x;
        rule.weights[i] = rule.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1)
        rule.points[n / 2] = 0.0;
    return rule;
}

std::vector<double> gauss_lobatto_points(int degree)
{
    if (degree < 1)
        throw Error("gauss_lobatto_points: degree must be >= 1");
    std::vector<double> x(degree + 1);
    x.front() = -1.0;
    x.back() = 1.0;
    // Interior points are the roots of P_p'.
    for (int j = 1; j < degree; ++j) {
        double t = -std::cos(std::numbers::pi * j / degree);
        for (int it = 0; it < 100; ++it) {
            // Newton on P_p' using P_p'' = (2x P_p' - p(p+1) P_p) / (1 - x^2).
            auto [p, dp] = legendre(degree, t);
            const double ddp = (2.0 * t * dp - degree * (degree + 1.0) * p) / (1.0 - t * t);
            const double step = dp / ddp;
            t -= step;
            if (std::abs(step) < 1e-16)
                break;
        }
        x[j] = t;
    }
    for (int j = 0; j < (degree + 1) / 2; ++j) {
        const double s = 0.5 * (x[degree - j] - x[j]);
        x[j] = -s;
        x[degree - j] = s;
    }
    if (degree % 2 == 0)
        x[degree / 2] = 0.0;
    return x;
}

GaussRule gauss_rule(int p, int dim)
{
    if (p < 1)
        throw Error("gauss_rule: degree must be >= 1");
    if (dim != 1 && dim != 2)
        throw UnsupportedDimensionError("gauss_rule: dimension must be 1 or 2");
    const GaussRule1D g = gauss_legendre(p);
    GaussRule rule;
    rule.dim = dim;
    if (dim == 1) {
        for (int i = 0; i < p; ++i) {
            rule.points.emplace_back(g.points[i], 0.0);
            rule.weights.push_back(g.weights[i]);
        }
        return rule;
    }
    for (int iy = 0; iy < p; ++iy)
        for (int ix = 0; ix < p; ++ix) {
            rule.points.emplace_back(g.points[ix], g.points[iy]);
            rule.weights.push_back(g.weights[ix] * g.weights[iy]);
        }
    return rule;
}

double qhp_local(const HpMesh& mesh, std::size_t element, const ScalarField& f)
{
    const GeometryMap geo = mesh.geometry(element);
    const int p = mesh.degree(element);
    if (p == 1)
        return mesh.area(element) * f(geo.map(Eigen::Vector2d::Zero()));
    const GaussRule rule = gauss_rule(p, 2);
    double sum = 0.0;
    for (std::size_t k = 0; k < rule.size(); ++k)
        sum += rule.weights[k] * std::abs(geo.jacobian_det(rule.points[k])) * f(geo.map(rule.points[k]));
    return sum;
}

double qhp_global(const HpMesh& mesh, const ScalarField& f)
{
    double sum = 0.0;
    for (std::size_t e = 0; e < mesh.num_elements(); ++e)
        sum += qhp_local(mesh, e, f);
    return sum;
}

} // namespace hpep
