#include "doctest.h"

#include "hpep/hp_spaces.hpp"
#include "hpep/mesh.hpp"
#include "hpep/quadrature.hpp"
#include "support/generators.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

using namespace hpep;
using Eigen::Vector2d;

namespace {

// Monomial coefficients of the Legendre polynomial P_n (index = power), by the three-term recurrence.
Eigen::VectorXd legendre_coefficients(int n)
{
    Eigen::VectorXd p0 = Eigen::VectorXd::Zero(n + 1), p1 = Eigen::VectorXd::Zero(n + 1);
    p0[0] = 1.0;
    if (n == 0)
        return p0;
    p1[1] = 1.0;
    for (int k = 1; k < n; ++k) {
        Eigen::VectorXd next = Eigen::VectorXd::Zero(n + 1);
        for (int j = 0; j < n; ++j)
            next[j + 1] += (2.0 * k + 1.0) * p1[j];
        next -= k * p0;
        next /= (k + 1.0);
        p0 = p1;
        p1 = next;
    }
    return p1;
}

// Gauss rule from companion-matrix roots and moment equations; an oracle independent of
// the library's Jacobi-matrix construction.
std::pair<std::vector<double>, std::vector<double>> companion_rule(int n)
{
    const Eigen::VectorXd c = legendre_coefficients(n);
    Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(n, n);
    for (int i = 1; i < n; ++i)
        comp(i, i - 1) = 1.0;
    for (int i = 0; i < n; ++i)
        comp(i, n - 1) = -c[i] / c[n];
    Eigen::EigenSolver<Eigen::MatrixXd> es(comp);
    std::vector<double> x(n);
    for (int i = 0; i < n; ++i)
        x[i] = es.eigenvalues()[i].real();
    std::sort(x.begin(), x.end());
    Eigen::MatrixXd v(n, n);
    Eigen::VectorXd mom(n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i)
            v(j, i) = std::pow(x[i], j);
        mom[j] = (j % 2 == 0) ? 2.0 / (j + 1) : 0.0;
    }
    const Eigen::VectorXd w = v.colPivHouseholderQr().solve(mom);
    return {x, std::vector<double>(w.data(), w.data() + n)};
}

double monomial_integral(int k) { return (k % 2 == 0) ? 2.0 / (k + 1) : 0.0; }

HpMesh single_element(const std::array<Vector2d, 4>& c, int degree)
{
    return HpMesh({c[0], c[1], c[2], c[3]}, {QuadElement{{0, 1, 2, 3}, degree}},
                  {BoundaryEdge{0, 3, BoundaryTag::Dirichlet}});
}

} // namespace

TEST_CASE("one-point rule is the midpoint rule")
{
    const auto r = gauss_rule(1, 1);
    REQUIRE(r.size() == 1);
    CHECK(r.points[0].x() == 0.0);
    CHECK(r.weights[0] == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("two-point rule matches the companion-matrix construction")
{
    const auto r = gauss_rule(2, 1);
    const auto [x, w] = companion_rule(2);
    REQUIRE(r.size() == 2);
    for (int i = 0; i < 2; ++i) {
        CHECK(r.points[i].x() == doctest::Approx(x[i]).epsilon(1e-14));
        CHECK(r.weights[i] == doctest::Approx(w[i]).epsilon(1e-14));
    }
    CHECK(std::abs(r.points[1].x() - 1.0 / std::sqrt(3.0)) < 1e-15);
    CHECK(r.weights[0] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("rules up to eight points agree with the companion-matrix oracle")
{
    for (int n = 1; n <= 8; ++n) {
        const auto r = gauss_rule(n, 1);
        const auto [x, w] = companion_rule(n);
        double wsum = 0.0;
        for (int i = 0; i < n; ++i) {
            CHECK(std::abs(r.points[i].x() - x[i]) < 1e-10);
            CHECK(std::abs(r.weights[i] - w[i]) < 1e-10);
            CHECK(r.weights[i] > 0.0);
            wsum += r.weights[i];
        }
        CHECK(wsum == doctest::Approx(2.0).epsilon(1e-14));
    }
}

TEST_CASE("two-dimensional rule integrates x^2 y^2 to 4/9")
{
    const auto r = gauss_rule(2, 2);
    REQUIRE(r.size() == 4);
    double s = 0.0, wsum = 0.0;
    for (std::size_t k = 0; k < r.size(); ++k) {
        s += r.weights[k] * r.points[k].x() * r.points[k].x() * r.points[k].y() * r.points[k].y();
        wsum += r.weights[k];
    }
    CHECK(s == doctest::Approx(4.0 / 9.0).epsilon(1e-14));
    CHECK(wsum == doctest::Approx(4.0).epsilon(1e-14));
}

TEST_CASE("property: random polynomials of degree 2p-1 per variable are integrated exactly")
{
    auto g = testsupport::rng(1234);
    for (int p = 1; p <= 10; ++p) {
        const int deg = 2 * p - 1;
        for (int trial = 0; trial < 5; ++trial) {
            Eigen::MatrixXd c(deg + 1, deg + 1);
            for (int i = 0; i <= deg; ++i)
                for (int j = 0; j <= deg; ++j)
                    c(i, j) = testsupport::uniform(g);
            double exact = 0.0, scale = 0.0;
            for (int i = 0; i <= deg; ++i)
                for (int j = 0; j <= deg; ++j) {
                    exact += c(i, j) * monomial_integral(i) * monomial_integral(j);
                    scale += std::abs(c(i, j)) * 4.0;
                }
            const auto r = gauss_rule(p, 2);
            double q = 0.0;
            for (std::size_t k = 0; k < r.size(); ++k) {
                double v = 0.0;
                for (int i = 0; i <= deg; ++i)
                    for (int j = 0; j <= deg; ++j)
                        v += c(i, j) * std::pow(r.points[k].x(), i) * std::pow(r.points[k].y(), j);
                q += r.weights[k] * v;
            }
            CHECK(std::abs(q - exact) <= 1e-12 * std::max(1.0, scale));
        }
    }
}

TEST_CASE("Q_hp of a constant is the element area")
{
    auto g = testsupport::rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        const std::array<Vector2d, 4> c{Vector2d(0, 0), Vector2d(1 + testsupport::uniform(g, 0, 0.5), 0.1),
                                        Vector2d(1.2, 1.1 + testsupport::uniform(g, 0, 0.5)),
                                        Vector2d(testsupport::uniform(g, -0.2, 0.2), 1)};
        for (int p = 1; p <= 4; ++p) {
            const auto m = single_element(c, p);
            const double q = qhp_local(m, 0, [](const Vector2d&) { return 1.0; });
            CHECK(std::abs(q - m.area(0)) < 1e-13);
            // Shoelace area as independent reference.
            double shoelace = 0.0;
            for (int k = 0; k < 4; ++k)
                shoelace += c[k].x() * c[(k + 1) % 4].y() - c[(k + 1) % 4].x() * c[k].y();
            CHECK(std::abs(q - 0.5 * shoelace) < 1e-13);
        }
    }
}

TEST_CASE("degree-one Q_hp evaluates at the mapped centre")
{
    const std::array<Vector2d, 4> c{Vector2d(0, 0), Vector2d(2, 0), Vector2d(2.5, 1.5), Vector2d(0, 1)};
    const auto m = single_element(c, 1);
    const Vector2d centre = m.geometry(0).map(Vector2d(0, 0));
    const double q = qhp_local(m, 0, [](const Vector2d& x) { return x.x() * x.x() + x.y(); });
    CHECK(q == doctest::Approx(m.area(0) * (centre.x() * centre.x() + centre.y())).epsilon(1e-14));
}

TEST_CASE("global Q_hp: unit measure, additivity under refinement, exactness for linear fields")
{
    const auto one = [](const Vector2d&) { return 1.0; };
    const auto m = unit_square(3, 1);
    CHECK(qhp_global(m, one) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(qhp_global(refine_uniform(m), one) == doctest::Approx(qhp_global(m, one)).epsilon(1e-14));

    // Affine (parallelogram) mesh with p >= 2: integral of 1 + 2x - 3y over the parallelogram.
    const Vector2d a(2, 0.5), b(0.5, 1.5);
    const HpMesh par = HpMesh({Vector2d(0, 0), a, a + b, b}, {QuadElement{{0, 1, 2, 3}, 2}},
                              {BoundaryEdge{0, 3, BoundaryTag::Dirichlet}});
    const auto refined = refine_uniform(refine_uniform(par));
    const double area = a.x() * b.y() - a.y() * b.x();
    const Vector2d centroid = 0.5 * (a + b);
    const double exact = area * (1 + 2 * centroid.x() - 3 * centroid.y());
    const double q = qhp_global(refined, [](const Vector2d& x) { return 1 + 2 * x.x() - 3 * x.y(); });
    CHECK(std::abs(q - exact) < 1e-13 * std::max(1.0, std::abs(exact)));
}

TEST_CASE("property: Q_hp is non-negative for non-negative integrands")
{
    auto g = testsupport::rng(99);
    for (int trial = 0; trial < 10; ++trial) {
        const auto m = testsupport::distorted_square(3, 1 + trial % 3, 0.2, g);
        const double s = testsupport::uniform(g);
        for (std::size_t e = 0; e < m.num_elements(); ++e)
            CHECK(qhp_local(m, e, [s](const Vector2d& x) { return std::abs(std::sin(5 * x.x() + s) * x.y()); }) >= 0.0);
    }
}

TEST_CASE("Q_hp of a pointwise Frobenius norm reduces to a weighted sum of nodal norms")
{
    auto g = testsupport::rng(31);
    const auto m = testsupport::distorted_square(2, 3, 0.2, g);
    for (std::size_t e = 0; e < m.num_elements(); ++e) {
        const int p = m.degree(e);
        const auto& basis = gauss_lagrange(p);
        Eigen::MatrixXd coeff(basis.size(), 2);
        for (int k = 0; k < basis.size(); ++k)
            coeff.row(k) = Eigen::RowVector2d(testsupport::uniform(g), testsupport::uniform(g));
        const auto geo = m.geometry(e);
        const double q = qhp_local(m, e, [&](const Vector2d& x) {
            const auto xh = geo.inverse(x);
            REQUIRE(xh.has_value());
            Eigen::VectorXd vals;
            basis.eval(*xh, vals);
            return (vals.transpose() * coeff).norm();
        });
        const auto rule = gauss_rule(p, 2);
        double expected = 0.0;
        for (std::size_t k = 0; k < rule.size(); ++k)
            expected += rule.weights[k] * geo.jacobian_det(rule.points[k]) * coeff.row(k).norm();
        CHECK(q == doctest::Approx(expected).epsilon(1e-10));
    }
}
