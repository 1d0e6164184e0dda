#include "doctest.h"

#include "hpep/analysis.hpp"
#include "hpep/errors.hpp"
#include "hpep/problems.hpp"
#include "hpep/solver.hpp"
#include "support/elasticity_oracle.hpp"
#include "support/generators.hpp"

#include <cmath>
#include <sstream>

using namespace hpep;
using Eigen::Vector2d;

namespace {

Eigen::Vector2d v2(double a, double b) { return Vector2d(a, b); }

struct Bench {
    std::shared_ptr<const DofSystem> dofs;
    SaddleSystem sys;
};

Bench make_bench(const BenchmarkSpec& spec = {})
{
    const Problem p = plastic_benchmark(spec);
    auto dofs = std::make_shared<const DofSystem>(p.mesh, p.material.yield_sigma_y);
    return {dofs, assemble_blocks(*dofs, p.material, p.loads)};
}

// Finite-difference Jacobian of chi with respect to (q, mu).
Eigen::MatrixXd chi_fd(const Eigen::Vector2d& q, const Eigen::Vector2d& mu, double sigma, double rho, double h)
{
    Eigen::MatrixXd J(2, 4);
    for (int j = 0; j < 4; ++j) {
        Eigen::Vector2d qp = q, qm = q, mp = mu, mm = mu;
        if (j < 2) {
            qp[j] += h;
            qm[j] -= h;
        } else {
            mp[j - 2] += h;
            mm[j - 2] -= h;
        }
        J.col(j) = (chi(qp, mp, sigma, rho) - chi(qm, mm, sigma, rho)) / (2 * h);
    }
    return J;
}

} // namespace

TEST_CASE("chi examples")
{
    CHECK(chi(v2(0, 0), v2(0.3, -0.4), 1.0, 1.0).norm() == 0.0);
    const Eigen::Vector2d q(0.7, -0.2);
    CHECK((chi(q, v2(0, 0), 1.5, 2.0) - (-1.5 * 2.0 * q)).norm() < 1e-15);
    CHECK((chi(v2(0, 0), v2(2, 0), 1.0, 1.0) - v2(2, 0)).norm() < 1e-15);
}

TEST_CASE("chi Jacobian: inactive branch, kink selection, and finite differences")
{
    const auto deep = chi_subdifferential(v2(0.01, 0.02), v2(0.1, -0.1), 1.0, 3.0);
    CHECK_FALSE(deep.active);
    CHECK((deep.dq + 3.0 * Eigen::Matrix2d::Identity()).norm() < 1e-15);
    CHECK(deep.dmu.norm() == 0.0);

    // |mu + rho q| = sigma exactly.
    const Eigen::Vector2d q(0.0, 0.0), mu(0.6, 0.8);
    const auto kink_in = chi_subdifferential(q, mu, 1.0, 1.0, KinkBranch::Inactive);
    CHECK_FALSE(kink_in.active);
    CHECK((kink_in.dq + Eigen::Matrix2d::Identity()).norm() < 1e-15);
    CHECK(kink_in.dmu.norm() == 0.0);
    const auto kink_act = chi_subdifferential(q, mu, 1.0, 1.0, KinkBranch::Active);
    CHECK(kink_act.active);
    CHECK_FALSE(is_active(q, mu, 1.0, 1.0, KinkBranch::Inactive));
    CHECK(is_active(q, mu, 1.0, 1.0, KinkBranch::Active));

    auto g = testsupport::rng(321);
    int checked = 0;
    for (double rho : {0.01, 1.0, 100.0})
        for (int trial = 0; trial < 100; ++trial) {
            const double sigma = testsupport::uniform(g, 0.5, 2.0);
            const Eigen::Vector2d qq = testsupport::random_vector(g, 2, 2.0 / rho);
            const Eigen::Vector2d mm = testsupport::random_vector(g, 2, 2.0);
            const double z = (mm + rho * qq).norm();
            if (std::abs(z - sigma) < 1e-3)
                continue; // stay away from the kink so central differences are valid
            const auto J = chi_subdifferential(qq, mm, sigma, rho);
            Eigen::MatrixXd an(2, 4);
            an << J.dq, J.dmu;
            const Eigen::MatrixXd fd = chi_fd(qq, mm, sigma, rho, 1e-6);
            CHECK((an - fd).norm() <= 1e-5 * std::max(1.0, an.norm()));
            ++checked;
        }
    CHECK(checked > 250);
}

TEST_CASE("property: NCP roots are exactly the complementary pairs")
{
    auto g = testsupport::rng(77);
    for (double rho : {0.01, 1.0, 100.0})
        for (int trial = 0; trial < 300; ++trial) {
            const double sigma = testsupport::uniform(g, 0.2, 3.0);
            Eigen::Vector2d dir = testsupport::random_vector(g, 2);
            dir.normalize();
            // Plastic pair: lambda on the sphere, p a non-negative multiple of lambda.
            const Eigen::Vector2d lam = sigma * dir;
            const Eigen::Vector2d p = testsupport::uniform(g, 0.0, 5.0) * lam;
            CHECK(chi(p, lam, sigma, rho).norm() <= 1e-12 * std::max(1.0, sigma * sigma * (1 + rho * 5)));
            // Elastic pair: p = 0 and lambda inside the ball.
            const Eigen::Vector2d inner = testsupport::uniform(g, 0.0, 0.999) * sigma * dir;
            CHECK(chi(Eigen::Vector2d::Zero(), inner, sigma, rho).norm() == 0.0);
            // Violations: infeasible multiplier, anti-parallel strain, plastic strain inside the ball.
            CHECK(chi(Eigen::Vector2d::Zero(), 1.2 * lam, sigma, rho).norm() > 1e-8);
            CHECK(chi(-0.5 * lam, lam, sigma, rho).norm() > 1e-8);
            CHECK(chi(0.3 * dir, 0.5 * lam, sigma, rho).norm() > 1e-8);
        }
}

TEST_CASE("residual F: zero state and affinity of the linear rows")
{
    const Bench b = make_bench({4, 1});
    const auto& sys = b.sys;
    const NewtonState z = NewtonState::zeros(sys.u_size(), sys.q_size());
    const Eigen::VectorXd F0 = evaluate_F(sys, b.dofs->sigma_weights(), z, 1.0);
    REQUIRE(F0.size() == static_cast<Eigen::Index>(sys.u_size() + 2 * sys.q_size()));
    CHECK((F0.head(static_cast<Eigen::Index>(sys.u_size())) - sys.l).norm() == 0.0);
    CHECK(F0.tail(static_cast<Eigen::Index>(2 * sys.q_size())).norm() == 0.0);

    auto g = testsupport::rng(5);
    const auto rnd = [&] {
        return NewtonState{testsupport::random_vector(g, static_cast<Eigen::Index>(sys.u_size())),
                           testsupport::random_vector(g, static_cast<Eigen::Index>(sys.q_size())),
                           testsupport::random_vector(g, static_cast<Eigen::Index>(sys.q_size()))};
    };
    const NewtonState s1 = rnd(), s2 = rnd();
    const NewtonState sum{s1.a + s2.a, s1.b + s2.b, s1.c + s2.c};
    const auto K = static_cast<Eigen::Index>(sys.K());
    const Eigen::VectorXd lin = evaluate_F(sys, b.dofs->sigma_weights(), sum, 1.0).head(K) -
                                evaluate_F(sys, b.dofs->sigma_weights(), s1, 1.0).head(K) -
                                evaluate_F(sys, b.dofs->sigma_weights(), s2, 1.0).head(K) + F0.head(K);
    CHECK(lin.norm() <= 1e-12 * std::max(1.0, F0.norm()));
}

TEST_CASE("Newton matrix matches finite differences of F away from kinks")
{
    const Bench b = make_bench({3, 2});
    const auto& sys = b.sys;
    const Eigen::VectorXd& sigma = b.dofs->sigma_weights();
    auto g = testsupport::rng(17);
    NewtonState s{testsupport::random_vector(g, static_cast<Eigen::Index>(sys.u_size()), 0.01),
                  testsupport::random_vector(g, static_cast<Eigen::Index>(sys.q_size()), 0.5),
                  testsupport::random_vector(g, static_cast<Eigen::Index>(sys.q_size()), 1.5)};
    const Eigen::MatrixXd H = newton_matrix(sys, sigma, s, 1.0, KinkBranch::Inactive).to_dense();
    const double h = 1e-6;
    const auto n = static_cast<Eigen::Index>(sys.u_size() + 2 * sys.q_size());
    Eigen::MatrixXd fd(n, n);
    const auto U = static_cast<Eigen::Index>(sys.u_size()), Q = static_cast<Eigen::Index>(sys.q_size());
    for (Eigen::Index j = 0; j < n; ++j) {
        NewtonState p = s, m = s;
        auto bump = [&](NewtonState& t, double d) {
            if (j < U)
                t.a[j] += d;
            else if (j < U + Q)
                t.b[j - U] += d;
            else
                t.c[j - U - Q] += d;
        };
        bump(p, h);
        bump(m, -h);
        fd.col(j) = (evaluate_F(sys, sigma, p, 1.0) - evaluate_F(sys, sigma, m, 1.0)) / (2 * h);
    }
    CHECK((H - fd).cwiseAbs().maxCoeff() <= 1e-5 * std::max(1.0, H.cwiseAbs().maxCoeff()));
}

TEST_CASE("zero load converges immediately with a zero state")
{
    const auto mesh = unit_square(3, 2);
    const DofSystem dofs(mesh, 1.0);
    const auto sys = assemble_blocks(dofs, MaterialLaw{}, LoadData::zero());
    std::ostringstream log;
    SolverConfig cfg;
    cfg.verbose = true;
    cfg.log = &log;
    const auto rep = newton_solve(sys, dofs.sigma_weights(), cfg);
    CHECK(rep.converged);
    CHECK(rep.iterations == 0);
    CHECK(rep.history.size() == 1);
    CHECK(rep.state.a.norm() == 0.0);
    CHECK(rep.state.b.norm() == 0.0);
    CHECK(rep.state.c.norm() == 0.0);
    std::istringstream in(log.str());
    int k;
    double r;
    std::size_t na, ni;
    REQUIRE(static_cast<bool>(in >> k >> r >> na >> ni));
    CHECK(k == 0);
    CHECK(r == 0.0);
    CHECK(na == 0);
    CHECK(ni == dofs.N());
}

TEST_CASE("elastic limit agrees with an independent elasticity solve")
{
    const int n = 6;
    const double load = 0.4;
    BenchmarkSpec spec;
    spec.n = n;
    spec.traction = Vector2d(0.1, load);
    spec.material.yield_sigma_y = 1e12 * load;
    const Problem p = plastic_benchmark(spec);
    const auto sol = solve_problem(p.mesh, p.material, p.loads, SolverConfig{});
    REQUIRE(sol.report.converged);
    CHECK(sol.report.iterations <= 3);
    CHECK(sol.report.state.b.cwiseAbs().maxCoeff() <= 1e-9);
    const auto cr = check_complementarity(sol.dofs->sigma_weights(), sol.report.state.b, sol.report.state.c);
    CHECK(cr.ok());
    CHECK(cr.n_on_sphere == 0);
    CHECK(cr.n_plastic == 0);

    const auto oracle = testsupport::solve_q1_elasticity(n, spec.material.lame_lambda, spec.material.lame_mu,
                                                         Vector2d::Zero(), spec.traction);
    double diff = 0.0, ref = 0.0;
    for (std::size_t e = 0; e < p.mesh.num_elements(); ++e)
        for (int c = 0; c < 4; ++c) {
            const Vector2d xh = lobatto_lagrange(1).node(c);
            const Vector2d x = p.mesh.geometry(e).map(xh);
            const int i = static_cast<int>(std::lround(x.x() * n)), j = static_cast<int>(std::lround(x.y() * n));
            const Vector2d u = sol.dofs->displacement().value(e, xh, sol.report.state.a);
            diff = std::max(diff, (u - oracle.nodal(i, j)).norm());
            ref = std::max(ref, oracle.nodal(i, j).norm());
        }
    CHECK(ref > 0.0);
    CHECK(diff <= 1e-10 * ref);
}

TEST_CASE("plastic benchmark: convergence, complementarity, rho robustness")
{
    const Bench b = make_bench();
    std::vector<int> counts;
    for (double rho : {0.01, 1.0, 100.0}) {
        SolverConfig cfg;
        cfg.rho = rho;
        const auto rep = newton_solve(b.sys, b.dofs->sigma_weights(), cfg);
        REQUIRE(rep.converged);
        CHECK(rep.residual <= cfg.tol);
        CHECK(rep.history.size() == static_cast<std::size_t>(rep.iterations + 1));
        counts.push_back(rep.iterations);
        const auto cr = check_complementarity(b.dofs->sigma_weights(), rep.state.b, rep.state.c);
        CHECK(cr.ok());
        CHECK(cr.n_plastic >= 1);
        CHECK(static_cast<double>(cr.n_on_sphere) >= 0.1 * static_cast<double>(b.dofs->N()));
        for (std::size_t i = 0; i < b.dofs->N(); ++i)
            CHECK(rep.state.c.segment<2>(static_cast<Eigen::Index>(2 * i)).norm() <= b.dofs->sigma_weights()[i] + 1e-9);
    }
    CHECK(*std::max_element(counts.begin(), counts.end()) - *std::min_element(counts.begin(), counts.end()) <= 3);
}

TEST_CASE("plastic benchmark: superlinear decay at the end of the default run")
{
    const Bench b = make_bench();
    const auto rep = newton_solve(b.sys, b.dofs->sigma_weights(), SolverConfig{});
    REQUIRE(rep.converged);
    REQUIRE(rep.history.size() >= 4);
    const auto& h = rep.history;
    const std::size_t m = h.size();
    const double r1 = h[m - 3].residual / h[m - 4].residual;
    const double r2 = h[m - 2].residual / h[m - 3].residual;
    const double r3 = h[m - 1].residual / h[m - 2].residual;
    CHECK(r1 > r2);
    CHECK(r2 > r3);
    CHECK(r3 <= 0.1);
}

TEST_CASE("iteration limit is reported, not thrown")
{
    const Bench b = make_bench();
    SolverConfig cfg;
    cfg.max_iter = 1;
    const auto rep = newton_solve(b.sys, b.dofs->sigma_weights(), cfg);
    CHECK_FALSE(rep.converged);
    CHECK(rep.iterations == 1);
    CHECK(rep.residual > cfg.tol);
    CHECK_FALSE(rep.message.empty());
}

TEST_CASE("singular Newton matrix raises a singular-system error")
{
    const Bench b = make_bench({2, 1});
    SaddleSystem broken = b.sys;
    broken.A = SparseMatrix(broken.A.rows(), broken.A.cols());
    broken.l = Eigen::VectorXd::Ones(broken.l.size());
    CHECK_THROWS_AS(newton_solve(broken, b.dofs->sigma_weights(), SolverConfig{}), SingularMatrixError);
}

TEST_CASE("invalid solver configuration is rejected")
{
    SolverConfig c;
    c.rho = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = SolverConfig{};
    c.tol = -1.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = SolverConfig{};
    c.max_iter = -2;
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("damped iteration reaches the same solution")
{
    const Bench b = make_bench({4, 1});
    const auto plain = newton_solve(b.sys, b.dofs->sigma_weights(), SolverConfig{});
    SolverConfig cfg;
    cfg.damping = true;
    const auto damped = newton_solve(b.sys, b.dofs->sigma_weights(), cfg);
    REQUIRE(plain.converged);
    REQUIRE(damped.converged);
    CHECK((plain.state.a - damped.state.a).norm() <= 1e-8 * plain.state.a.norm());
}

TEST_CASE("property: solution depends Lipschitz-continuously on the load")
{
    BenchmarkSpec spec;
    spec.n = 4;
    const Problem base = plastic_benchmark(spec);
    const auto s0 = solve_problem(base.mesh, base.material, base.loads, SolverConfig{});
    REQUIRE(s0.report.converged);
    std::vector<double> ratios;
    for (double eps : {1e-1, 1e-2, 1e-3, 1e-4}) {
        BenchmarkSpec pert = spec;
        pert.traction += eps * Vector2d(0.3, -0.5);
        const Problem pp = plastic_benchmark(pert);
        const auto s1 = solve_problem(pp.mesh, pp.material, pp.loads, SolverConfig{});
        REQUIRE(s1.report.converged);
        const double du = std::sqrt((s1.report.state.a - s0.report.state.a).squaredNorm() +
                                    (s1.report.state.b - s0.report.state.b).squaredNorm());
        const double dl = (s1.system.l - s0.system.l).norm();
        REQUIRE(dl > 0.0);
        ratios.push_back(du / dl);
    }
    const double first = ratios.front();
    for (double r : ratios) {
        CHECK(std::isfinite(r));
        CHECK(r <= 10.0 * first);
    }
}
