#include "doctest.h"

#include "hpep/analysis.hpp"
#include "hpep/errors.hpp"
#include "hpep/problems.hpp"
#include "hpep/quadrature.hpp"
#include "support/generators.hpp"

#include <cmath>
#include <limits>
#include <sstream>

using namespace hpep;
using Eigen::Vector2d;

namespace {

DevTensor dev2(double a, double b)
{
    DevCoeffs c(2);
    c << a, b;
    return DevTensor(2, c);
}

LevelSolution solve_bench(const BenchmarkSpec& spec = {})
{
    const Problem p = plastic_benchmark(spec);
    return solve_problem(p.mesh, p.material, p.loads, SolverConfig{});
}

LevelSolution solve_elastic(int n = 4)
{
    BenchmarkSpec spec;
    spec.n = n;
    spec.material.yield_sigma_y = 1e12;
    return solve_bench(spec);
}

double rel_diff(const Eigen::VectorXd& a, const Eigen::VectorXd& b)
{
    return (a - b).norm() / std::max(b.norm(), std::numeric_limits<double>::min());
}

// Random feasible multiplier field: smooth direction field with magnitude in [0, sigma].
ElementTensorField random_feasible(std::mt19937_64& g, double sigma)
{
    const double a = testsupport::uniform(g, -3, 3), b = testsupport::uniform(g, -3, 3), c = testsupport::uniform(g, 0, 6);
    const double r = testsupport::uniform(g, 0.0, 1.0);
    return [=](std::size_t, const Vector2d&, const Vector2d& x) {
        const double th = a * x.x() + b * x.y() + c;
        const double m = sigma * r * (0.5 + 0.5 * std::sin(3 * x.x() - 2 * x.y() + c));
        return dev2(m * std::cos(th), m * std::sin(th));
    };
}

} // namespace

TEST_CASE("lambda recovery: zero data and agreement with the solver multiplier")
{
    const DofSystem dofs(unit_square(2, 2), 1.0);
    const Eigen::VectorXd zu = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dofs.u_size()));
    const Eigen::VectorXd zq = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dofs.q_size()));
    CHECK(recover_lambda(dofs, MaterialLaw{}, zu, zq).norm() == 0.0);

    for (const auto& sol : {solve_elastic(), solve_bench()}) {
        REQUIRE(sol.report.converged);
        const Eigen::VectorXd c_primal = sol.dofs->dual_to_primal(sol.report.state.c);
        CHECK(rel_diff(sol.fields.lambda(), c_primal) <= 1e-8);
        for (std::size_t i = 0; i < sol.dofs->N(); ++i)
            CHECK(sol.report.state.c.segment<2>(static_cast<Eigen::Index>(2 * i)).norm() <=
                  sol.dofs->sigma_weights()[i] + 1e-9);
    }
}

TEST_CASE("elastic limit: recovered multiplier is the projected elastic stress, strictly feasible")
{
    const auto sol = solve_elastic();
    const auto& dofs = *sol.dofs;
    const MaterialLaw m = plastic_benchmark({}).material;
    const Eigen::VectorXd direct = project_P_hp(dofs, [&](std::size_t e, const Vector2d& xh, const Vector2d&) {
        const Eigen::Matrix2d jt = dofs.mesh().geometry(e).jacobian(xh).inverse().transpose();
        const Eigen::Matrix2d g = dofs.displacement().gradient(e, xh, jt, sol.report.state.a);
        return deviator(apply_C(strain(g), m));
    });
    CHECK(rel_diff(sol.fields.lambda(), direct) <= 1e-10);
    for (std::size_t i = 0; i < dofs.N(); ++i)
        CHECK(sol.report.state.c.segment<2>(static_cast<Eigen::Index>(2 * i)).norm() < dofs.sigma_weights()[i]);
}

TEST_CASE("plasticity error: vanishing, distance form, infeasibility")
{
    const auto sol = solve_elastic();
    const auto& f = sol.fields;
    const double sy = 1e12;
    const ElementTensorField own = [&](std::size_t e, const Vector2d& xh, const Vector2d&) {
        return f.dofs().q_value(f.lambda(), QBasis::Primal, e, xh);
    };
    CHECK(std::abs(plasticity_error(own, f, sy)) < 1e-14);

    auto g = testsupport::rng(8);
    for (int trial = 0; trial < 5; ++trial) {
        // Bilinear candidate, so both rules integrate the squared distance exactly.
        const double a0 = testsupport::uniform(g, -0.3, 0.3), a1 = testsupport::uniform(g, -0.3, 0.3);
        const double b0 = testsupport::uniform(g, -0.3, 0.3), b1 = testsupport::uniform(g, -0.3, 0.3);
        const ElementTensorField mu = [=](std::size_t, const Vector2d&, const Vector2d& x) {
            return dev2(a0 + a1 * x.x() * x.y(), b0 + b1 * (x.x() - x.y()));
        };
        double dist = 0.0;
        for (std::size_t e = 0; e < f.dofs().mesh().num_elements(); ++e)
            for (const auto& qp : element_quadrature(f.dofs().mesh(), e, f.dofs().mesh().degree(e) + 4))
                dist += qp.weight * (mu(e, qp.xhat, qp.x) - f.dofs().q_value(f.lambda(), QBasis::Primal, e, qp.xhat))
                                        .coeffs()
                                        .squaredNorm();
        const double ep = plasticity_error(mu, f, sy);
        CHECK(ep >= 0.0);
        CHECK(ep == doctest::Approx(dist).epsilon(1e-9));
    }

    const ElementTensorField bad = [](std::size_t, const Vector2d&, const Vector2d&) { return dev2(2.0, 0.0); };
    CHECK_THROWS_AS(plasticity_error(bad, f, 1.0), FeasibilityError);
}

TEST_CASE("radial projection examples")
{
    const DofSystem dofs(unit_square(2, 1), 1.5);
    const auto shared = std::make_shared<const DofSystem>(dofs);
    const auto nq = static_cast<Eigen::Index>(dofs.q_size());
    const Eigen::VectorXd zu = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dofs.u_size()));
    const Eigen::VectorXd zq = Eigen::VectorXd::Zero(nq);
    const Vector2d xh(0.1, -0.3);

    const DiscreteFields zero(shared, zu, zq, zq);
    CHECK(project_mu_star(zero, 1.5)(0, xh, Vector2d::Zero()).norm() == 0.0);

    Eigen::VectorXd lam(nq);
    for (Eigen::Index i = 0; i < nq / 2; ++i) {
        lam[2 * i] = 2 * 1.5;
        lam[2 * i + 1] = 0.0;
    }
    const DiscreteFields big(shared, zu, zq, lam);
    const DevTensor ms = project_mu_star(big, 1.5)(1, xh, Vector2d::Zero());
    CHECK(ms[0] == doctest::Approx(1.5));
    CHECK(std::abs(ms[1]) < 1e-15);

    // lambda + p/2 inside the ball is returned unchanged.
    Eigen::VectorXd p(nq), l2(nq);
    for (Eigen::Index i = 0; i < nq / 2; ++i) {
        p.segment<2>(2 * i) = Vector2d(0.4, -0.2);
        l2.segment<2>(2 * i) = Vector2d(0.3, 0.5);
    }
    const DiscreteFields small(shared, zu, p, l2);
    const DevTensor mi = project_mu_star(small, 1.5)(2, xh, Vector2d::Zero());
    CHECK(mi[0] == doctest::Approx(0.5));
    CHECK(mi[1] == doctest::Approx(0.4));
}

TEST_CASE("property: the radial projection minimizes e_p over feasible multipliers")
{
    auto g = testsupport::rng(909);
    for (const auto& sol : {solve_bench(), solve_elastic()}) {
        REQUIRE(sol.report.converged);
        const double sy = sol.dofs->sigma_y();
        const auto star = project_mu_star(sol.fields, sy);
        const double best = plasticity_error(star, sol.fields, sy);
        for (int trial = 0; trial < 100; ++trial) {
            ElementTensorField mu;
            if (trial % 2 == 0) {
                mu = random_feasible(g, std::min(sy, 10.0));
            } else {
                // Perturbation of the minimizer, pulled back into the ball.
                const double s = testsupport::uniform(g, 1e-3, 0.5);
                const DevTensor shift = dev2(s * testsupport::uniform(g), s * testsupport::uniform(g));
                mu = [=](std::size_t e, const Vector2d& xh, const Vector2d& x) {
                    DevTensor v = star(e, xh, x) + shift;
                    const double n = v.norm();
                    if (n > sy)
                        v *= sy / n;
                    return v;
                };
            }
            CHECK(plasticity_error(mu, sol.fields, sy) - best >= -1e-12);
        }
    }
}

TEST_CASE("auxiliary problem: zero data and Galerkin residual")
{
    const DofSystem dofs(unit_square(2, 1), 1.0);
    const auto shared = std::make_shared<const DofSystem>(dofs);
    const Eigen::VectorXd zu = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dofs.u_size()));
    const Eigen::VectorXd zq = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dofs.q_size()));
    const MaterialLaw m{2.0, 1.0, 0.5, 1.0};
    const DiscreteFields zero(shared, zu, zq, zq);
    const auto z = solve_auxiliary(zero, m, LoadData::zero());
    CHECK(z.a().norm() == 0.0);
    CHECK(z.p().norm() == 0.0);
    CHECK(z.dofs().mesh().num_elements() == 16);
    CHECK(z.dofs().mesh().min_degree() == 2);

    // a((u*, p*), (v, q)) = l(v) - (lambda_N, q) for random discrete test pairs.
    auto g = testsupport::rng(4);
    const LoadData loads = LoadData::constant(Vector2d(0.3, -1.0), Vector2d(0.5, 0.2));
    for (bool with_lambda : {false, true}) {
        const Eigen::VectorXd lam = with_lambda ? testsupport::random_vector(g, static_cast<Eigen::Index>(dofs.q_size()))
                                                : zq;
        const DiscreteFields n(shared, zu, zq, lam);
        const auto aux = solve_auxiliary(n, m, loads);
        const DofSystem& fine = aux.dofs();
        const auto emb = embed_nested(fine.mesh(), dofs.mesh());
        for (int trial = 0; trial < 100; ++trial) {
            const Eigen::VectorXd v = testsupport::random_vector(g, static_cast<Eigen::Index>(fine.u_size()));
            const Eigen::VectorXd q = testsupport::random_vector(g, static_cast<Eigen::Index>(fine.q_size()));
            const double lhs = bilinear_a(fine, m, aux.a(), aux.p(), v, q);
            double lam_q = 0.0;
            for (std::size_t e = 0; e < fine.mesh().num_elements(); ++e)
                for (const auto& qp : element_quadrature(fine.mesh(), e, fine.mesh().degree(e) + 2)) {
                    const DevTensor lv =
                        dofs.q_value(lam, QBasis::Primal, emb[e].coarse_element, emb[e].apply(qp.xhat));
                    lam_q += qp.weight * lv.dot(fine.q_value(q, QBasis::Primal, e, qp.xhat));
                }
            const double rhs = linear_functional_l(fine, loads, v) - lam_q;
            CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, std::abs(rhs)));
        }
    }
}

TEST_CASE("norms: zero fields, Korn positivity, pair identity")
{
    const DofSystem dofs(unit_square(3, 2), 1.0);
    const auto shared = std::make_shared<const DofSystem>(dofs);
    const Eigen::VectorXd zu = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dofs.u_size()));
    const Eigen::VectorXd zq = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dofs.q_size()));
    const auto zn = energy_norms(DiscreteFields(shared, zu, zq, zq));
    CHECK(zn.pair == 0.0);
    CHECK(zn.lambda_l2 == 0.0);
    auto g = testsupport::rng(66);
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::VectorXd a = testsupport::random_vector(g, zu.size());
        const Eigen::VectorXd p = testsupport::random_vector(g, zq.size());
        const auto n = energy_norms(DiscreteFields(shared, a, p, zq));
        CHECK(n.u_semi > 0.0);
        CHECK(n.u_h1 >= n.u_semi);
        CHECK(n.pair * n.pair == doctest::Approx(n.u_h1 * n.u_h1 + n.q_l2 * n.q_l2).epsilon(1e-13));
    }
}

TEST_CASE("observed order and CSV format")
{
    CHECK(observed_order(1.0, 0.5, 1.0, 0.5) == doctest::Approx(1.0));
    CHECK(observed_order(1.0, 0.25, 0.2, 0.1) == doctest::Approx(2.0));
    ConvergenceStudy st;
    StudyLevel a;
    a.level = 0;
    a.h_max = 0.1;
    a.p_min = 1;
    a.ndof = 12;
    a.err_pair = 1.0 / 3.0;
    StudyLevel b = a;
    b.level = 1;
    b.order_pair = 0.95;
    st.levels = {a, b};
    std::ostringstream os;
    write_study_csv(os, st);
    std::istringstream in(os.str());
    std::string header, l0, l1;
    std::getline(in, header);
    std::getline(in, l0);
    std::getline(in, l1);
    CHECK(header == "level,h_max,p_min,ndof,err_pair,err_lambda,e_plast,aux_err,order_pair");
    CHECK(l0.back() == ',');
    CHECK(l0.find("0.33333333333333331") != std::string::npos);
    CHECK(l1.substr(l1.rfind(',') + 1) == "0.94999999999999996");
}

TEST_CASE("manufactured elastic study: first order for p = 1, second for p = 2")
{
    MaterialLaw m{1.0, 1.0, 1.0, 1e12};
    for (int p : {1, 2}) {
        const Problem prob = manufactured_problem("trig", unit_square(2, p), m);
        StudyOptions opt;
        opt.levels = 4;
        const auto st = run_convergence_study(prob, opt);
        REQUIRE(st.levels.size() == 4);
        CHECK(st.monotone);
        CHECK(std::isnan(st.levels[0].order_pair));
        for (const auto& lv : st.levels) {
            CHECK(lv.converged);
            CHECK(lv.err_pair >= 0.0);
            CHECK(lv.aux_err >= 0.0);
            CHECK(lv.e_plast >= -1e-14);
        }
        const double last = st.levels.back().order_pair;
        if (p == 1)
            CHECK(last >= 0.9);
        else
            CHECK(last == doctest::Approx(2.0).epsilon(0.1));
        CHECK(std::isinf(st.s));
    }
}

TEST_CASE("plastic benchmark against an overkill reference: monotone decrease")
{
    BenchmarkSpec spec;
    spec.n = 2;
    const Problem prob = plastic_benchmark(spec);
    StudyOptions opt;
    opt.levels = 3;
    opt.reference = ReferenceMode::Overkill;
    const auto st = run_convergence_study(prob, opt);
    REQUIRE(st.levels.size() == 3);
    CHECK(st.monotone);
    for (std::size_t k = 1; k < st.levels.size(); ++k) {
        CHECK(st.levels[k].err_pair < st.levels[k - 1].err_pair);
        CHECK(st.levels[k].aux_err < st.levels[k - 1].aux_err);
    }
}

TEST_CASE("property: pointwise Gauss-point bound matches the support-function characterization")
{
    auto g = testsupport::rng(1717);
    const auto mesh = testsupport::mixed_degree_square(2);
    const double sy = 1.3;
    const DofSystem dofs(mesh, sy);
    const auto nq = static_cast<Eigen::Index>(dofs.q_size());
    const auto pairing = [&](const Eigen::VectorXd& mu, const Eigen::VectorXd& q) {
        return qhp_global(mesh, [&](const Vector2d& x) {
            return eval_Qhp_field(dofs, mu, QBasis::Primal, x).dot(eval_Qhp_field(dofs, q, QBasis::Primal, x));
        });
    };
    const auto psi_hp = [&](const Eigen::VectorXd& q) {
        return qhp_global(mesh, [&](const Vector2d& x) { return sy * eval_Qhp_field(dofs, q, QBasis::Primal, x).norm(); });
    };
    for (int trial = 0; trial < 10; ++trial) {
        Eigen::VectorXd mu = testsupport::random_vector(g, nq);
        for (std::size_t i = 0; i < dofs.N(); ++i) {
            auto s = mu.segment<2>(static_cast<Eigen::Index>(2 * i));
            s *= testsupport::uniform(g, 0.0, sy) / s.norm();
        }
        for (int k = 0; k < 100; ++k) {
            const Eigen::VectorXd q = testsupport::random_vector(g, nq);
            CHECK(pairing(mu, q) <= psi_hp(q) + 1e-10);
        }
        // Violate the bound at one node; a random test field concentrated there detects it.
        const auto i = static_cast<Eigen::Index>(g() % dofs.N());
        mu.segment<2>(2 * i) *= 1.5 * sy / mu.segment<2>(2 * i).norm();
        bool detected = false;
        for (int k = 0; k < 100 && !detected; ++k) {
            Eigen::VectorXd q = 1e-3 * testsupport::random_vector(g, nq);
            q.segment<2>(2 * i) = mu.segment<2>(2 * i);
            detected = pairing(mu, q) > psi_hp(q) + 1e-10;
        }
        CHECK(detected);
    }
}
