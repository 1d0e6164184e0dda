#include "hpep/cli/checks.hpp"

#include "hpep/errors.hpp"
#include "hpep/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <optional>
#include <random>

namespace hpep::cli {

namespace {

constexpr int L = DofSystem::L;

std::string sci(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

/// Shared state so that the mesh and the solve are built once per run.
struct Context {
    const ProblemConfig& cfg;
    std::optional<HpMesh> mesh;
    std::string mesh_error;
    std::shared_ptr<const LevelSolution> solution;
    std::string solve_error;

    explicit Context(const ProblemConfig& c) : cfg(c)
    {
        try {
            mesh.emplace(build_mesh(cfg));
        } catch (const GeometryError& e) {
            mesh_error = e.what();
        } catch (const MeshError& e) {
            mesh_error = e.what();
        }
    }

    const LevelSolution* solve()
    {
        if (!solution && solve_error.empty() && mesh) {
            try {
                const Problem pr = build_problem(cfg);
                SolverConfig sc = cfg.solver;
                sc.verbose = false;
                solution = std::make_shared<const LevelSolution>(solve_problem(pr.mesh, pr.material, pr.loads, sc));
            } catch (const Error& e) {
                solve_error = e.what();
            }
        }
        return solution.get();
    }
};

double monomial_integral(int k) { return (k % 2 == 0) ? 2.0 / (k + 1) : 0.0; }

GroupResult check_quadrature(Context& ctx, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    double worst = 0.0;
    for (int p = 1; p <= 8; ++p) {
        const int deg = 2 * p - 1;
        for (int dim = 1; dim <= 2; ++dim) {
            const GaussRule rule = gauss_rule(p, dim);
            const int ny = dim == 2 ? deg : 0;
            Eigen::MatrixXd c(deg + 1, ny + 1);
            for (int i = 0; i <= deg; ++i)
                for (int j = 0; j <= ny; ++j)
                    c(i, j) = coef(rng);
            double exact = 0.0, scale = 0.0;
            for (int i = 0; i <= deg; ++i)
                for (int j = 0; j <= ny; ++j) {
                    const double mj = dim == 2 ? monomial_integral(j) : 1.0;
                    exact += c(i, j) * monomial_integral(i) * mj;
                    scale += std::abs(c(i, j)) * (2.0 / (i + 1)) * (dim == 2 ? 2.0 / (j + 1) : 1.0);
                }
            double approx = 0.0;
            for (std::size_t q = 0; q < rule.size(); ++q) {
                const Eigen::Vector2d& x = rule.points[q];
                double v = 0.0;
                for (int i = 0; i <= deg; ++i)
                    for (int j = 0; j <= ny; ++j)
                        v += c(i, j) * std::pow(x.x(), i) * std::pow(x.y(), j);
                approx += rule.weights[q] * v;
            }
            worst = std::max(worst, std::abs(approx - exact) / scale);
        }
    }
    bool ok = worst <= 1e-12;
    std::string detail = "max rel err " + sci(worst) + " over p=1..8";
    if (ctx.mesh) {
        // Q_hp on mesh elements against a high-order rule for polynomials it must integrate exactly.
        double worst_q = 0.0;
        for (std::size_t e = 0; e < ctx.mesh->num_elements(); ++e) {
            const int p = ctx.mesh->degree(e);
            const int deg = p == 1 ? 0 : 2 * p - 2;
            Eigen::MatrixXd c = Eigen::MatrixXd::Zero(deg + 1, deg + 1);
            for (int i = 0; i <= deg; ++i)
                for (int j = 0; i + j <= deg; ++j)
                    c(i, j) = coef(rng);
            const ScalarField f = [&c, deg](const Eigen::Vector2d& x) {
                double v = 0.0;
                for (int i = 0; i <= deg; ++i)
                    for (int j = 0; i + j <= deg; ++j)
                        v += c(i, j) * std::pow(x.x(), i) * std::pow(x.y(), j);
                return v;
            };
            double ref = 0.0, mag = 0.0;
            for (const auto& qp : element_quadrature(*ctx.mesh, e, p + 4)) {
                ref += qp.weight * f(qp.x);
                mag += qp.weight * std::abs(f(qp.x));
            }
            worst_q = std::max(worst_q, std::abs(qhp_local(*ctx.mesh, e, f) - ref) / std::max(mag, 1e-300));
        }
        ok = ok && worst_q <= 1e-11;
        detail += ", Q_hp max rel err " + sci(worst_q);
    }
    return {"quadrature", ok, detail};
}

GroupResult check_geometry(Context& ctx)
{
    if (!ctx.mesh)
        return {"geometry", false, "mesh rejected: " + ctx.mesh_error};
    const HpMesh& m = *ctx.mesh;
    std::size_t bad_map = 0, bad_det = 0;
    for (std::size_t e = 0; e < m.num_elements(); ++e) {
        const GeometryMap g = m.geometry(e);
        if (!check_mapping_assumption(g))
            ++bad_map;
        for (const auto& x : gauss_rule(m.degree(e) + 1, 2).points)
            if (!(g.det_unchecked(x) > 0.0)) {
                ++bad_det;
                break;
            }
    }
    double sum = 0.0;
    for (std::size_t e = 0; e < m.num_elements(); ++e)
        sum += m.area(e);
    const bool ok = bad_map == 0 && bad_det == 0 && m.dirichlet_length() > 0.0;
    return {"geometry", ok,
            std::to_string(m.num_elements()) + " elements, area " + sci(sum) + ", " + std::to_string(bad_map) +
                " non-affine-det maps, " + std::to_string(bad_det) + " non-positive Jacobians" +
                (m.dirichlet_length() > 0.0 ? "" : ", no Dirichlet boundary")};
}

GroupResult check_biorth(Context& ctx)
{
    if (!ctx.mesh)
        return {"biorth", false, "mesh unavailable"};
    const DofSystem dofs(*ctx.mesh, ctx.cfg.material.yield_sigma_y);
    const HpMesh& m = dofs.mesh();
    double worst = 0.0, area_err = 0.0, dmin = std::numeric_limits<double>::infinity();
    const double dmax = dofs.d_weights().maxCoeff();
    Eigen::VectorXd phi;
    for (std::size_t e = 0; e < m.num_elements(); ++e) {
        const int p = m.degree(e);
        const int n = dofs.nodes_in_element(e);
        Eigen::MatrixXd mass = Eigen::MatrixXd::Zero(n, n);
        for (const auto& qp : element_quadrature(m, e, p + 3)) {
            gauss_lagrange(p).eval(qp.xhat, phi);
            mass += qp.weight * phi * phi.transpose();
        }
        // (phi_i, dual_j) = sum_m c(j, m) (phi_i, phi_m)
        const Eigen::MatrixXd prod = mass * dofs.dual_coeffs(e).transpose();
        double dsum = 0.0;
        for (int i = 0; i < n; ++i) {
            const double di = dofs.d_weights()[static_cast<Eigen::Index>(dofs.zeta(e, i))];
            dmin = std::min(dmin, di);
            dsum += di;
            for (int j = 0; j < n; ++j)
                worst = std::max(worst, std::abs(prod(i, j) - (i == j ? di : 0.0)));
        }
        area_err = std::max(area_err, std::abs(dsum - m.area(e)) / m.area(e));
    }
    const bool ok = worst <= 1e-12 * dmax && dmin > 0.0 && area_err <= 1e-12;
    return {"biorth", ok,
            "max |(phi_i, dual_j) - delta_ij D_i| / max D " + sci(worst / dmax) + ", min D " + sci(dmin) +
                ", sum D vs area " + sci(area_err)};
}

GroupResult check_jacobian(Context& ctx, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(-1.0, 1.0), s(0.5, 2.0);
    const double h = 1e-6;
    double worst = 0.0;
    int tested = 0;
    for (double rho : {0.01, 1.0, 100.0}) {
        for (int k = 0; k < ctx.cfg.samples; ++k) {
            Eigen::VectorXd q(L), mu(L);
            for (int l = 0; l < L; ++l) {
                q[l] = u(rng);
                mu[l] = 2.0 * u(rng);
            }
            const double sigma = s(rng);
            if (std::abs((mu + rho * q).norm() - sigma) < 1e-3 * sigma)
                continue;
            const ChiJacobian J = chi_subdifferential(q, mu, sigma, rho);
            Eigen::MatrixXd fq(L, L), fm(L, L);
            for (int c = 0; c < L; ++c) {
                Eigen::VectorXd e = Eigen::VectorXd::Zero(L);
                e[c] = h;
                fq.col(c) = (chi(q + e, mu, sigma, rho) - chi(q - e, mu, sigma, rho)) / (2 * h);
                fm.col(c) = (chi(q, mu + e, sigma, rho) - chi(q, mu - e, sigma, rho)) / (2 * h);
            }
            const double scale = std::max({1.0, J.dq.norm(), J.dmu.norm()});
            worst = std::max(worst, std::max((J.dq - fq).norm(), (J.dmu - fm).norm()) / scale);
            ++tested;
        }
    }
    return {"jacobian", worst <= 1e-5,
            std::to_string(tested) + " samples, max rel deviation from central differences " + sci(worst)};
}

GroupResult check_complementarity_group(Context& ctx)
{
    const LevelSolution* sol = ctx.solve();
    if (!sol)
        return {"complementarity", false, "solve failed: " + (ctx.mesh ? ctx.solve_error : ctx.mesh_error)};
    const auto rep = check_complementarity(sol->dofs->sigma_weights(), sol->report.state.b, sol->report.state.c);
    const bool ok = sol->report.converged && rep.ok();
    return {"complementarity", ok,
            std::string(sol->report.converged ? "converged" : "not converged") + " in " +
                std::to_string(sol->report.iterations) + " steps, " + std::to_string(rep.n_plastic) + "/" +
                std::to_string(rep.nodes.size()) + " plastic nodes, " + std::to_string(rep.n_failed()) +
                " violations, max gap " + sci(rep.max_gap)};
}

GroupResult check_lambda(Context& ctx, std::mt19937_64& rng)
{
    const LevelSolution* sol = ctx.solve();
    if (!sol)
        return {"lambda", false, "solve failed: " + (ctx.mesh ? ctx.solve_error : ctx.mesh_error)};
    const DofSystem& dofs = *sol->dofs;
    const HpMesh& m = dofs.mesh();

    // Recovery identity: the solver multiplier equals the projected deviatoric stress.
    const Eigen::VectorXd from_c = dofs.dual_to_primal(sol->report.state.c);
    const double denom = std::max(from_c.norm(), sol->fields.lambda().norm());
    const double rec = denom > 0.0 ? (from_c - sol->fields.lambda()).norm() / denom : 0.0;

    // (mu, q) by quadrature with mu in the dual basis, q in the primal basis.
    auto pairing = [&](const Eigen::VectorXd& mu, const Eigen::VectorXd& q) {
        double v = 0.0;
        for (std::size_t e = 0; e < m.num_elements(); ++e)
            for (const auto& qp : element_quadrature(m, e, m.degree(e) + 2))
                v += qp.weight * dofs.q_value(mu, QBasis::Dual, e, qp.xhat).dot(dofs.q_value(q, QBasis::Primal, e, qp.xhat));
        return v;
    };
    auto psi_hp = [&](const Eigen::VectorXd& q) {
        double v = 0.0;
        for (std::size_t e = 0; e < m.num_elements(); ++e)
            v += qhp_local(m, e, [&](const Eigen::Vector2d& x) {
                const auto xi = m.geometry(e).inverse(x);
                return dofs.sigma_y() * dofs.q_value(q, QBasis::Primal, e, xi.value_or(Eigen::Vector2d::Zero())).norm();
            });
        return v;
    };
    std::uniform_real_distribution<double> u(-1.0, 1.0), r(0.0, 1.0);
    const auto N = static_cast<Eigen::Index>(dofs.N());
    const Eigen::VectorXd& sigma = dofs.sigma_weights();
    auto random_feasible = [&]() {
        Eigen::VectorXd mu(L * N);
        for (Eigen::Index i = 0; i < N; ++i) {
            Eigen::VectorXd d(L);
            for (int l = 0; l < L; ++l)
                d[l] = u(rng);
            mu.segment(L * i, L) = d.normalized() * sigma[i] * r(rng);
        }
        return mu;
    };
    auto random_q = [&]() {
        Eigen::VectorXd q(L * N);
        for (Eigen::Index k = 0; k < q.size(); ++k)
            q[k] = u(rng);
        return q;
    };
    const int n_mu = std::max(1, ctx.cfg.samples / 10), n_q = 10;
    int feasible_fail = 0, infeasible_missed = 0;
    for (int s = 0; s < n_mu; ++s) {
        const Eigen::VectorXd mu = random_feasible();
        for (int t = 0; t < n_q; ++t) {
            const Eigen::VectorXd q = random_q();
            if (pairing(mu, q) > psi_hp(q) + 1e-10)
                ++feasible_fail;
        }
        Eigen::VectorXd bad = mu;
        const Eigen::Index node = std::uniform_int_distribution<Eigen::Index>(0, N - 1)(rng);
        Eigen::VectorXd dir = bad.segment(L * node, L);
        if (dir.norm() == 0.0)
            dir = Eigen::VectorXd::Unit(L, 0);
        bad.segment(L * node, L) = dir.normalized() * 1.5 * sigma[node];
        Eigen::VectorXd q = Eigen::VectorXd::Zero(L * N);
        q.segment(L * node, L) = bad.segment(L * node, L);
        if (!(pairing(bad, q) > psi_hp(q)))
            ++infeasible_missed;
    }
    const bool ok = rec <= 1e-8 && feasible_fail == 0 && infeasible_missed == 0;
    return {"lambda", ok,
            "recovery rel diff " + sci(rec) + ", " + std::to_string(feasible_fail) + " feasible violations, " +
                std::to_string(infeasible_missed) + " infeasible samples undetected (" + std::to_string(n_mu) +
                " multipliers)"};
}

} // namespace

const std::vector<std::string>& check_group_names()
{
    static const std::vector<std::string> names{"quadrature", "geometry", "biorth", "jacobian", "complementarity",
                                                "lambda"};
    return names;
}

std::vector<GroupResult> run_checks(const ProblemConfig& cfg, const std::vector<std::string>& groups)
{
    const auto& names = check_group_names();
    for (const auto& g : groups)
        if (std::find(names.begin(), names.end(), g) == names.end())
            throw ConfigError("unknown check group '" + g + "'");
    Context ctx(cfg);
    std::vector<GroupResult> out;
    for (std::size_t k = 0; k < names.size(); ++k) {
        const std::string& name = names[k];
        if (!groups.empty() && std::find(groups.begin(), groups.end(), name) == groups.end())
            continue;
        // Each group draws from its own stream so that filtering does not change the samples.
        std::mt19937_64 rng(cfg.seed + 1000003ULL * k);
        if (name == "quadrature")
            out.push_back(check_quadrature(ctx, rng));
        else if (name == "geometry")
            out.push_back(check_geometry(ctx));
        else if (name == "biorth")
            out.push_back(check_biorth(ctx));
        else if (name == "jacobian")
            out.push_back(check_jacobian(ctx, rng));
        else if (name == "complementarity")
            out.push_back(check_complementarity_group(ctx));
        else
            out.push_back(check_lambda(ctx, rng));
    }
    return out;
}

} // namespace hpep::cli
