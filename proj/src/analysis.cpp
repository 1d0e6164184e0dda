#include "hpep/analysis.hpp"

#include "hpep/errors.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace hpep {

namespace {

constexpr int L = DofSystem::L;

Eigen::Matrix2d jinv_t_at(const HpMesh& mesh, std::size_t e, const Eigen::Vector2d& xhat)
{
    return mesh.geometry(e).jacobian(xhat).inverse().transpose();
}

DevTensor dev_zero() { return DevTensor(2); }

} // namespace

DiscreteFields::DiscreteFields(std::shared_ptr<const DofSystem> dofs, Eigen::VectorXd a, Eigen::VectorXd p,
                               Eigen::VectorXd lambda)
    : dofs_(std::move(dofs)), a_(std::move(a)), p_(std::move(p)), lambda_(std::move(lambda))
{
    if (!dofs_)
        throw AssemblyError("discrete fields need a dof system");
    const auto nu = static_cast<Eigen::Index>(dofs_->u_size());
    const auto nq = static_cast<Eigen::Index>(dofs_->q_size());
    if (a_.size() == 0)
        a_ = Eigen::VectorXd::Zero(nu);
    if (p_.size() == 0)
        p_ = Eigen::VectorXd::Zero(nq);
    if (lambda_.size() == 0)
        lambda_ = Eigen::VectorXd::Zero(nq);
    if (a_.size() != nu || p_.size() != nq || lambda_.size() != nq)
        throw AssemblyError("discrete field coefficient vectors have wrong sizes");
}

PointSample DiscreteFields::sample(std::size_t e, const Eigen::Vector2d& xhat) const
{
    const auto& space = dofs_->displacement();
    PointSample s;
    s.u = space.value(e, xhat, a_);
    s.grad_u = space.gradient(e, xhat, jinv_t_at(dofs_->mesh(), e, xhat), a_);
    s.p = dofs_->q_value(p_, QBasis::Primal, e, xhat);
    s.lambda = dofs_->q_value(lambda_, QBasis::Primal, e, xhat);
    return s;
}

Sampler own_mesh_sampler(const DiscreteFields& f)
{
    return [f](std::size_t e, const Eigen::Vector2d& xhat, const Eigen::Vector2d&) { return f.sample(e, xhat); };
}

Sampler nested_sampler(const DiscreteFields& coarse, const HpMesh& fine)
{
    auto emb = std::make_shared<std::vector<ElementEmbedding>>(embed_nested(fine, coarse.dofs().mesh()));
    return [coarse, emb](std::size_t e, const Eigen::Vector2d& xhat, const Eigen::Vector2d&) {
        const ElementEmbedding& m = (*emb)[e];
        return coarse.sample(m.coarse_element, m.apply(xhat));
    };
}

Sampler exact_sampler(const ExactSolution& s)
{
    return [s](std::size_t, const Eigen::Vector2d&, const Eigen::Vector2d& x) {
        PointSample out;
        if (s.u)
            out.u = s.u(x);
        if (s.grad_u)
            out.grad_u = s.grad_u(x);
        out.p = s.p ? s.p(x) : dev_zero();
        out.lambda = s.lambda ? s.lambda(x) : dev_zero();
        return out;
    };
}

Eigen::VectorXd recover_lambda(const DofSystem& dofs, const MaterialLaw& material, const Eigen::VectorXd& a,
                               const Eigen::VectorXd& p)
{
    const auto& space = dofs.displacement();
    return project_P_hp(dofs, [&](std::size_t e, const Eigen::Vector2d& xhat, const Eigen::Vector2d&) {
        const Eigen::Matrix2d g = space.gradient(e, xhat, jinv_t_at(dofs.mesh(), e, xhat), a);
        const DevTensor pv = dofs.q_value(p, QBasis::Primal, e, xhat);
        const SymTensor sigma = apply_C(strain(g) - reconstruct(pv), material);
        return deviator(sigma) - apply_H(pv, material);
    });
}

DifferenceNorms difference_norms(const HpMesh& mesh, const Sampler& first, const Sampler& second, int extra_points)
{
    DifferenceNorms out;
    out.pair_sq.assign(mesh.num_elements(), 0.0);
    out.lambda_sq.assign(mesh.num_elements(), 0.0);
    double u0 = 0.0, u1 = 0.0, q0 = 0.0, l0 = 0.0;
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        for (const auto& qp : element_quadrature(mesh, e, mesh.degree(e) + extra_points)) {
            const PointSample a = first(e, qp.xhat, qp.x);
            const PointSample b = second(e, qp.xhat, qp.x);
            const Eigen::Matrix2d dg = a.grad_u - b.grad_u;
            const Eigen::Matrix2d eps = 0.5 * (dg + dg.transpose());
            const double du = (a.u - b.u).squaredNorm();
            const double de = eps.squaredNorm();
            const double dq = (a.p - b.p).coeffs().squaredNorm();
            const double dl = (a.lambda - b.lambda).coeffs().squaredNorm();
            u0 += qp.weight * du;
            u1 += qp.weight * de;
            q0 += qp.weight * dq;
            l0 += qp.weight * dl;
            out.pair_sq[e] += qp.weight * (du + de + dq);
            out.lambda_sq[e] += qp.weight * dl;
        }
    }
    out.total.u_semi = std::sqrt(u1);
    out.total.u_h1 = std::sqrt(u0 + u1);
    out.total.q_l2 = std::sqrt(q0);
    out.total.pair = std::sqrt(u0 + u1 + q0);
    out.total.lambda_l2 = std::sqrt(l0);
    return out;
}

EnergyNorms energy_norms(const DiscreteFields& f)
{
    const Sampler zero = [](std::size_t, const Eigen::Vector2d&, const Eigen::Vector2d&) { return PointSample{}; };
    return difference_norms(f.dofs().mesh(), own_mesh_sampler(f), zero, 2).total;
}

double plasticity_error(const ElementTensorField& mu, const DiscreteFields& n, double sigma_y,
                        std::vector<double>* per_element)
{
    const HpMesh& mesh = n.dofs().mesh();
    if (per_element)
        per_element->assign(mesh.num_elements(), 0.0);
    double total = 0.0;
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        double local = 0.0;
        for (const auto& qp : element_quadrature(mesh, e, elevated_points(mesh.degree(e)))) {
            const DevTensor m = mu(e, qp.xhat, qp.x);
            if (m.norm() > sigma_y * (1.0 + 1e-12))
                throw FeasibilityError("multiplier candidate exceeds the yield bound at a quadrature point of element " +
                                       std::to_string(e));
            const DevTensor lam = n.dofs().q_value(n.lambda(), QBasis::Primal, e, qp.xhat);
            const DevTensor p = n.dofs().q_value(n.p(), QBasis::Primal, e, qp.xhat);
            local += qp.weight * ((m - lam).coeffs().squaredNorm() + psi_density(p, sigma_y) - m.dot(p));
        }
        total += local;
        if (per_element)
            (*per_element)[e] = local;
    }
    return total;
}

ElementTensorField project_mu_star(const DiscreteFields& n, double sigma_y)
{
    return [n, sigma_y](std::size_t e, const Eigen::Vector2d& xhat, const Eigen::Vector2d&) {
        const DevTensor lam = n.dofs().q_value(n.lambda(), QBasis::Primal, e, xhat);
        const DevTensor p = n.dofs().q_value(n.p(), QBasis::Primal, e, xhat);
        DevTensor hat = lam + 0.5 * p;
        const double nrm = hat.norm();
        if (nrm > sigma_y)
            hat *= sigma_y / nrm;
        return hat;
    };
}

DiscreteFields solve_auxiliary(const DiscreteFields& n, const MaterialLaw& material, const LoadData& loads)
{
    const HpMesh& coarse = n.dofs().mesh();
    auto dofs = std::make_shared<const DofSystem>(elevate_degree(refine_uniform(coarse), 1), n.dofs().sigma_y());
    const SaddleSystem sys = assemble_blocks(*dofs, material, loads);
    const HpMesh& fine = dofs->mesh();
    const auto emb = embed_nested(fine, coarse);

    const auto nu = static_cast<Eigen::Index>(dofs->u_size());
    const auto nq = static_cast<Eigen::Index>(dofs->q_size());
    Eigen::VectorXd r = Eigen::VectorXd::Zero(nq);
    Eigen::VectorXd phi;
    for (std::size_t e = 0; e < fine.num_elements(); ++e) {
        const int p = fine.degree(e);
        const std::size_t off = dofs->element_offset(e);
        for (const auto& qp : element_quadrature(fine, e, elevated_points(p))) {
            const DevTensor lam = n.dofs().q_value(n.lambda(), QBasis::Primal, emb[e].coarse_element,
                                                   emb[e].apply(qp.xhat));
            gauss_lagrange(p).eval(qp.xhat, phi);
            for (int j = 0; j < phi.size(); ++j)
                for (int k = 0; k < L; ++k)
                    r[static_cast<Eigen::Index>(L * (off + j) + k)] += qp.weight * lam[k] * phi[j];
        }
    }

    std::vector<Triplet> t;
    auto append = [&t](const SparseMatrix& m, int r0, int c0, bool transposed) {
        const auto& s = m.storage();
        for (int i = 0; i < s.outerSize(); ++i)
            for (SparseMatrix::Storage::InnerIterator it(s, i); it; ++it) {
                const int rr = static_cast<int>(it.row()), cc = static_cast<int>(it.col());
                if (transposed)
                    t.emplace_back(r0 + cc, c0 + rr, it.value());
                else
                    t.emplace_back(r0 + rr, c0 + cc, it.value());
            }
    };
    const int inu = static_cast<int>(nu);
    append(sys.A, 0, 0, false);
    append(sys.B, 0, inu, false);
    append(sys.B, inu, 0, true);
    append(sys.C, inu, inu, false);
    const SparseMatrix K = SparseMatrix::from_triplets(nu + nq, nu + nq, t, true);
    Eigen::VectorXd rhs(nu + nq);
    rhs.head(nu) = -sys.l;
    rhs.tail(nq) = -r;
    const Eigen::VectorXd x = factor_solve(K, rhs);
    return DiscreteFields(dofs, x.head(nu), x.tail(nq), Eigen::VectorXd());
}

LevelSolution solve_problem(const HpMesh& mesh, const MaterialLaw& material, const LoadData& loads,
                            const SolverConfig& config)
{
    material.validate();
    auto dofs = std::make_shared<const DofSystem>(mesh, material.yield_sigma_y);
    SaddleSystem sys = assemble_blocks(*dofs, material, loads);
    SolveReport rep = newton_solve(sys, dofs->sigma_weights(), config);
    Eigen::VectorXd lam = recover_lambda(*dofs, material, rep.state.a, rep.state.b);
    DiscreteFields fields(dofs, rep.state.a, rep.state.b, std::move(lam));
    return LevelSolution{dofs, std::move(sys), std::move(rep), std::move(fields)};
}

ErrorReport evaluate_errors(const LevelSolution& sol, const Problem& problem, const HpMesh& reference_mesh,
                            const Sampler& reference, bool auxiliary)
{
    ErrorReport rep;
    const HpMesh& own = sol.dofs->mesh();
    const Sampler approx = reference_mesh.num_elements() == own.num_elements() ? own_mesh_sampler(sol.fields)
                                                                              : nested_sampler(sol.fields, reference_mesh);
    const DifferenceNorms d = difference_norms(reference_mesh, reference, approx);
    rep.energy_norm_pair = d.total.pair;
    rep.lambda_error = d.total.lambda_l2;
    rep.pair_per_element = d.pair_sq;
    rep.lambda_per_element = d.lambda_sq;

    const double sy = problem.material.yield_sigma_y;
    rep.e_plast = plasticity_error(project_mu_star(sol.fields, sy), sol.fields, sy, &rep.e_plast_per_element);
    if (auxiliary) {
        const DiscreteFields aux = solve_auxiliary(sol.fields, problem.material, problem.loads);
        const HpMesh& fine = aux.dofs().mesh();
        // The auxiliary pair carries no multiplier; compare displacement and plastic strain only.
        const Sampler n_without_lambda = [inner = nested_sampler(sol.fields, fine)](
                                             std::size_t e, const Eigen::Vector2d& xhat, const Eigen::Vector2d& x) {
            PointSample s = inner(e, xhat, x);
            s.lambda = DevTensor(2);
            return s;
        };
        const DifferenceNorms da = difference_norms(fine, own_mesh_sampler(aux), n_without_lambda);
        rep.aux_error = da.total.pair;
        rep.aux_per_element = da.pair_sq;
    }
    return rep;
}

double observed_order(double e0, double e1, double h0, double h1)
{
    if (!(e0 > 0.0) || !(e1 > 0.0) || !(h0 > 0.0) || !(h1 > 0.0) || h0 == h1)
        return std::numeric_limits<double>::quiet_NaN();
    return std::log(e0 / e1) / std::log(h0 / h1);
}

ConvergenceStudy run_convergence_study(const Problem& problem, const StudyOptions& options)
{
    if (options.levels < 1)
        throw ConfigError("convergence study needs at least one level");
    if (options.reference == ReferenceMode::Manufactured && !problem.exact)
        throw ConfigError("manufactured reference requested but the problem has no exact solution");

    ConvergenceStudy study;
    study.problem = problem.name;
    study.reference = options.reference;
    study.s = problem.s;
    study.t = problem.t;
    study.l = problem.l;

    std::vector<HpMesh> meshes{problem.mesh};
    for (int k = 1; k < options.levels; ++k)
        meshes.push_back(refine_uniform(meshes.back()));

    std::optional<LevelSolution> overkill;
    if (options.reference == ReferenceMode::Overkill) {
        const HpMesh ref_mesh = elevate_degree(refine_uniform(refine_uniform(meshes.back())), 1);
        overkill.emplace(solve_problem(ref_mesh, problem.material, problem.loads, options.solver));
        if (!overkill->report.converged)
            throw FeasibilityError("overkill reference solve did not converge: " + overkill->report.message);
    }

    for (int k = 0; k < options.levels; ++k) {
        const HpMesh& mesh = meshes[static_cast<std::size_t>(k)];
        const LevelSolution sol = solve_problem(mesh, problem.material, problem.loads, options.solver);
        ErrorReport err;
        if (overkill)
            err = evaluate_errors(sol, problem, overkill->dofs->mesh(), own_mesh_sampler(overkill->fields),
                                  options.auxiliary);
        else
            err = evaluate_errors(sol, problem, mesh, exact_sampler(*problem.exact), options.auxiliary);

        StudyLevel lv;
        lv.level = k;
        lv.h_max = mesh.max_size();
        lv.p_min = mesh.min_degree();
        lv.ndof = sol.dofs->u_size() + 2 * sol.dofs->q_size();
        lv.err_pair = err.energy_norm_pair;
        lv.err_lambda = err.lambda_error;
        lv.e_plast = err.e_plast;
        lv.aux_err = err.aux_error;
        lv.newton_iterations = sol.report.iterations;
        lv.converged = sol.report.converged;
        if (!study.levels.empty()) {
            const StudyLevel& prev = study.levels.back();
            lv.order_pair = observed_order(prev.err_pair, lv.err_pair, prev.h_max, lv.h_max);
            if (lv.err_pair > prev.err_pair)
                study.monotone = false;
        }
        study.levels.push_back(lv);
    }
    return study;
}

void write_study_csv(std::ostream& out, const ConvergenceStudy& study)
{
    auto num = [](double v) {
        if (std::isnan(v))
            return std::string();
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    out << "level,h_max,p_min,ndof,err_pair,err_lambda,e_plast,aux_err,order_pair\n";
    for (const auto& lv : study.levels)
        out << lv.level << ',' << num(lv.h_max) << ',' << lv.p_min << ',' << lv.ndof << ',' << num(lv.err_pair) << ','
            << num(lv.err_lambda) << ',' << num(lv.e_plast) << ',' << num(lv.aux_err) << ',' << num(lv.order_pair)
            << '\n';
}

} // namespace hpep
