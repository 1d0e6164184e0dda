#include "hpep/solver.hpp"

#include "hpep/errors.hpp"

#include <cmath>
#include <iostream>
#include <sstream>

namespace hpep {

namespace {

Eigen::Index L_of(const SaddleSystem& sys, const Eigen::VectorXd& sigma)
{
    if (sigma.size() == 0 || sys.q_size() % static_cast<std::size_t>(sigma.size()) != 0)
        throw AssemblyError("sigma weights do not match the plastic strain block");
    return static_cast<Eigen::Index>(sys.q_size()) / sigma.size();
}

std::vector<Triplet> static_triplets(const SaddleSystem& sys)
{
    const int nu = static_cast<int>(sys.u_size());
    const int nq = static_cast<int>(sys.q_size());
    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(sys.A.nnz() + 2 * sys.B.nnz() + sys.C.nnz() + nq));
    auto append = [&t](const SparseMatrix& m, int r0, int c0, bool transposed) {
        const auto& s = m.storage();
        for (int i = 0; i < s.outerSize(); ++i)
            for (SparseMatrix::Storage::InnerIterator it(s, i); it; ++it) {
                const int r = static_cast<int>(it.row()), c = static_cast<int>(it.col());
                if (transposed)
                    t.emplace_back(r0 + c, c0 + r, it.value());
                else
                    t.emplace_back(r0 + r, c0 + c, it.value());
            }
    };
    append(sys.A, 0, 0, false);
    append(sys.B, 0, nu, false);
    append(sys.B, nu, 0, true);
    append(sys.C, nu, nu, false);
    for (int i = 0; i < nq; ++i)
        if (sys.d[i] != 0.0)
            t.emplace_back(nu + i, nu + nq + i, sys.d[i]);
    return t;
}

std::size_t count_active(const Eigen::VectorXd& sigma, const NewtonState& s, double rho, KinkBranch branch,
                         Eigen::Index L)
{
    std::size_t n = 0;
    for (Eigen::Index i = 0; i < sigma.size(); ++i)
        if (is_active(s.b.segment(L * i, L), s.c.segment(L * i, L), sigma[i], rho, branch))
            ++n;
    return n;
}

} // namespace

void SolverConfig::validate() const
{
    if (!(rho > 0.0) || !std::isfinite(rho))
        throw ConfigError("solver rho must be positive");
    if (!(tol > 0.0))
        throw ConfigError("solver tol must be positive");
    if (max_iter < 0)
        throw ConfigError("solver max_iter must be non-negative");
}

NewtonState NewtonState::zeros(std::size_t u_size, std::size_t q_size)
{
    NewtonState s;
    s.a = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(u_size));
    s.b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(q_size));
    s.c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(q_size));
    return s;
}

Eigen::VectorXd chi(const Eigen::VectorXd& q, const Eigen::VectorXd& mu, double sigma, double rho)
{
    const Eigen::VectorXd z = mu + rho * q;
    return std::max(sigma, z.norm()) * mu - sigma * z;
}

bool is_active(const Eigen::VectorXd& q, const Eigen::VectorXd& mu, double sigma, double rho, KinkBranch branch)
{
    const double nz = (mu + rho * q).norm();
    if (nz > sigma)
        return true;
    return nz == sigma && branch == KinkBranch::Active && nz > 0.0;
}

ChiJacobian chi_subdifferential(const Eigen::VectorXd& q, const Eigen::VectorXd& mu, double sigma, double rho,
                                KinkBranch branch)
{
    const Eigen::Index L = q.size();
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(L, L);
    ChiJacobian J;
    J.active = is_active(q, mu, sigma, rho, branch);
    if (!J.active) {
        J.dq = -sigma * rho * I;
        J.dmu = Eigen::MatrixXd::Zero(L, L);
        return J;
    }
    const Eigen::VectorXd z = mu + rho * q;
    const double nz = z.norm();
    const Eigen::MatrixXd outer = mu * (z / nz).transpose();
    J.dmu = (nz - sigma) * I + outer;
    J.dq = rho * outer - sigma * rho * I;
    return J;
}

Eigen::VectorXd evaluate_F(const SaddleSystem& sys, const Eigen::VectorXd& sigma, const NewtonState& s, double rho)
{
    const Eigen::Index L = L_of(sys, sigma);
    const Eigen::Index nu = static_cast<Eigen::Index>(sys.u_size());
    const Eigen::Index nq = static_cast<Eigen::Index>(sys.q_size());
    Eigen::VectorXd F(nu + 2 * nq);
    F.head(nu) = sys.A * s.a + sys.B * s.b + sys.l;
    F.segment(nu, nq) = sys.B.storage().transpose() * s.a + sys.C * s.b + sys.d.cwiseProduct(s.c);
    for (Eigen::Index i = 0; i < sigma.size(); ++i)
        F.segment(nu + nq + L * i, L) = chi(s.b.segment(L * i, L), s.c.segment(L * i, L), sigma[i], rho);
    return F;
}

namespace {

SparseMatrix newton_matrix_from(const std::vector<Triplet>& fixed, const SaddleSystem& sys,
                                const Eigen::VectorXd& sigma, const NewtonState& s, double rho, KinkBranch branch,
                                std::size_t* n_active)
{
    const Eigen::Index L = L_of(sys, sigma);
    const int nu = static_cast<int>(sys.u_size());
    const int nq = static_cast<int>(sys.q_size());
    std::vector<Triplet> t = fixed;
    t.reserve(fixed.size() + static_cast<std::size_t>(2 * L * nq));
    std::size_t active = 0;
    for (Eigen::Index i = 0; i < sigma.size(); ++i) {
        const ChiJacobian J =
            chi_subdifferential(s.b.segment(L * i, L), s.c.segment(L * i, L), sigma[i], rho, branch);
        active += J.active ? 1 : 0;
        const int r0 = nu + nq + static_cast<int>(L * i);
        for (Eigen::Index r = 0; r < L; ++r)
            for (Eigen::Index c = 0; c < L; ++c) {
                const int col = static_cast<int>(L * i + c);
                if (J.dq(r, c) != 0.0)
                    t.emplace_back(r0 + static_cast<int>(r), nu + col, J.dq(r, c));
                if (J.dmu(r, c) != 0.0)
                    t.emplace_back(r0 + static_cast<int>(r), nu + nq + col, J.dmu(r, c));
            }
    }
    if (n_active)
        *n_active = active;
    return SparseMatrix::from_triplets(nu + 2 * nq, nu + 2 * nq, t);
}

} // namespace

SparseMatrix newton_matrix(const SaddleSystem& sys, const Eigen::VectorXd& sigma, const NewtonState& s, double rho,
                           KinkBranch branch, std::size_t* n_active)
{
    return newton_matrix_from(static_triplets(sys), sys, sigma, s, rho, branch, n_active);
}

NewtonState elastic_predictor(const SaddleSystem& sys)
{
    NewtonState s = NewtonState::zeros(sys.u_size(), sys.q_size());
    if (sys.l.lpNorm<Eigen::Infinity>() > 0.0)
        s.a = factor_solve(sys.A, -sys.l);
    return s;
}

SolveReport newton_solve(const SaddleSystem& sys, const Eigen::VectorXd& sigma, const SolverConfig& config,
                         const NewtonState* initial)
{
    config.validate();
    const Eigen::Index L = L_of(sys, sigma);
    const Eigen::Index nu = static_cast<Eigen::Index>(sys.u_size());
    const Eigen::Index nq = static_cast<Eigen::Index>(sys.q_size());
    std::ostream& log = config.log ? *config.log : std::cout;

    SolveReport rep;
    rep.state = initial ? *initial : elastic_predictor(sys);
    NewtonState& s = rep.state;
    if (s.a.size() != nu || s.b.size() != nq || s.c.size() != nq)
        throw AssemblyError("initial Newton state has wrong dimensions");

    const std::vector<Triplet> fixed = static_triplets(sys);
    Eigen::VectorXd F = evaluate_F(sys, sigma, s, config.rho);
    auto record = [&](int k, double r) {
        IterationRecord rec;
        rec.k = k;
        rec.residual = r;
        rec.n_active = count_active(sigma, s, config.rho, config.kink_branch, L);
        rec.n_inactive = static_cast<std::size_t>(sigma.size()) - rec.n_active;
        rep.history.push_back(rec);
        if (config.verbose) {
            std::ostringstream line;
            line.precision(6);
            line << std::scientific << rec.k << ' ' << rec.residual << ' ' << rec.n_active << ' ' << rec.n_inactive
                 << '\n';
            log << line.str();
        }
    };

    double r = F.norm();
    record(0, r);
    for (int k = 1;; ++k) {
        if (!std::isfinite(r)) {
            rep.message = "residual is not finite";
            break;
        }
        if (r <= config.tol) {
            rep.converged = true;
            break;
        }
        if (k > config.max_iter) {
            rep.message = "maximum number of Newton iterations reached";
            break;
        }
        const SparseMatrix H = newton_matrix_from(fixed, sys, sigma, s, config.rho, config.kink_branch, nullptr);
        Eigen::VectorXd delta;
        try {
            delta = factor_solve(H, -F);
        } catch (const SingularMatrixError& e) {
            throw SingularMatrixError("Newton matrix singular at iteration " + std::to_string(k) + ": " + e.what(),
                                      e.pivot());
        }
        double step = 1.0;
        NewtonState trial;
        Eigen::VectorXd Ftrial;
        double rtrial = 0.0;
        for (int bt = 0;; ++bt) {
            trial.a = s.a + step * delta.head(nu);
            trial.b = s.b + step * delta.segment(nu, nq);
            trial.c = s.c + step * delta.tail(nq);
            Ftrial = evaluate_F(sys, sigma, trial, config.rho);
            rtrial = Ftrial.norm();
            if (!config.damping || rtrial < r || bt >= 20)
                break;
            step *= 0.5;
        }
        s = std::move(trial);
        F = std::move(Ftrial);
        r = rtrial;
        rep.iterations = k;
        record(k, r);
    }
    rep.residual = r;
    return rep;
}

std::size_t ComplementarityReport::n_failed() const
{
    std::size_t n = 0;
    for (const auto& node : nodes)
        n += node.ok() ? 0 : 1;
    return n;
}

ComplementarityReport check_complementarity(const Eigen::VectorXd& sigma, const Eigen::VectorXd& b,
                                            const Eigen::VectorXd& c, int L)
{
    ComplementarityReport rep;
    rep.nodes.resize(static_cast<std::size_t>(sigma.size()));
    for (Eigen::Index i = 0; i < sigma.size(); ++i) {
        const Eigen::VectorXd p = b.segment(L * i, L), lam = c.segment(L * i, L);
        NodeComplementarity& n = rep.nodes[static_cast<std::size_t>(i)];
        n.lambda_norm = lam.norm();
        n.p_norm = p.norm();
        const double gap = std::abs(lam.dot(p) - sigma[i] * n.p_norm);
        n.feasible = n.lambda_norm <= sigma[i] + 1e-9;
        n.complementary = gap <= 1e-9 * (1.0 + n.p_norm);
        if (n.lambda_norm < sigma[i] - 1e-7) {
            n.inactive_ok = n.p_norm <= 1e-9;
        } else if (std::abs(n.lambda_norm - sigma[i]) <= 1e-7) {
            ++rep.n_on_sphere;
            if (n.lambda_norm > 0.0) {
                const Eigen::VectorXd dir = lam / n.lambda_norm;
                const double along = p.dot(dir);
                n.parallel_ok = along >= -1e-7 && (p - along * dir).norm() <= 1e-7 * (1.0 + n.p_norm);
            }
        }
        if (n.p_norm > 1e-9)
            ++rep.n_plastic;
        rep.max_bound_violation = std::max(rep.max_bound_violation, n.lambda_norm - sigma[i]);
        rep.max_gap = std::max(rep.max_gap, gap);
    }
    rep.max_bound_violation = std::max(rep.max_bound_violation, 0.0);
    return rep;
}

} // namespace hpep
