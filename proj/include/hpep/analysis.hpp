#pragma once

#include "hpep/assembly.hpp"
#include "hpep/hp_spaces.hpp"
#include "hpep/solver.hpp"

#include <Eigen/Dense>

#include <functional>
#include <iosfwd>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace hpep {

/// Values of (u, grad u, p, lambda) at one point.
struct PointSample {
    Eigen::Vector2d u = Eigen::Vector2d::Zero();
    Eigen::Matrix2d grad_u = Eigen::Matrix2d::Zero();
    DevTensor p{2};
    DevTensor lambda{2};
};

/// Samples a field triple at a quadrature point of some integration mesh.
using Sampler = std::function<PointSample(std::size_t e, const Eigen::Vector2d& xhat, const Eigen::Vector2d& x)>;

/// Closed-form reference solution; unset members are treated as zero.
struct ExactSolution {
    std::function<Eigen::Vector2d(const Eigen::Vector2d&)> u;
    std::function<Eigen::Matrix2d(const Eigen::Vector2d&)> grad_u;
    std::function<DevTensor(const Eigen::Vector2d&)> p;
    std::function<DevTensor(const Eigen::Vector2d&)> lambda;
};

/// Discrete (u_N, p_N, lambda_N); p and lambda are stored in the primal Q_hp basis.
class DiscreteFields {
public:
    DiscreteFields(std::shared_ptr<const DofSystem> dofs, Eigen::VectorXd a, Eigen::VectorXd p, Eigen::VectorXd lambda);

    const DofSystem& dofs() const { return *dofs_; }
    std::shared_ptr<const DofSystem> dofs_ptr() const { return dofs_; }
    const Eigen::VectorXd& a() const { return a_; }
    const Eigen::VectorXd& p() const { return p_; }
    const Eigen::VectorXd& lambda() const { return lambda_; }

    PointSample sample(std::size_t e, const Eigen::Vector2d& xhat) const;

private:
    std::shared_ptr<const DofSystem> dofs_;
    Eigen::VectorXd a_, p_, lambda_;
};

/// Sampler for fields living on the integration mesh itself.
Sampler own_mesh_sampler(const DiscreteFields& f);
/// Sampler for fields on a coarser mesh of which `fine` is a nested refinement.
Sampler nested_sampler(const DiscreteFields& coarse, const HpMesh& fine);
Sampler exact_sampler(const ExactSolution& s);

/// lambda_hp = P_hp(dev(sigma(u, p) - H p)) in the primal basis.
Eigen::VectorXd recover_lambda(const DofSystem& dofs, const MaterialLaw& material, const Eigen::VectorXd& a,
                               const Eigen::VectorXd& p);

struct EnergyNorms {
    double u_semi = 0.0; // |v|_1 = ||eps(v)||_0
    double u_h1 = 0.0;   // (||v||_0^2 + |v|_1^2)^(1/2)
    double q_l2 = 0.0;
    double pair = 0.0;   // (||v||_1^2 + ||q||_0^2)^(1/2)
    double lambda_l2 = 0.0;
};

/// Norms of the difference of two sampled triples over `mesh`, with degree + extra points per direction.
struct DifferenceNorms {
    EnergyNorms total;
    std::vector<double> pair_sq;   // per element
    std::vector<double> lambda_sq; // per element
};

DifferenceNorms difference_norms(const HpMesh& mesh, const Sampler& first, const Sampler& second, int extra_points = 3);

EnergyNorms energy_norms(const DiscreteFields& f);

/// e_p(mu) = ||mu - lambda_N||^2 + psi(p_N) - (mu, p_N), elevated quadrature on the mesh of `n`.
/// Throws FeasibilityError if |mu| > sigma_y at a quadrature point.
double plasticity_error(const ElementTensorField& mu, const DiscreteFields& n, double sigma_y,
                        std::vector<double>* per_element = nullptr);

/// Pointwise radial projection of lambda_N + p_N / 2 onto the sigma_y ball.
ElementTensorField project_mu_star(const DiscreteFields& n, double sigma_y);

/// Galerkin approximation of the auxiliary linear problem on one uniform refinement with degree + 1.
/// The returned fields carry lambda = 0.
DiscreteFields solve_auxiliary(const DiscreteFields& n, const MaterialLaw& material, const LoadData& loads);

struct ErrorReport {
    double energy_norm_pair = 0.0;
    double lambda_error = 0.0;
    double e_plast = 0.0;
    double aux_error = 0.0;
    std::vector<double> pair_per_element;
    std::vector<double> lambda_per_element;
    std::vector<double> e_plast_per_element;
    std::vector<double> aux_per_element;
};

/// Everything the convergence study needs to rebuild a problem on a given mesh.
struct Problem {
    std::string name;
    HpMesh mesh;
    MaterialLaw material;
    LoadData loads;
    std::optional<ExactSolution> exact;
    /// Regularity indices of the reference solution (s, t, l); metadata only, infinite for smooth fields.
    double s = std::numeric_limits<double>::quiet_NaN();
    double t = std::numeric_limits<double>::quiet_NaN();
    double l = std::numeric_limits<double>::quiet_NaN();
};

enum class ReferenceMode { Manufactured, Overkill };

struct StudyOptions {
    int levels = 4;
    ReferenceMode reference = ReferenceMode::Manufactured;
    SolverConfig solver;
    bool auxiliary = true;
};

struct StudyLevel {
    int level = 0;
    double h_max = 0.0;
    int p_min = 0;
    std::size_t ndof = 0;
    double err_pair = 0.0;
    double err_lambda = 0.0;
    double e_plast = 0.0;
    double aux_err = 0.0;
    double order_pair = std::numeric_limits<double>::quiet_NaN();
    int newton_iterations = 0;
    bool converged = false;
};

struct ConvergenceStudy {
    std::string problem;
    ReferenceMode reference = ReferenceMode::Manufactured;
    std::vector<StudyLevel> levels;
    double s = std::numeric_limits<double>::quiet_NaN();
    double t = std::numeric_limits<double>::quiet_NaN();
    double l = std::numeric_limits<double>::quiet_NaN();
    /// False if err_pair increased between consecutive levels.
    bool monotone = true;
};

/// Result of solving one problem on one mesh.
struct LevelSolution {
    std::shared_ptr<const DofSystem> dofs;
    SaddleSystem system;
    SolveReport report;
    DiscreteFields fields;
};

/// Assemble, solve with semismooth Newton and recover lambda.
LevelSolution solve_problem(const HpMesh& mesh, const MaterialLaw& material, const LoadData& loads,
                            const SolverConfig& config);

/// Error quantities of a discrete solution against a reference sampler integrated on `reference_mesh`.
ErrorReport evaluate_errors(const LevelSolution& sol, const Problem& problem, const HpMesh& reference_mesh,
                            const Sampler& reference, bool auxiliary);

ConvergenceStudy run_convergence_study(const Problem& problem, const StudyOptions& options);

/// Observed order log(e0 / e1) / log(h0 / h1).
double observed_order(double e0, double e1, double h0, double h1);

void write_study_csv(std::ostream& out, const ConvergenceStudy& study);

} // namespace hpep
