#pragma once

#include "hpep/assembly.hpp"
#include "hpep/linear_algebra.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace hpep {

/// Clarke element chosen where |mu + rho q| equals sigma exactly.
enum class KinkBranch { Inactive, Active };

struct SolverConfig {
    double rho = 1.0;
    double tol = 1e-10;
    int max_iter = 50;
    KinkBranch kink_branch = KinkBranch::Inactive;
    /// Backtracking on |F| (off by default; the plain iteration is the reference method).
    bool damping = false;
    bool verbose = false;
    /// Iteration log sink used when verbose is set; standard output if null.
    std::ostream* log = nullptr;

    /// Throws ConfigError unless rho > 0, tol > 0 and max_iter >= 0.
    void validate() const;
};

/// Iterate (a, b, c): displacement, plastic strain (primal basis), multiplier (dual basis).
struct NewtonState {
    Eigen::VectorXd a;
    Eigen::VectorXd b;
    Eigen::VectorXd c;

    static NewtonState zeros(std::size_t u_size, std::size_t q_size);
};

struct IterationRecord {
    int k = 0;
    double residual = 0.0;
    std::size_t n_active = 0;
    std::size_t n_inactive = 0;
};

struct SolveReport {
    NewtonState state;
    /// One record per evaluated iterate, starting with the initial guess (k = 0).
    std::vector<IterationRecord> history;
    bool converged = false;
    /// Number of Newton steps (linear solves) taken.
    int iterations = 0;
    double residual = 0.0;
    std::string message;
};

/// chi_{i,rho}(q, mu) = max{sigma, |mu + rho q|} mu - sigma (mu + rho q).
Eigen::VectorXd chi(const Eigen::VectorXd& q, const Eigen::VectorXd& mu, double sigma, double rho);

struct ChiJacobian {
    Eigen::MatrixXd dq;
    Eigen::MatrixXd dmu;
    bool active = false;
};

/// One element of the Clarke generalized Jacobian of chi at (q, mu).
ChiJacobian chi_subdifferential(const Eigen::VectorXd& q, const Eigen::VectorXd& mu, double sigma, double rho,
                                KinkBranch branch = KinkBranch::Inactive);

/// True when |mu + rho q| > sigma, or equals sigma and the active branch is selected.
bool is_active(const Eigen::VectorXd& q, const Eigen::VectorXd& mu, double sigma, double rho, KinkBranch branch);

/// F(a, b, c) = (A a + B b + l; B^T a + C b + D c; chi_i(b_i, c_i) for all i).
Eigen::VectorXd evaluate_F(const SaddleSystem& sys, const Eigen::VectorXd& sigma, const NewtonState& s, double rho);

/// Newton matrix H for the given iterate; returns the number of active nodes through `n_active`.
SparseMatrix newton_matrix(const SaddleSystem& sys, const Eigen::VectorXd& sigma, const NewtonState& s, double rho,
                           KinkBranch branch, std::size_t* n_active = nullptr);

/// Elastic predictor: A a = -l, b = 0, c = 0.
NewtonState elastic_predictor(const SaddleSystem& sys);

/// Semismooth Newton iteration. Non-convergence is reported in the result, not thrown.
/// Throws SingularMatrixError if a Newton matrix cannot be factored.
SolveReport newton_solve(const SaddleSystem& sys, const Eigen::VectorXd& sigma, const SolverConfig& config,
                         const NewtonState* initial = nullptr);

struct NodeComplementarity {
    double lambda_norm = 0.0;
    double p_norm = 0.0;
    bool feasible = true;      // |lambda_i| <= sigma_i + 1e-9
    bool complementary = true; // |lambda_i : p_i - sigma_i |p_i|| <= 1e-9 (1 + |p_i|)
    bool inactive_ok = true;   // strictly inside the ball implies p_i = 0
    bool parallel_ok = true;   // on the sphere, p_i = c lambda_i with c >= 0
    bool ok() const { return feasible && complementary && inactive_ok && parallel_ok; }
};

struct ComplementarityReport {
    std::vector<NodeComplementarity> nodes;
    std::size_t n_on_sphere = 0;
    std::size_t n_plastic = 0; // nodes with p_i != 0
    double max_bound_violation = 0.0;
    double max_gap = 0.0;
    std::size_t n_failed() const;
    bool ok() const { return n_failed() == 0; }
};

/// Per-node check of the decoupled complementarity conditions for p_i = b_i, lambda_i = c_i.
ComplementarityReport check_complementarity(const Eigen::VectorXd& sigma, const Eigen::VectorXd& b,
                                            const Eigen::VectorXd& c, int L = 2);

} // namespace hpep
