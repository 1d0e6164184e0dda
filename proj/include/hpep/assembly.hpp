#pragma once

#include "hpep/hp_spaces.hpp"
#include "hpep/linear_algebra.hpp"
#include "hpep/tensors.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <functional>

namespace hpep {

using VectorField = std::function<Eigen::Vector2d(const Eigen::Vector2d& x)>;
/// Traction as a function of position and outward unit normal.
using TractionField = std::function<Eigen::Vector2d(const Eigen::Vector2d& x, const Eigen::Vector2d& n)>;
/// Tensor field sampled per element: (element, reference point, physical point).
using ElementTensorField = std::function<DevTensor(std::size_t e, const Eigen::Vector2d& xhat, const Eigen::Vector2d& x)>;
/// Displacement gradient field (row = component), same sampling convention.
using ElementGradientField =
    std::function<Eigen::Matrix2d(std::size_t e, const Eigen::Vector2d& xhat, const Eigen::Vector2d& x)>;

/// Volume force f and traction g. The traction acts on Neumann-tagged edges, and also on
/// untagged boundary edges when `traction_on_untagged` is set.
struct LoadData {
    VectorField f;
    TractionField g;
    bool traction_on_untagged = false;

    static LoadData zero() { return {}; }
    static LoadData constant(const Eigen::Vector2d& f, const Eigen::Vector2d& g);
};

/// Block system of the decoupled formulation:
///   [A  B  0] [a]   [l]
///   [B' C  D] [b] + [0] = 0
/// with a in R^{2M} (displacement, 2(i-1)+k), b, c in R^{LN} (node-major, L-interleaved).
struct SaddleSystem {
    SparseMatrix A;
    SparseMatrix B;
    SparseMatrix C;
    Eigen::VectorXd d; // diagonal of D
    Eigen::VectorXd l;

    std::size_t u_size() const { return static_cast<std::size_t>(A.rows()); }
    std::size_t q_size() const { return static_cast<std::size_t>(C.rows()); }
    std::size_t K() const { return u_size() + q_size(); }
    SparseMatrix D() const { return SparseMatrix::diagonal(d); }
};

SparseMatrix assemble_stiffness(const DofSystem& dofs, const MaterialLaw& material);

/// Throws BoundaryConditionError when the mesh has no Dirichlet edges.
SaddleSystem assemble_blocks(const DofSystem& dofs, const MaterialLaw& material, const LoadData& loads);

/// Vector of l(e_k theta_i), i.e. the negative of SaddleSystem::l.
Eigen::VectorXd assemble_load(const DofSystem& dofs, const LoadData& loads);

/// l(v) for v given by its coefficient vector.
double linear_functional_l(const DofSystem& dofs, const LoadData& loads, const Eigen::VectorXd& v);

/// a((v, q), (w, mu)) evaluated by direct quadrature of the fields (q, mu in the primal basis).
double bilinear_a(const DofSystem& dofs, const MaterialLaw& material, const Eigen::VectorXd& v, const Eigen::VectorXd& q,
                  const Eigen::VectorXd& w, const Eigen::VectorXd& mu);

/// L2 projection onto Q_hp, returned in the primal basis.
Eigen::VectorXd project_P_hp(const DofSystem& dofs, const ElementTensorField& q);

/// Nodal interpolation at the Gauss points (primal basis).
Eigen::VectorXd interpolate_J_hp(const DofSystem& dofs, const ElementTensorField& q);

/// Energy projection onto V_hp using a((., 0), (., 0)); needs only the gradient of v.
Eigen::VectorXd project_I_hp(const DofSystem& dofs, const MaterialLaw& material, const ElementGradientField& grad_v);

/// Dense symmetric strain of a displacement gradient.
SymTensor strain(const Eigen::Matrix2d& grad);

} // namespace hpep
