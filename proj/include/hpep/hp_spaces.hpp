#pragma once

#include "hpep/mesh.hpp"
#include "hpep/tensors.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace hpep {

/// Lagrange polynomials on arbitrary distinct nodes in [-1, 1].
class Lagrange1D {
public:
    explicit Lagrange1D(std::vector<double> nodes);

    int size() const { return static_cast<int>(nodes_.size()); }
    const std::vector<double>& nodes() const { return nodes_; }
    void eval(double x, double* values, double* derivs = nullptr) const;

private:
    std::vector<double> nodes_;
    std::vector<double> denom_;
};

/// Tensor-product Lagrange basis; local index k = i_x + n * i_y.
class TensorLagrange {
public:
    explicit TensorLagrange(std::vector<double> nodes) : b_(std::move(nodes)) {}

    int size() const { return b_.size() * b_.size(); }
    int per_direction() const { return b_.size(); }
    const Lagrange1D& one_d() const { return b_; }
    Eigen::Vector2d node(int k) const;

    /// values: size(); grads: size() x 2 reference gradients (optional).
    void eval(const Eigen::Vector2d& xhat, Eigen::VectorXd& values, Eigen::MatrixX2d* grads = nullptr) const;

private:
    Lagrange1D b_;
};

/// Gauss-Legendre-Lagrange basis of degree p - 1 per variable (p^2 functions).
const TensorLagrange& gauss_lagrange(int p);
/// Gauss-Lobatto-Lagrange basis of degree p per variable ((p + 1)^2 functions).
const TensorLagrange& lobatto_lagrange(int p);

/// Reference Gauss-Legendre-Lagrange function number k (0-based) of an element of degree p.
double lagrange_phi(int degree, int k, const Eigen::Vector2d& xhat);

struct QuadraturePoint {
    Eigen::Vector2d xhat;
    Eigen::Vector2d x;
    double weight;        // reference weight times det(grad M_T)
    Eigen::Matrix2d jinv_t; // inverse transpose of the Jacobian
};

/// Tensor Gauss rule with `points` points per direction mapped onto element e.
std::vector<QuadraturePoint> element_quadrature(const HpMesh& mesh, std::size_t e, int points);

/// Points per direction of the rule used for block entries, load vectors and projections.
inline int elevated_points(int degree) { return degree + 2; }

/// Continuous, Gamma_D-eliminated nodal basis of V_hp (one scalar basis per component).
/// Shared edges carry the smaller degree of their two elements.
class DisplacementSpace {
public:
    struct Link {
        int local;
        std::size_t dof;
        double coeff;
    };

    explicit DisplacementSpace(const HpMesh& mesh);

    /// Scalar basis size M; the vector space has 2M coefficients ordered 2 * i + k.
    std::size_t num_scalar_dofs() const { return num_free_; }
    std::size_t num_dofs() const { return 2 * num_free_; }
    int local_size(std::size_t e) const { return local_size_[e]; }
    int degree(std::size_t e) const { return degree_[e]; }
    const std::vector<Link>& links(std::size_t e) const { return links_[e]; }

    Eigen::Vector2d value(std::size_t e, const Eigen::Vector2d& xhat, const Eigen::VectorXd& a) const;
    /// Physical gradient: row = component, column = derivative direction.
    Eigen::Matrix2d gradient(std::size_t e, const Eigen::Vector2d& xhat, const Eigen::Matrix2d& jinv_t,
                             const Eigen::VectorXd& a) const;

    /// Local element coefficients (local_size x 2) gathered from a global vector.
    Eigen::MatrixX2d gather(std::size_t e, const Eigen::VectorXd& a) const;

private:
    std::size_t num_free_ = 0;
    std::vector<int> local_size_;
    std::vector<int> degree_;
    std::vector<std::vector<Link>> links_;
};

enum class QBasis { Primal, Dual };

/// Bookkeeping for V_hp and Q_hp: the index map zeta, the weights D_i and sigma_i, and the
/// per-element coefficients of the biorthogonal basis in the primal basis.
class DofSystem {
public:
    static constexpr int L = 2;

    DofSystem(HpMesh mesh, double sigma_y);

    const HpMesh& mesh() const { return mesh_; }
    const DisplacementSpace& displacement() const { return disp_; }
    double sigma_y() const { return sigma_y_; }

    std::size_t N() const { return n_total_; }
    std::size_t M() const { return disp_.num_scalar_dofs(); }
    std::size_t u_size() const { return 2 * M(); }
    std::size_t q_size() const { return L * N(); }

    std::size_t zeta(std::size_t e, int k) const { return offset_[e] + static_cast<std::size_t>(k); }
    std::pair<std::size_t, int> zeta_inverse(std::size_t i) const;
    std::size_t element_offset(std::size_t e) const { return offset_[e]; }
    int nodes_in_element(std::size_t e) const { return n_local_[e]; }

    const Eigen::VectorXd& d_weights() const { return d_; }
    const Eigen::VectorXd& sigma_weights() const { return sigma_; }
    /// Row j holds the primal coefficients of the dual function j on element e.
    const Eigen::MatrixXd& dual_coeffs(std::size_t e) const { return dual_[e]; }
    const Eigen::MatrixXd& element_mass(std::size_t e) const { return mass_[e]; }

    /// Value of a Q_hp field with node-major, L-interleaved coefficients.
    DevTensor q_value(const Eigen::VectorXd& coeffs, QBasis basis, std::size_t e, const Eigen::Vector2d& xhat) const;

    /// Converts dual-basis coefficients to primal-basis coefficients of the same field.
    Eigen::VectorXd dual_to_primal(const Eigen::VectorXd& dual) const;

private:
    HpMesh mesh_;
    double sigma_y_;
    DisplacementSpace disp_;
    std::size_t n_total_ = 0;
    std::vector<std::size_t> offset_;
    std::vector<int> n_local_;
    Eigen::VectorXd d_;
    Eigen::VectorXd sigma_;
    std::vector<Eigen::MatrixXd> dual_;
    std::vector<Eigen::MatrixXd> mass_;
};

/// Element mass matrix G_kl = (phi_k, phi_l)_T and the local weights D_k, by the elevated rule.
void element_mass_and_weights(const HpMesh& mesh, std::size_t e, Eigen::MatrixXd& mass, Eigen::VectorXd& weights);

/// Dual coefficient matrix c = diag(D) G^{-1}, so that (phi_i, dual_j)_T = delta_ij D_i.
Eigen::MatrixXd build_biorthogonal(const Eigen::MatrixXd& mass, const Eigen::VectorXd& weights);

/// Pointwise evaluation of a Q_hp field at a physical point; throws LookupError outside the mesh.
DevTensor eval_Qhp_field(const DofSystem& dofs, const Eigen::VectorXd& coeffs, QBasis basis,
                         const Eigen::Vector2d& x);

} // namespace hpep
