#pragma once

#include <Eigen/Dense>

#include <random>
#include <vector>

namespace hpep {

/// Coefficient storage for trace-free symmetric tensors (at most 5 for d = 3).
using DevCoeffs = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 5, 1>;

/// Number of basis tensors of the trace-free symmetric space, (d-1)(d+2)/2.
int deviatoric_size(int dim);

/// Symmetric d x d matrix, d in {2, 3}.
class SymTensor {
public:
    explicit SymTensor(int dim = 2);

    /// Throws if `m` is not square of size 2 or 3, or not symmetric to 1e-12 relative.
    static SymTensor from_matrix(const Eigen::MatrixXd& m);
    static SymTensor identity(int dim);

    int dim() const noexcept { return dim_; }
    double operator()(int i, int j) const { return m_(i, j); }
    double trace() const;

    /// Top-left dim x dim block is meaningful; the rest is zero.
    const Eigen::Matrix3d& storage() const noexcept { return m_; }
    Eigen::MatrixXd matrix() const { return m_.topLeftCorner(dim_, dim_); }

    SymTensor& operator+=(const SymTensor& o);
    SymTensor& operator-=(const SymTensor& o);
    SymTensor& operator*=(double s);

    friend SymTensor operator+(SymTensor a, const SymTensor& b) { return a += b; }
    friend SymTensor operator-(SymTensor a, const SymTensor& b) { return a -= b; }
    friend SymTensor operator*(double s, SymTensor a) { return a *= s; }

private:
    int dim_;
    Eigen::Matrix3d m_;
};

/// Trace-free symmetric tensor stored by its coefficients in the orthonormal basis.
class DevTensor {
public:
    explicit DevTensor(int dim = 2);
    DevTensor(int dim, const DevCoeffs& coeffs);

    int dim() const noexcept { return dim_; }
    int size() const noexcept { return static_cast<int>(c_.size()); }
    const DevCoeffs& coeffs() const noexcept { return c_; }
    DevCoeffs& coeffs() noexcept { return c_; }
    double operator[](int k) const { return c_[k]; }

    double norm() const { return c_.norm(); }
    double dot(const DevTensor& o) const { return c_.dot(o.c_); }

    DevTensor& operator+=(const DevTensor& o);
    DevTensor& operator-=(const DevTensor& o);
    DevTensor& operator*=(double s);

    friend DevTensor operator+(DevTensor a, const DevTensor& b) { return a += b; }
    friend DevTensor operator-(DevTensor a, const DevTensor& b) { return a -= b; }
    friend DevTensor operator*(double s, DevTensor a) { return a *= s; }

private:
    int dim_;
    DevCoeffs c_;
};

/// Linear isotropic elasticity with linear kinematic hardening and a constant yield stress.
struct MaterialLaw {
    double lame_lambda = 1.0;
    double lame_mu = 1.0;
    double hardening_k = 1.0;
    double yield_sigma_y = 1.0;

    /// Throws ConfigError unless lambda >= 0 and mu, k, sigma_y > 0.
    void validate() const;

    double elastic_ellipticity() const { return 2.0 * lame_mu; }
    double hardening_ellipticity() const { return hardening_k; }
};

/// The orthonormal basis {Phi_1, ..., Phi_L} of the trace-free symmetric matrices.
const std::vector<SymTensor>& basis_S(int dim);

double frobenius_dot(const SymTensor& a, const SymTensor& b);
double frobenius_norm(const SymTensor& t);

DevTensor deviator(const SymTensor& t);
SymTensor reconstruct(const DevTensor& q);

SymTensor apply_C(const SymTensor& e, const MaterialLaw& m);
DevTensor apply_H(const DevTensor& q, const MaterialLaw& m);

/// Dissipation density sigma_y |q|_F.
double psi_density(const DevTensor& q, double sigma_y);

/// Symmetric tensor with entries drawn uniformly from [-scale, scale].
SymTensor random_sym(int dim, std::mt19937_64& rng, double scale = 1.0);
DevTensor random_dev(int dim, std::mt19937_64& rng, double scale = 1.0);

} // namespace hpep
