#include "hpep/tensors.hpp"

#include "hpep/errors.hpp"

#include <cmath>
#include <string>

namespace hpep {

namespace {

void require_dim(int dim)
{
    if (dim != 2 && dim != 3)
        throw UnsupportedDimensionError("unsupported dimension " + std::to_string(dim));
}

std::vector<SymTensor> make_basis(int dim)
{
    const double r2 = 1.0 / std::sqrt(2.0);
    const double r6 = 1.0 / std::sqrt(6.0);
    std::vector<Eigen::MatrixXd> mats;
    if (dim == 2) {
        Eigen::MatrixXd p1(2, 2), p2(2, 2);
        p1 << 1, 0, 0, -1;
        p2 << 0, 1, 1, 0;
        mats = {r2 * p1, r2 * p2};
    } else {
        Eigen::MatrixXd p1(3, 3), p2(3, 3), p3(3, 3), p4(3, 3), p5(3, 3);
        p1 << 1, 0, 0, 0, -1, 0, 0, 0, 0;
        p2 << 1, 0, 0, 0, 1, 0, 0, 0, -2;
        p3 << 0, 1, 0, 1, 0, 0, 0, 0, 0;
        p4 << 0, 0, 1, 0, 0, 0, 1, 0, 0;
        p5 << 0, 0, 0, 0, 0, 1, 0, 1, 0;
        mats = {r2 * p1, r6 * p2, r2 * p3, r2 * p4, r2 * p5};
    }
    std::vector<SymTensor> out;
    out.reserve(mats.size());
    for (const auto& m : mats)
        out.push_back(SymTensor::from_matrix(m));
    return out;
}

} // namespace

int deviatoric_size(int dim)
{
    require_dim(dim);
    return (dim - 1) * (dim + 2) / 2;
}

SymTensor::SymTensor(int dim) : dim_(dim), m_(Eigen::Matrix3d::Zero())
{
    require_dim(dim);
}

SymTensor SymTensor::from_matrix(const Eigen::MatrixXd& m)
{
    if (m.rows() != m.cols())
        throw Error("SymTensor: matrix is not square");
    const int dim = static_cast<int>(m.rows());
    require_dim(dim);
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw Error("SymTensor: matrix is not symmetric");
    SymTensor t(dim);
    t.m_.topLeftCorner(dim, dim) = 0.5 * (m + m.transpose());
    return t;
}

SymTensor SymTensor::identity(int dim)
{
    SymTensor t(dim);
    for (int i = 0; i < dim; ++i)
        t.m_(i, i) = 1.0;
    return t;
}

double SymTensor::trace() const { return m_.trace(); }

SymTensor& SymTensor::operator+=(const SymTensor& o)
{
    m_ += o.m_;
    return *this;
}

SymTensor& SymTensor::operator-=(const SymTensor& o)
{
    m_ -= o.m_;
    return *this;
}

SymTensor& SymTensor::operator*=(double s)
{
    m_ *= s;
    return *this;
}

DevTensor::DevTensor(int dim) : dim_(dim), c_(DevCoeffs::Zero(deviatoric_size(dim))) {}

DevTensor::DevTensor(int dim, const DevCoeffs& coeffs) : dim_(dim), c_(coeffs)
{
    if (coeffs.size() != deviatoric_size(dim))
        throw Error("DevTensor: coefficient count does not match dimension");
}

DevTensor& DevTensor::operator+=(const DevTensor& o)
{
    c_ += o.c_;
    return *this;
}

DevTensor& DevTensor::operator-=(const DevTensor& o)
{
    c_ -= o.c_;
    return *this;
}

DevTensor& DevTensor::operator*=(double s)
{
    c_ *= s;
    return *this;
}

void MaterialLaw::validate() const
{
    if (!(lame_lambda >= 0.0))
        throw ConfigError("material: lambda must be >= 0");
    if (!(lame_mu > 0.0))
        throw ConfigError("material: mu must be > 0");
    if (!(hardening_k > 0.0))
        throw ConfigError("material: hardening must be > 0");
    if (!(yield_sigma_y > 0.0))
        throw ConfigError("material: sigma_y must be > 0");
}

const std::vector<SymTensor>& basis_S(int dim)
{
    require_dim(dim);
    static const std::vector<SymTensor> b2 = make_basis(2);
    static const std::vector<SymTensor> b3 = make_basis(3);
    return dim == 2 ? b2 : b3;
}

double frobenius_dot(const SymTensor& a, const SymTensor& b)
{
    return a.storage().cwiseProduct(b.storage()).sum();
}

double frobenius_norm(const SymTensor& t) { return t.storage().norm(); }

DevTensor deviator(const SymTensor& t)
{
    const auto& basis = basis_S(t.dim());
    DevTensor q(t.dim());
    // Basis tensors are trace-free, so projecting t is the same as projecting dev(t).
    for (int k = 0; k < q.size(); ++k)
        q.coeffs()[k] = frobenius_dot(basis[k], t);
    return q;
}

SymTensor reconstruct(const DevTensor& q)
{
    const auto& basis = basis_S(q.dim());
    SymTensor t(q.dim());
    for (int k = 0; k < q.size(); ++k)
        t += q[k] * basis[k];
    return t;
}

SymTensor apply_C(const SymTensor& e, const MaterialLaw& m)
{
    return 2.0 * m.lame_mu * e + (m.lame_lambda * e.trace()) * SymTensor::identity(e.dim());
}

DevTensor apply_H(const DevTensor& q, const MaterialLaw& m) { return m.hardening_k * q; }

double psi_density(const DevTensor& q, double sigma_y) { return sigma_y * q.norm(); }

SymTensor random_sym(int dim, std::mt19937_64& rng, double scale)
{
    std::uniform_real_distribution<double> u(-scale, scale);
    Eigen::MatrixXd m(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = i; j < dim; ++j)
            m(i, j) = m(j, i) = u(rng);
    return SymTensor::from_matrix(m);
}

DevTensor random_dev(int dim, std::mt19937_64& rng, double scale)
{
    std::uniform_real_distribution<double> u(-scale, scale);
    DevTensor q(dim);
    for (int k = 0; k < q.size(); ++k)
        q.coeffs()[k] = u(rng);
    return q;
}

} // namespace hpep
