#include "hpep/linear_algebra.hpp"

#include "hpep/errors.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <cctype>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <string>

namespace hpep {

SparseMatrix::SparseMatrix(Eigen::Index rows, Eigen::Index cols) : m_(rows, cols) {}

SparseMatrix::SparseMatrix(Storage m, bool symmetric) : m_(std::move(m)), symmetric_(symmetric)
{
    m_.makeCompressed();
}

SparseMatrix SparseMatrix::from_triplets(Eigen::Index rows, Eigen::Index cols, const std::vector<Triplet>& entries,
                                         bool symmetric)
{
    Storage m(rows, cols);
    m.setFromTriplets(entries.begin(), entries.end());
    m.prune(0.0);
    return SparseMatrix(std::move(m), symmetric);
}

SparseMatrix SparseMatrix::identity(Eigen::Index n)
{
    Storage m(n, n);
    m.setIdentity();
    return SparseMatrix(std::move(m), true);
}

SparseMatrix SparseMatrix::diagonal(const Eigen::VectorXd& d)
{
    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(d.size()));
    for (Eigen::Index i = 0; i < d.size(); ++i)
        t.emplace_back(i, i, d[i]);
    return from_triplets(d.size(), d.size(), t, true);
}

bool SparseMatrix::is_symmetric(double rel_tol) const
{
    if (rows() != cols())
        return false;
    const Storage diff = m_ - Storage(m_.transpose());
    double dmax = 0.0;
    for (int k = 0; k < diff.outerSize(); ++k)
        for (Storage::InnerIterator it(diff, k); it; ++it)
            dmax = std::max(dmax, std::abs(it.value()));
    return dmax <= rel_tol * max_abs();
}

SparseMatrix SparseMatrix::transpose() const { return SparseMatrix(Storage(m_.transpose()), symmetric_); }

double SparseMatrix::max_abs() const
{
    double v = 0.0;
    for (double x : values())
        v = std::max(v, std::abs(x));
    return v;
}

namespace {

std::ptrdiff_t trailing_index(const std::string& msg)
{
    std::size_t end = msg.size();
    while (end > 0 && !std::isdigit(static_cast<unsigned char>(msg[end - 1])))
        --end;
    std::size_t begin = end;
    while (begin > 0 && std::isdigit(static_cast<unsigned char>(msg[begin - 1])))
        --begin;
    if (begin == end)
        return -1;
    return std::stoll(msg.substr(begin, end - begin));
}

using ColMajor = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

} // namespace

struct SparseFactorization::Impl {
    std::unique_ptr<Eigen::SimplicialLLT<ColMajor>> llt;
    std::unique_ptr<Eigen::SparseLU<ColMajor, Eigen::COLAMDOrdering<int>>> lu;

    Eigen::VectorXd solve(const Eigen::VectorXd& b) const { return llt ? Eigen::VectorXd(llt->solve(b)) : Eigen::VectorXd(lu->solve(b)); }
};

SparseFactorization::SparseFactorization(const SparseMatrix& m) : impl_(std::make_unique<Impl>()), matrix_(m)
{
    if (m.rows() != m.cols())
        throw Error("factor_solve: matrix is not square");
    ColMajor a(m.storage());
    a.makeCompressed();
    if (m.symmetric_flag()) {
        impl_->llt = std::make_unique<Eigen::SimplicialLLT<ColMajor>>(a);
        if (impl_->llt->info() == Eigen::Success)
            return;
        impl_->llt.reset();
    }
    impl_->lu = std::make_unique<Eigen::SparseLU<ColMajor, Eigen::COLAMDOrdering<int>>>();
    impl_->lu->analyzePattern(a);
    impl_->lu->factorize(a);
    if (impl_->lu->info() != Eigen::Success) {
        const std::string msg = impl_->lu->lastErrorMessage();
        throw SingularMatrixError("singular matrix: " + msg, trailing_index(msg));
    }
}

SparseFactorization::~SparseFactorization() = default;
SparseFactorization::SparseFactorization(SparseFactorization&&) noexcept = default;
SparseFactorization& SparseFactorization::operator=(SparseFactorization&&) noexcept = default;

bool SparseFactorization::used_cholesky() const { return impl_->llt != nullptr; }

Eigen::VectorXd SparseFactorization::solve(const Eigen::VectorXd& rhs) const
{
    if (rhs.size() != matrix_.rows())
        throw Error("factor_solve: right-hand side has wrong length");
    const double bnorm = rhs.norm();
    if (bnorm == 0.0) {
        last_residual_ = 0.0;
        return Eigen::VectorXd::Zero(rhs.size());
    }
    Eigen::VectorXd x = impl_->solve(rhs);
    Eigen::VectorXd r = rhs - matrix_ * x;
    for (int step = 0; step < 2 && r.norm() > 1e-15 * bnorm; ++step) {
        x += impl_->solve(r);
        r = rhs - matrix_ * x;
    }
    last_residual_ = r.norm() / bnorm;
    if (!x.allFinite() || !(last_residual_ < 1e-6))
        throw SingularMatrixError("numerically singular matrix (relative residual " + std::to_string(last_residual_) +
                                      ")",
                                  -1);
    return x;
}

Eigen::VectorXd factor_solve(const SparseMatrix& m, const Eigen::VectorXd& rhs)
{
    return SparseFactorization(m).solve(rhs);
}

bool cholesky_succeeds(const SparseMatrix& m)
{
    ColMajor a(m.storage());
    Eigen::SimplicialLLT<ColMajor> llt(a);
    return llt.info() == Eigen::Success;
}

double smallest_eigenvalue_dense(const Eigen::MatrixXd& m)
{
    if (m.rows() != m.cols())
        throw Error("smallest_eigenvalue_dense: matrix is not square");
    if (m.rows() > 500)
        throw Error("smallest_eigenvalue_dense: dimension exceeds 500");
    const double scale = std::max(1e-300, m.cwiseAbs().maxCoeff());
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw Error("smallest_eigenvalue_dense: matrix is not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().minCoeff();
}

double smallest_eigenvalue_dense(const SparseMatrix& m) { return smallest_eigenvalue_dense(m.to_dense()); }

void write_coordinate(std::ostream& out, const SparseMatrix& m)
{
    const auto old = out.precision(17);
    const auto& s = m.storage();
    for (int r = 0; r < s.outerSize(); ++r)
        for (SparseMatrix::Storage::InnerIterator it(s, r); it; ++it)
            out << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
    out.precision(old);
}

} // namespace hpep
