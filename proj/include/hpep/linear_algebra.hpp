#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

namespace hpep {

using Triplet = Eigen::Triplet<double>;

/// Compressed-row sparse matrix with sorted, unique column indices per row.
class SparseMatrix {
public:
    using Storage = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;

    SparseMatrix() = default;
    SparseMatrix(Eigen::Index rows, Eigen::Index cols);
    explicit SparseMatrix(Storage m, bool symmetric = false);

    /// Duplicate entries are summed; explicit zeros from cancellation are kept out.
    static SparseMatrix from_triplets(Eigen::Index rows, Eigen::Index cols, const std::vector<Triplet>& entries,
                                      bool symmetric = false);
    static SparseMatrix identity(Eigen::Index n);
    static SparseMatrix diagonal(const Eigen::VectorXd& d);

    Eigen::Index rows() const { return m_.rows(); }
    Eigen::Index cols() const { return m_.cols(); }
    Eigen::Index nnz() const { return m_.nonZeros(); }

    std::span<const int> row_offsets() const { return {m_.outerIndexPtr(), static_cast<std::size_t>(m_.rows() + 1)}; }
    std::span<const int> col_indices() const { return {m_.innerIndexPtr(), static_cast<std::size_t>(m_.nonZeros())}; }
    std::span<const double> values() const { return {m_.valuePtr(), static_cast<std::size_t>(m_.nonZeros())}; }

    double coeff(Eigen::Index i, Eigen::Index j) const { return m_.coeff(i, j); }
    const Storage& storage() const { return m_; }

    /// Caller's claim that the matrix is symmetric; selects the Cholesky path in factor_solve.
    bool symmetric_flag() const { return symmetric_; }
    /// Verifies ||M - M^T||_max <= rel_tol * ||M||_max.
    bool is_symmetric(double rel_tol = 1e-12) const;

    Eigen::VectorXd operator*(const Eigen::VectorXd& x) const { return m_ * x; }
    SparseMatrix transpose() const;
    Eigen::MatrixXd to_dense() const { return Eigen::MatrixXd(m_); }
    double max_abs() const;

private:
    Storage m_;
    bool symmetric_ = false;
};

/// Reusable direct factorization: sparse Cholesky for symmetric-flagged matrices
/// (falls back to LU if not positive definite), sparse LU with partial pivoting otherwise.
class SparseFactorization {
public:
    explicit SparseFactorization(const SparseMatrix& m);
    ~SparseFactorization();
    SparseFactorization(SparseFactorization&&) noexcept;
    SparseFactorization& operator=(SparseFactorization&&) noexcept;

    /// Solve with up to two steps of iterative refinement.
    Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
    bool used_cholesky() const;
    double last_relative_residual() const { return last_residual_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    SparseMatrix matrix_;
    mutable double last_residual_ = 0.0;
};

/// One-shot solve; throws SingularMatrixError on pivot failure.
Eigen::VectorXd factor_solve(const SparseMatrix& m, const Eigen::VectorXd& rhs);

/// True iff a sparse Cholesky factorization succeeds.
bool cholesky_succeeds(const SparseMatrix& m);

/// Smallest eigenvalue of a symmetric matrix of dimension <= 500.
double smallest_eigenvalue_dense(const Eigen::MatrixXd& m);
double smallest_eigenvalue_dense(const SparseMatrix& m);

/// "row col value" per line, 0-based, 17 significant digits.
void write_coordinate(std::ostream& out, const SparseMatrix& m);

} // namespace hpep
