#pragma once
// Compressed-row sparse matrix and a reusable sparse LU factorization.

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/OrderingMethods>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "dlnens/error.hpp"

namespace dlnens::fem {

using Vector = Eigen::VectorXd;

struct Triplet {
    int row;
    int col;
    double value;
};

class SparseMatrix {
public:
    SparseMatrix() = default;
    SparseMatrix(int rows, int cols) : rows_(rows), cols_(cols), row_ptr_(static_cast<std::size_t>(rows) + 1, 0) {}

    /// Duplicates are summed; explicit zeros are kept so the pattern depends only on positions.
    static SparseMatrix from_triplets(int rows, int cols, std::vector<Triplet> triplets)
    {
        for (const auto& t : triplets) {
            if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols) {
                throw InvalidArgument("triplet outside matrix bounds");
            }
        }
        std::stable_sort(triplets.begin(), triplets.end(),
                         [](const Triplet& a, const Triplet& b) { return a.row != b.row ? a.row < b.row : a.col < b.col; });
        SparseMatrix a(rows, cols);
        a.col_idx_.reserve(triplets.size());
        a.values_.reserve(triplets.size());
        for (std::size_t i = 0; i < triplets.size();) {
            std::size_t j = i;
            double sum = 0.0;
            while (j < triplets.size() && triplets[j].row == triplets[i].row && triplets[j].col == triplets[i].col) {
                sum += triplets[j].value;
                ++j;
            }
            a.col_idx_.push_back(triplets[i].col);
            a.values_.push_back(sum);
            ++a.row_ptr_[static_cast<std::size_t>(triplets[i].row) + 1];
            i = j;
        }
        std::partial_sum(a.row_ptr_.begin(), a.row_ptr_.end(), a.row_ptr_.begin());
        return a;
    }

    static SparseMatrix identity(int n)
    {
        std::vector<Triplet> t;
        t.reserve(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) t.push_back({i, i, 1.0});
        return from_triplets(n, n, std::move(t));
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    std::size_t nonzeros() const { return values_.size(); }

    const std::vector<int>& row_ptr() const { return row_ptr_; }
    const std::vector<int>& col_idx() const { return col_idx_; }
    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }

    /// Position of (r, c) in the value array, or -1.
    long find(int r, int c) const
    {
        const auto b = col_idx_.begin() + row_ptr_[r];
        const auto e = col_idx_.begin() + row_ptr_[r + 1];
        const auto it = std::lower_bound(b, e, c);
        return (it != e && *it == c) ? static_cast<long>(it - col_idx_.begin()) : -1;
    }

    double coeff(int r, int c) const
    {
        const long p = find(r, c);
        return p < 0 ? 0.0 : values_[static_cast<std::size_t>(p)];
    }

    bool same_pattern(const SparseMatrix& o) const
    {
        return rows_ == o.rows_ && cols_ == o.cols_ && row_ptr_ == o.row_ptr_ && col_idx_ == o.col_idx_;
    }

    Vector operator*(const Vector& x) const
    {
        if (x.size() != cols_) throw DimensionMismatch("matrix-vector product size mismatch");
        Vector y = Vector::Zero(rows_);
        multiply_add(x, y);
        return y;
    }

    /// y += A x
    void multiply_add(const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> y, double scale = 1.0) const
    {
        for (int r = 0; r < rows_; ++r) {
            double s = 0.0;
            for (int p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) s += values_[p] * x[col_idx_[p]];
            y[r] += scale * s;
        }
    }

    /// y += A^T x
    void transpose_multiply_add(const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> y, double scale = 1.0) const
    {
        for (int r = 0; r < rows_; ++r) {
            const double xr = scale * x[r];
            for (int p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) y[col_idx_[p]] += values_[p] * xr;
        }
    }

    SparseMatrix transpose() const
    {
        std::vector<Triplet> t;
        t.reserve(values_.size());
        for (int r = 0; r < rows_; ++r) {
            for (int p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) t.push_back({col_idx_[p], r, values_[p]});
        }
        return from_triplets(cols_, rows_, std::move(t));
    }

    /// a * this + b * other on a shared pattern.
    SparseMatrix combine(double a, const SparseMatrix& other, double b) const
    {
        if (!same_pattern(other)) throw DimensionMismatch("combine needs identical sparsity patterns");
        SparseMatrix r = *this;
        for (std::size_t i = 0; i < values_.size(); ++i) r.values_[i] = a * values_[i] + b * other.values_[i];
        return r;
    }

    double max_abs() const
    {
        double m = 0.0;
        for (double v : values_) m = std::max(m, std::abs(v));
        return m;
    }

    Eigen::SparseMatrix<double> to_eigen() const
    {
        Eigen::SparseMatrix<double, Eigen::RowMajor> rm(rows_, cols_);
        rm.resizeNonZeros(static_cast<Eigen::Index>(values_.size()));
        std::copy(row_ptr_.begin(), row_ptr_.end(), rm.outerIndexPtr());
        std::copy(col_idx_.begin(), col_idx_.end(), rm.innerIndexPtr());
        std::copy(values_.begin(), values_.end(), rm.valuePtr());
        return Eigen::SparseMatrix<double>(rm);
    }

    Eigen::MatrixXd to_dense() const
    {
        Eigen::MatrixXd d = Eigen::MatrixXd::Zero(rows_, cols_);
        for (int r = 0; r < rows_; ++r) {
            for (int p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) d(r, col_idx_[p]) = values_[p];
        }
        return d;
    }

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<int> row_ptr_{0};
    std::vector<int> col_idx_;
    std::vector<double> values_;
};

/// Sparse LU (COLAMD ordering) that keeps its symbolic analysis while the pattern is unchanged.
class Factorization {
public:
    void factor(const SparseMatrix& a)
    {
        if (a.rows() != a.cols()) throw DimensionMismatch("factorization needs a square matrix");
        const bool reuse = analyzed_ && a.row_ptr() == pattern_rows_ && a.col_idx() == pattern_cols_;
        matrix_ = a.to_eigen();
        if (!reuse) {
            lu_.analyzePattern(matrix_);
            pattern_rows_ = a.row_ptr();
            pattern_cols_ = a.col_idx();
            analyzed_ = true;
            ++analyses_;
        }
        lu_.factorize(matrix_);
        if (lu_.info() != Eigen::Success) {
            factored_ = false;
            throw SingularMatrix("sparse LU failed: " + lu_.lastErrorMessage());
        }
        factored_ = true;
        ++factorizations_;
    }

    Vector solve(const Vector& b)
    {
        require_factored(b.size());
        Vector x = lu_.solve(b);
        ++solves_;
        return x;
    }

    /// One column per right-hand side, all against the same factors.
    Eigen::MatrixXd solve_many(const Eigen::MatrixXd& b)
    {
        require_factored(b.rows());
        Eigen::MatrixXd x(b.rows(), b.cols());
        for (Eigen::Index j = 0; j < b.cols(); ++j) {
            x.col(j) = lu_.solve(b.col(j));
            ++solves_;
        }
        return x;
    }

    std::size_t factorizations() const { return factorizations_; }
    std::size_t analyses() const { return analyses_; }
    std::size_t solves() const { return solves_; }

private:
    void require_factored(Eigen::Index n) const
    {
        if (!factored_) throw Error("solve called before a successful factorization");
        if (n != matrix_.rows()) throw DimensionMismatch("right-hand side size mismatch");
    }

    Eigen::SparseMatrix<double> matrix_;
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu_;
    std::vector<int> pattern_rows_;
    std::vector<int> pattern_cols_;
    bool analyzed_ = false;
    bool factored_ = false;
    std::size_t factorizations_ = 0;
    std::size_t analyses_ = 0;
    std::size_t solves_ = 0;
};

}  // namespace dlnens::fem
