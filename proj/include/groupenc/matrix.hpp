#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace groupenc {

using Index = std::size_t;

/// Dense row-major matrix of 64-bit reals. Rows are samples, columns are
/// features. This is the data currency of the whole library.
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(Index rows, Index cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static DenseMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
    static DenseMatrix identity(Index n);

    Index rows() const { return rows_; }
    Index cols() const { return cols_; }
    Index size() const { return data_.size(); }

    double& operator()(Index r, Index c) { return data_[r * cols_ + c]; }
    double operator()(Index r, Index c) const { return data_[r * cols_ + c]; }

    double* row_ptr(Index r) { return data_.data() + r * cols_; }
    const double* row_ptr(Index r) const { return data_.data() + r * cols_; }
    std::span<double> row(Index r) { return {row_ptr(r), cols_}; }
    std::span<const double> row(Index r) const { return {row_ptr(r), cols_}; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool all_finite() const;
    void fill(double value);

    bool operator==(const DenseMatrix& other) const = default;

private:
    Index rows_ = 0;
    Index cols_ = 0;
    std::vector<double> data_;
};

/// a * b. Throws ShapeError on inner-dimension mismatch.
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);

/// transpose(a) * b, without materialising the transpose.
DenseMatrix matmul_transpose_a(const DenseMatrix& a, const DenseMatrix& b);

/// a * transpose(b), without materialising the transpose.
DenseMatrix matmul_transpose_b(const DenseMatrix& a, const DenseMatrix& b);

DenseMatrix transpose(const DenseMatrix& m);

/// Gathers the listed rows into a new matrix, in the given order.
DenseMatrix gather_rows(const DenseMatrix& m, std::span<const std::uint32_t> indices);

/// Sums of each column, length cols.
std::vector<double> column_sums(const DenseMatrix& m);

} // namespace groupenc
