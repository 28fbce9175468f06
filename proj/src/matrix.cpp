#include "meagraph/matrix.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "meagraph/errors.hpp"
#include "meagraph/kernels.hpp"

namespace meagraph {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (rows_ * cols_ != data_.size()) {
        throw ShapeError("Matrix: rows*cols != data length");
    }
}

Matrix Matrix::filled(std::size_t rows, std::size_t cols, double value) {
    Matrix m(rows, cols);
    m.fill(value);
    return m;
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) return {};
    Matrix m(rows.size(), rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != m.cols_) {
            throw ShapeError("Matrix::from_rows: ragged rows");
        }
        for (std::size_t j = 0; j < m.cols_; ++j) m(i, j) = rows[i][j];
    }
    return m;
}

Matrix Matrix::transposed() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i) {
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    }
    return t;
}

bool Matrix::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void Matrix::assert_finite(const char* what) const {
    if (!all_finite()) {
        throw NumericError(std::string("non-finite values in ") + what);
    }
}

void Matrix::fill(double value) {
    for (double& v : data_) v = value;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw ShapeError("matmul: inner dimensions differ (" + std::to_string(a.cols()) +
                         " vs " + std::to_string(b.rows()) + ")");
    }
    Matrix c(a.rows(), b.cols());
    kernels::matmul(a.data(), b.data(), c.data(), a.rows(), a.cols(), b.cols());
    c.assert_finite("matmul result");
    return c;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) throw ShapeError("operator+: shape mismatch");
    Matrix c(a.rows(), a.cols());
    kernels::add(a.data(), b.data(), c.data(), a.size());
    return c;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) throw ShapeError("operator-: shape mismatch");
    Matrix c(a.rows(), a.cols());
    kernels::sub(a.data(), b.data(), c.data(), a.size());
    return c;
}

Matrix operator*(double s, const Matrix& a) {
    Matrix c(a.rows(), a.cols());
    kernels::scale(s, a.data(), c.data(), a.size());
    return c;
}

} // namespace meagraph
