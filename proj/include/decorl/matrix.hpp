#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace decorl {

/// Dense row-major matrix of doubles. The single numeric carrier for
/// activations, parameters, gradients and covariances.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<const double> flat() const { return {data_.data(), data_.size()}; }

  bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
  bool all_finite() const;

  void fill(double v) { data_.assign(data_.size(), v); }

  bool operator==(const Matrix& o) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// C = A * B. Throws DimensionError when the inner dimensions differ.
Matrix matmul(const Matrix& a, const Matrix& b);

/// C = A * B^T (B stored untransposed, shape [m x k] against A [n x k]).
Matrix matmul_nt(const Matrix& a, const Matrix& b);

/// C = A^T * B (A stored untransposed, shape [k x n] against B [k x m]).
Matrix matmul_tn(const Matrix& a, const Matrix& b);

/// a += s * b, elementwise over equal shapes.
void add_scaled(Matrix& a, const Matrix& b, double s);

/// Largest absolute difference over equal shapes.
double max_abs_diff(const Matrix& a, const Matrix& b);

}  // namespace decorl
