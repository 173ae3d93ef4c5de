#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace spectrain {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  std::vector<double>& data() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  std::vector<double> column(std::size_t c) const;
  Matrix transpose() const;
  /// First `k` columns.
  Matrix left_columns(std::size_t k) const;

  double frobenius_norm() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
std::vector<double> matvec(const Matrix& a, std::span<const double> x);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

/// Eigen-decomposition of a symmetric matrix.
struct SymmetricEigen {
  std::vector<double> values;  // descending
  Matrix vectors;              // column j pairs with values[j]
  int sweeps = 0;
};

/// Cyclic Jacobi rotations on a dense symmetric matrix. Iterates until the
/// off-diagonal Frobenius norm drops below `rel_tol * ||A||_F`. Eigenpairs
/// come back sorted by descending eigenvalue, each eigenvector signed so its
/// largest-magnitude entry is positive.
SymmetricEigen jacobi_eigen(const Matrix& a, double rel_tol = 1e-12, int max_sweeps = 100);

/// Solves A x = b for symmetric positive definite A via Cholesky.
/// Throws NumericError when A is not positive definite.
std::vector<double> cholesky_solve(const Matrix& a, std::span<const double> b);

/// Orthonormalizes the columns of a square matrix by modified Gram-Schmidt
/// (the Q factor of a QR decomposition with positive diagonal R).
Matrix orthonormalize_columns(const Matrix& a);

}  // namespace spectrain
