#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "saflab/errors.hpp"

namespace saflab {

// Dense real matrix. Storage is COLUMN-MAJOR: entry (i, j) lives at
// data()[j * rows() + i]. This makes vec() coincide with the storage order
// (column stacking) and keeps column operations contiguous for the kernels.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  // Validating constructor for externally supplied entries: checks the
  // length and that every entry is finite.
  static Matrix from_data(std::size_t rows, std::size_t cols,
                          std::vector<double> entries);

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t i, std::size_t j) {
    return data_[j * rows_ + i];
  }
  double operator()(std::size_t i, std::size_t j) const {
    return data_[j * rows_ + i];
  }

  double* col(std::size_t j) { return data_.data() + j * rows_; }
  const double* col(std::size_t j) const { return data_.data() + j * rows_; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  const std::vector<double>& entries() const { return data_; }

  Matrix transposed() const;
  double frobenius_norm() const;
  double max_abs() const;
  double trace() const;
  bool all_finite() const;

  bool operator==(const Matrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// c = a * b (dims checked).
Matrix multiply(const Matrix& a, const Matrix& b);

// y = a * x (dims checked).
std::vector<double> matvec(const Matrix& a, std::span<const double> x);
// y = a * x into a caller buffer (y.size() == a.rows()).
void matvec_into(const Matrix& a, std::span<const double> x,
                 std::span<double> y);

// Kronecker product: block (i, j) of the result is x(i, j) * y.
// Result is (x.rows*y.rows) x (x.cols*y.cols); dimension products that do
// not fit in size_t raise dimension_error.
Matrix kron(const Matrix& x, const Matrix& y);

// Column-stacking vectorization and its inverse. unvec without explicit
// dimensions requires a perfect-square length.
std::vector<double> vec(const Matrix& x);
Matrix unvec(std::span<const double> v);
Matrix unvec(std::span<const double> v, std::size_t rows, std::size_t cols);

// Solves a x = b by Gaussian elimination with scaled partial pivoting.
// Raises singular_matrix_error when a pivot falls below 1e-12 times the
// scale of its row.
std::vector<double> solve(const Matrix& a, std::span<const double> b);

struct EigPair {
  double value = 0.0;
  std::vector<double> vector;
};

// Largest (algebraic) eigenvalue of a symmetric matrix by shifted power
// iteration from a deterministic start vector. Input must be symmetric
// within 1e-10 relative to its largest entry, else contract_violation.
// The result satisfies ||a v - lambda v||_2 <= 1e-8 ||a||_F and is at least
// the Rayleigh quotient of 8 fixed probe vectors.
EigPair max_eig_sym(const Matrix& a);

// Spectral-radius estimate by normalized power-type iteration: the growth
// rate (||a^k x||)^(1/k) from a fixed pseudo-random start, up to 2000
// iterations with renormalization each step. This is an estimate valid for
// generic start vectors, not a certified eigensolve; accuracy is roughly
// 1e-3 for well-separated spectra.
double spectral_radius_estimate(const Matrix& a);

}  // namespace saflab
