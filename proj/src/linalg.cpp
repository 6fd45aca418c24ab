#include "saflab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "saflab/kernels.hpp"

namespace saflab {

namespace {

std::size_t checked_mul(std::size_t a, std::size_t b, const char* what) {
  std::size_t r = 0;
  if (__builtin_mul_overflow(a, b, &r)) {
    throw dimension_error(std::string("dimension product overflow in ") + what);
  }
  return r;
}

uint64_t splitmix64(uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double norm2(std::span<const double> v) {
  return std::sqrt(kern::sumsq(v.data(), v.size()));
}

}  // namespace

Matrix Matrix::from_data(std::size_t rows, std::size_t cols,
                         std::vector<double> entries) {
  if (entries.size() != checked_mul(rows, cols, "Matrix::from_data")) {
    throw dimension_error("Matrix::from_data: entries length != rows*cols");
  }
  for (double v : entries) {
    if (!std::isfinite(v)) {
      throw numeric_error("Matrix::from_data: non-finite entry");
    }
  }
  Matrix m;
  m.rows_ = rows;
  m.cols_ = cols;
  m.data_ = std::move(entries);
  return m;
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t j = 0; j < cols_; ++j) {
    for (std::size_t i = 0; i < rows_; ++i) t(j, i) = (*this)(i, j);
  }
  return t;
}

double Matrix::frobenius_norm() const {
  return std::sqrt(kern::sumsq(data_.data(), data_.size()));
}

double Matrix::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

double Matrix::trace() const {
  double s = 0.0;
  std::size_t n = std::min(rows_, cols_);
  for (std::size_t i = 0; i < n; ++i) s += (*this)(i, i);
  return s;
}

bool Matrix::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Matrix multiply(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw dimension_error("multiply: inner dimensions disagree");
  }
  Matrix c(a.rows(), b.cols());
  for (std::size_t j = 0; j < b.cols(); ++j) {
    double* cj = c.col(j);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      double bkj = b(k, j);
      if (bkj != 0.0) kern::axpy(bkj, a.col(k), cj, a.rows());
    }
  }
  return c;
}

void matvec_into(const Matrix& a, std::span<const double> x,
                 std::span<double> y) {
  if (x.size() != a.cols() || y.size() != a.rows()) {
    throw dimension_error("matvec: dimension mismatch");
  }
  std::fill(y.begin(), y.end(), 0.0);
  for (std::size_t j = 0; j < a.cols(); ++j) {
    if (x[j] != 0.0) kern::axpy(x[j], a.col(j), y.data(), a.rows());
  }
}

std::vector<double> matvec(const Matrix& a, std::span<const double> x) {
  std::vector<double> y(a.rows());
  matvec_into(a, x, y);
  return y;
}

Matrix kron(const Matrix& x, const Matrix& y) {
  std::size_t rows = checked_mul(x.rows(), y.rows(), "kron");
  std::size_t cols = checked_mul(x.cols(), y.cols(), "kron");
  checked_mul(rows, cols, "kron");
  Matrix r(rows, cols);
  for (std::size_t jx = 0; jx < x.cols(); ++jx) {
    for (std::size_t jy = 0; jy < y.cols(); ++jy) {
      double* rc = r.col(jx * y.cols() + jy);
      for (std::size_t ix = 0; ix < x.rows(); ++ix) {
        double s = x(ix, jx);
        if (s == 0.0) continue;
        kern::axpy(s, y.col(jy), rc + ix * y.rows(), y.rows());
      }
    }
  }
  return r;
}

std::vector<double> vec(const Matrix& x) { return x.entries(); }

Matrix unvec(std::span<const double> v) {
  auto n = static_cast<std::size_t>(std::llround(std::sqrt(double(v.size()))));
  if (n * n != v.size()) {
    throw dimension_error("unvec: length is not a perfect square");
  }
  return unvec(v, n, n);
}

Matrix unvec(std::span<const double> v, std::size_t rows, std::size_t cols) {
  if (v.size() != checked_mul(rows, cols, "unvec")) {
    throw dimension_error("unvec: length != rows*cols");
  }
  Matrix m(rows, cols);
  std::copy(v.begin(), v.end(), m.data());
  return m;
}

std::vector<double> solve(const Matrix& a, std::span<const double> b) {
  if (a.rows() != a.cols()) throw dimension_error("solve: matrix not square");
  const std::size_t n = a.rows();
  if (b.size() != n) throw dimension_error("solve: rhs length mismatch");

  Matrix lu = a;
  std::vector<double> x(b.begin(), b.end());
  std::vector<double> scale(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s = std::max(s, std::abs(lu(i, j)));
    if (s == 0.0) throw singular_matrix_error("solve: zero row");
    scale[i] = s;
  }

  for (std::size_t k = 0; k < n; ++k) {
    // Scaled partial pivoting on column k.
    std::size_t p = k;
    double best = std::abs(lu(k, k)) / scale[k];
    for (std::size_t i = k + 1; i < n; ++i) {
      double cand = std::abs(lu(i, k)) / scale[i];
      if (cand > best) {
        best = cand;
        p = i;
      }
    }
    if (std::abs(lu(p, k)) < 1e-12 * scale[p]) {
      throw singular_matrix_error("solve: matrix is singular to working precision");
    }
    if (p != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(lu(k, j), lu(p, j));
      std::swap(scale[k], scale[p]);
      std::swap(x[k], x[p]);
    }
    const double pivot = lu(k, k);
    double* colk = lu.col(k);
    for (std::size_t i = k + 1; i < n; ++i) colk[i] /= pivot;
    for (std::size_t j = k + 1; j < n; ++j) {
      double akj = lu(k, j);
      if (akj != 0.0) {
        kern::axpy(-akj, colk + k + 1, lu.col(j) + k + 1, n - k - 1);
      }
    }
    // Forward substitution folded into the elimination sweep.
    double xk = x[k];
    if (xk != 0.0) kern::axpy(-xk, colk + k + 1, x.data() + k + 1, n - k - 1);
  }

  // Back substitution (column-oriented).
  for (std::size_t jr = n; jr-- > 0;) {
    x[jr] /= lu(jr, jr);
    if (x[jr] != 0.0 && jr > 0) {
      kern::axpy(-x[jr], lu.col(jr), x.data(), jr);
    }
  }
  return x;
}

EigPair max_eig_sym(const Matrix& a) {
  if (a.rows() != a.cols()) {
    throw contract_violation("max_eig_sym: matrix not square");
  }
  const std::size_t n = a.rows();
  const double scale = a.max_abs();
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < j; ++i) {
      if (std::abs(a(i, j) - a(j, i)) > 1e-10 * std::max(1e-300, scale)) {
        throw contract_violation("max_eig_sym: matrix not symmetric");
      }
    }
  }
  if (n == 0) return {};

  // Shift by an upper bound on the spectral radius so the algebraically
  // largest eigenvalue dominates in magnitude.
  double shift = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += std::abs(a(i, j));
    shift = std::max(shift, s);
  }
  shift += 1.0;

  std::vector<double> v(n);
  uint64_t st = 0x5AF1AB0001ULL ^ (uint64_t(n) << 32);
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = 1.0 + 1e-3 * double(splitmix64(st) >> 40) / double(1ULL << 24);
  }
  double inv = 1.0 / norm2(v);
  kern::scale(inv, v.data(), n);

  const double fro = a.frobenius_norm();
  const double tol = 1e-8 * std::max(fro, 1e-300);
  std::vector<double> av(n), w(n);
  double lambda = 0.0;
  bool converged = false;
  for (int iter = 0; iter < 200000; ++iter) {
    matvec_into(a, v, av);
    lambda = kern::dot(v.data(), av.data(), n);
    double resid_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double r = av[i] - lambda * v[i];
      resid_sq += r * r;
    }
    if (std::sqrt(resid_sq) <= tol) {
      converged = true;
      break;
    }
    for (std::size_t i = 0; i < n; ++i) w[i] = av[i] + shift * v[i];
    double nw = norm2(w);
    if (nw == 0.0) {
      // a v = -shift v exactly; v is already an eigenvector.
      lambda = -shift;
      converged = true;
      break;
    }
    inv = 1.0 / nw;
    for (std::size_t i = 0; i < n; ++i) v[i] = w[i] * inv;
  }
  if (!converged) {
    throw numeric_error("max_eig_sym: power iteration did not converge");
  }

  // Guarantee lambda >= Rayleigh quotient of the fixed probe set.
  uint64_t ps = 0x5AF1AB0002ULL ^ (uint64_t(n) << 32);
  std::vector<double> probe(n);
  for (int k = 0; k < 8; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      probe[i] = double(splitmix64(ps) >> 11) / double(1ULL << 53) - 0.5;
    }
    double pp = kern::sumsq(probe.data(), n);
    if (pp == 0.0) continue;
    matvec_into(a, probe, av);
    double rq = kern::dot(probe.data(), av.data(), n) / pp;
    lambda = std::max(lambda, rq);
  }
  return {lambda, std::move(v)};
}

double spectral_radius_estimate(const Matrix& a) {
  if (a.rows() != a.cols()) {
    throw dimension_error("spectral_radius_estimate: matrix not square");
  }
  const std::size_t n = a.rows();
  if (n == 0) return 0.0;

  std::vector<double> v(n), w(n);
  uint64_t st = 0x5AF1AB0003ULL ^ (uint64_t(n) << 32);
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = double(splitmix64(st) >> 11) / double(1ULL << 53) - 0.5;
  }
  double nv = norm2(v);
  if (nv == 0.0) v[0] = 1.0, nv = 1.0;
  kern::scale(1.0 / nv, v.data(), n);

  const int max_iter = 2000;
  std::vector<double> log_growth;
  log_growth.reserve(max_iter);
  double estimate = 0.0;
  double prev_estimate = -1.0;
  int stable_count = 0;
  for (int k = 1; k <= max_iter; ++k) {
    matvec_into(a, v, w);
    double g = norm2(w);
    if (g == 0.0) return 0.0;  // reached the kernel: nilpotent-type decay
    if (!std::isfinite(g)) return std::numeric_limits<double>::infinity();
    kern::scale(1.0 / g, w.data(), n);
    v.swap(w);
    log_growth.push_back(std::log(g));

    // Average the per-step growth over the trailing half of the run; the
    // start-vector transient dies out of the window as k grows.
    std::size_t window = (log_growth.size() + 1) / 2;
    double sum = 0.0;
    for (std::size_t i = log_growth.size() - window; i < log_growth.size(); ++i)
      sum += log_growth[i];
    estimate = std::exp(sum / double(window));

    if (k >= 200) {
      if (std::abs(estimate - prev_estimate) <=
          1e-9 * std::max(1e-300, std::abs(estimate))) {
        if (++stable_count >= 50) break;
      } else {
        stable_count = 0;
      }
      prev_estimate = estimate;
    } else {
      prev_estimate = estimate;
    }
  }
  return estimate;
}

}  // namespace saflab
