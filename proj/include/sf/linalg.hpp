#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sf {

using Vector = std::vector<double>;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an iterative decomposition fails to reach its tolerance.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Dense row-major matrix of doubles. Entries are checked finite when a
/// matrix is built from external data.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> values);
  static Matrix diagonal(std::size_t rows, std::size_t cols,
                         std::span<const double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  Vector column(std::size_t c) const;

  std::string shape_string() const;
  bool all_finite() const noexcept;

  Matrix& operator+=(const Matrix& other);
  Matrix& operator-=(const Matrix& other);
  Matrix& operator*=(double s) noexcept;
  Matrix& operator/=(double s) noexcept;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(Matrix a, double s);
Matrix operator*(double s, Matrix a);

Matrix matmul(const Matrix& a, const Matrix& b);
/// a · bᵀ without materializing the transpose.
Matrix matmul_nt(const Matrix& a, const Matrix& b);
/// aᵀ · b without materializing the transpose.
Matrix matmul_tn(const Matrix& a, const Matrix& b);
Vector matvec(const Matrix& a, std::span<const double> x);
Vector matvec_t(const Matrix& a, std::span<const double> x);
Matrix transpose(const Matrix& m);
double frobenius_norm(const Matrix& m);
double frobenius_inner(const Matrix& a, const Matrix& b);
double max_abs(const Matrix& m);
double max_abs_diff(const Matrix& a, const Matrix& b);
Matrix outer_product(std::span<const double> a, std::span<const double> b);
/// m += scale · a bᵀ
void add_outer(Matrix& m, double scale, std::span<const double> a,
               std::span<const double> b);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

/// Thin SVD: u is rows×k, v is cols×k, k = min(rows, cols).
struct SvdFactors {
  Matrix u;
  Vector sigma;
  Matrix v;

  std::size_t rank() const noexcept { return sigma.size(); }
  Vector left(std::size_t k) const { return u.column(k); }
  Vector right(std::size_t k) const { return v.column(k); }
  Matrix reconstruct() const;
};

struct SvdOptions {
  double tolerance = 1e-12;  // off-diagonal Gram terms, relative
  int max_sweeps = 60;
};

/// One-sided Jacobi SVD. Sigma is sorted non-increasing; each column of v
/// has its first largest-magnitude entry non-negative.
SvdFactors svd(const Matrix& m, const SvdOptions& options = {});

struct PowerIterationResult {
  double sigma1 = 0.0;
  Vector u;
  Vector v;
  Vector history;  // estimate after each step
};

/// Alternating power iteration on W and Wᵀ starting from the left vector u0.
/// A matrix that annihilates u0 yields sigma1 = 0 and the normalized u0.
PowerIterationResult power_iteration(const Matrix& m, std::span<const double> u0,
                                     int steps);

}  // namespace sf
