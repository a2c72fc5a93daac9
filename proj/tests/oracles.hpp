#pragma once

// Reference computations used by the tests. Everything here is written
// against raw indices so it shares no code paths with the library kernels.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <utility>
#include <vector>

#include "sf/linalg.hpp"

namespace oracle {

using sf::Matrix;
using sf::Vector;

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng,
                            double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  std::vector<double> d(rows * cols);
  for (double& x : d) x = n(rng);
  return Matrix(rows, cols, std::move(d));
}

inline Matrix naive_matmul(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      long double s = 0.0L;
      for (std::size_t k = 0; k < a.cols(); ++k) s += (long double)a(i, k) * b(k, j);
      out(i, j) = double(s);
    }
  return out;
}

inline Matrix naive_transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

inline double frob(const Matrix& a) {
  long double s = 0.0L;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) s += (long double)a(i, j) * a(i, j);
  return std::sqrt(double(s));
}

inline double max_diff(const Matrix& a, const Matrix& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) m = std::max(m, std::abs(a(i, j) - b(i, j)));
  return m;
}

/// Eigenvalues of a symmetric matrix by classical two-sided Jacobi, sorted
/// descending.
inline Vector symmetric_eigenvalues(Matrix a) {
  const std::size_t n = a.rows();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-30 * std::max(1.0, frob(a) * frob(a))) break;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
  }
  Vector ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = a(i, i);
  std::sort(ev.begin(), ev.end(), std::greater<>());
  return ev;
}

/// Singular values from the eigenvalues of the smaller Gram matrix.
inline Vector singular_values(const Matrix& m) {
  const Matrix g = m.rows() >= m.cols() ? naive_matmul(naive_transpose(m), m)
                                        : naive_matmul(m, naive_transpose(m));
  Vector ev = symmetric_eigenvalues(g);
  for (double& x : ev) x = std::sqrt(std::max(0.0, x));
  return ev;
}

/// Matrix with prescribed singular values: Q1 · diag(sigma) · Q2ᵀ with random
/// orthogonal factors from Gram-Schmidt.
inline Matrix orthonormal_columns(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  Matrix q = random_matrix(rows, cols, rng);
  for (std::size_t j = 0; j < cols; ++j) {
    for (int pass = 0; pass < 2; ++pass)
      for (std::size_t k = 0; k < j; ++k) {
        double d = 0.0;
        for (std::size_t i = 0; i < rows; ++i) d += q(i, j) * q(i, k);
        for (std::size_t i = 0; i < rows; ++i) q(i, j) -= d * q(i, k);
      }
    double n = 0.0;
    for (std::size_t i = 0; i < rows; ++i) n += q(i, j) * q(i, j);
    n = std::sqrt(n);
    for (std::size_t i = 0; i < rows; ++i) q(i, j) /= n;
  }
  return q;
}

inline Matrix with_spectrum(std::size_t rows, std::size_t cols, const Vector& sigma,
                            std::mt19937_64& rng) {
  const std::size_t k = std::min(rows, cols);
  const Matrix a = orthonormal_columns(rows, k, rng);
  const Matrix b = orthonormal_columns(cols, k, rng);
  Matrix out(rows, cols);
  for (std::size_t r = 0; r < k; ++r)
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) out(i, j) += sigma[r] * a(i, r) * b(j, r);
  return out;
}

/// Central differences of a scalar function over every entry of w.
inline Matrix finite_difference(const std::function<double(const Matrix&)>& f, const Matrix& w,
                                double h) {
  Matrix g(w.rows(), w.cols());
  for (std::size_t i = 0; i < w.rows(); ++i)
    for (std::size_t j = 0; j < w.cols(); ++j) {
      Matrix p = w, m = w;
      p(i, j) += h;
      m(i, j) -= h;
      g(i, j) = (f(p) - f(m)) / (2.0 * h);
    }
  return g;
}

inline double relative_error(const Matrix& got, const Matrix& want) {
  const double scale = std::max(1e-300, [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < want.rows(); ++i)
      for (std::size_t j = 0; j < want.cols(); ++j) s = std::max(s, std::abs(want(i, j)));
    return s;
  }());
  return max_diff(got, want) / scale;
}

/// Frozen-factor compensation map: the base point's singular vectors with the
/// argument's singular values. Active index k is lifted to target_ratio[k]·σ1.
inline Matrix frozen_map(const Matrix& w, const sf::SvdFactors& base, const Vector& target_ratio,
                         const std::vector<bool>& active) {
  const Vector s = singular_values(w);
  Matrix out = w;
  for (std::size_t k = 1; k < base.rank(); ++k) {
    if (!active[k]) continue;
    const double d = target_ratio[k] * s[0] - s[k];
    for (std::size_t i = 0; i < w.rows(); ++i)
      for (std::size_t j = 0; j < w.cols(); ++j) out(i, j) += d * base.u(i, k) * base.v(j, k);
  }
  for (std::size_t i = 0; i < w.rows(); ++i)
    for (std::size_t j = 0; j < w.cols(); ++j) out(i, j) /= s[0];
  return out;
}

/// ⟨a, b⟩ accumulated in long double.
inline double pairing(const Matrix& a, const Matrix& b) {
  long double s = 0.0L;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) s += (long double)a(i, j) * b(i, j);
  return double(s);
}

}  // namespace oracle
