#include <algorithm>
#include <cfloat>
#include <cmath>
#include <numeric>

#include "sf/linalg.hpp"

namespace sf {

namespace {

// Columns stored contiguously; the Jacobi sweeps only touch column pairs.
struct ColumnSet {
  std::size_t length;
  std::vector<Vector> cols;
};

ColumnSet columns_of(const Matrix& m) {
  ColumnSet out{m.rows(), std::vector<Vector>(m.cols(), Vector(m.rows()))};
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out.cols[j][i] = m(i, j);
  return out;
}

void rotate(Vector& p, Vector& q, double c, double s) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double a = p[i];
    const double b = q[i];
    p[i] = c * a - s * b;
    q[i] = s * a + c * b;
  }
}

// Orthonormal completion for columns whose singular value is numerically zero.
Vector complete_basis(const std::vector<Vector>& basis, std::size_t length) {
  for (std::size_t e = 0; e < length; ++e) {
    Vector x(length, 0.0);
    x[e] = 1.0;
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& b : basis) {
        const double proj = dot(b, x);
        for (std::size_t i = 0; i < length; ++i) x[i] -= proj * b[i];
      }
    }
    const double n = norm2(x);
    if (n > 0.5) {
      for (double& xi : x) xi /= n;
      return x;
    }
  }
  throw NumericalError("svd: failed to complete orthonormal basis", 0.0);
}

// Requires rows >= cols.
SvdFactors jacobi_tall(const Matrix& m, const SvdOptions& options) {
  const std::size_t n = m.cols();
  const std::size_t len = m.rows();
  ColumnSet a = columns_of(m);
  std::vector<Vector> v(n, Vector(n, 0.0));
  for (std::size_t j = 0; j < n; ++j) v[j][j] = 1.0;

  // Pairs of numerically-zero columns carry only rounding noise; rotating them
  // can stall convergence without changing the factors that matter.
  const double fro = frobenius_norm(m);
  const double floor_sq = std::pow(fro * static_cast<double>(len) * DBL_EPSILON, 2);
  bool converged = n == 1;
  double residual = 0.0;
  for (int sweep = 0; sweep < options.max_sweeps && !converged; ++sweep) {
    bool rotated = false;
    residual = 0.0;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double alpha = dot(a.cols[p], a.cols[p]);
        const double beta = dot(a.cols[q], a.cols[q]);
        const double gamma = dot(a.cols[p], a.cols[q]);
        if (alpha == 0.0 || beta == 0.0 || gamma == 0.0) continue;
        if (std::max(alpha, beta) <= floor_sq) continue;
        const double off = std::abs(gamma) / std::sqrt(alpha * beta);
        residual = std::max(residual, off);
        if (off <= options.tolerance) continue;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(1.0, zeta));
        const double c = 1.0 / std::hypot(1.0, t);
        const double s = c * t;
        rotate(a.cols[p], a.cols[q], c, s);
        rotate(v[p], v[q], c, s);
        rotated = true;
      }
    }
    converged = !rotated;
  }
  if (!converged) {
    throw NumericalError("svd: Jacobi sweeps did not converge within " +
                             std::to_string(options.max_sweeps) + " sweeps",
                         residual);
  }

  Vector sigma(n);
  for (std::size_t j = 0; j < n; ++j) sigma[j] = norm2(a.cols[j]);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

  const double smax = sigma[order[0]];
  const double negligible = smax * static_cast<double>(len) * DBL_EPSILON;
  SvdFactors f{Matrix(len, n), Vector(n), Matrix(n, n)};
  std::vector<Vector> ucols;
  std::vector<std::size_t> deficient;
  ucols.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t j = order[k];
    f.sigma[k] = sigma[j];
    Vector u = a.cols[j];
    if (sigma[j] > negligible && sigma[j] > 0.0) {
      for (double& x : u) x /= sigma[j];
    } else {
      deficient.push_back(k);
    }
    ucols.push_back(std::move(u));
  }
  if (!deficient.empty()) {
    std::vector<Vector> basis;
    for (std::size_t k = 0; k < n; ++k)
      if (std::find(deficient.begin(), deficient.end(), k) == deficient.end())
        basis.push_back(ucols[k]);
    for (std::size_t k : deficient) {
      ucols[k] = complete_basis(basis, len);
      basis.push_back(ucols[k]);
    }
  }

  for (std::size_t k = 0; k < n; ++k) {
    const Vector& vk = v[order[k]];
    std::size_t lead = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (std::abs(vk[i]) > std::abs(vk[lead])) lead = i;
    const double sign = vk[lead] < 0.0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < n; ++i) f.v(i, k) = sign * vk[i];
    for (std::size_t i = 0; i < len; ++i) f.u(i, k) = sign * ucols[k][i];
  }
  return f;
}

}  // namespace

Matrix SvdFactors::reconstruct() const {
  Matrix out(u.rows(), v.rows());
  for (std::size_t k = 0; k < sigma.size(); ++k) add_outer(out, sigma[k], left(k), right(k));
  return out;
}

SvdFactors svd(const Matrix& m, const SvdOptions& options) {
  if (m.empty()) throw DimensionError("svd: empty matrix");
  if (!m.all_finite()) throw std::invalid_argument("svd: matrix has non-finite entries");
  if (m.rows() >= m.cols()) return jacobi_tall(m, options);

  SvdFactors t = jacobi_tall(transpose(m), options);
  // mᵀ = U'ΣV'ᵀ  =>  m = V'ΣU'ᵀ; re-apply the sign rule to the new v.
  SvdFactors f{std::move(t.v), std::move(t.sigma), std::move(t.u)};
  for (std::size_t k = 0; k < f.rank(); ++k) {
    std::size_t lead = 0;
    for (std::size_t i = 1; i < f.v.rows(); ++i)
      if (std::abs(f.v(i, k)) > std::abs(f.v(lead, k))) lead = i;
    if (f.v(lead, k) < 0.0) {
      for (std::size_t i = 0; i < f.v.rows(); ++i) f.v(i, k) = -f.v(i, k);
      for (std::size_t i = 0; i < f.u.rows(); ++i) f.u(i, k) = -f.u(i, k);
    }
  }
  return f;
}

PowerIterationResult power_iteration(const Matrix& m, std::span<const double> u0,
                                     int steps) {
  if (u0.size() != m.rows()) {
    throw DimensionError("power_iteration: u0 length " + std::to_string(u0.size()) +
                         " does not match " + m.shape_string());
  }
  if (steps < 1) throw std::invalid_argument("power_iteration: steps must be positive");
  const double n0 = norm2(u0);
  if (n0 == 0.0) throw std::invalid_argument("power_iteration: u0 must be nonzero");

  PowerIterationResult r;
  r.u.assign(u0.begin(), u0.end());
  for (double& x : r.u) x /= n0;
  r.v.assign(m.cols(), 0.0);
  r.v[0] = 1.0;

  for (int step = 0; step < steps; ++step) {
    Vector v = matvec_t(m, r.u);
    const double nv = norm2(v);
    if (nv == 0.0) {
      r.sigma1 = 0.0;
      r.history.push_back(0.0);
      return r;
    }
    for (double& x : v) x /= nv;
    Vector u = matvec(m, v);
    const double nu = norm2(u);
    for (double& x : u) x /= nu;
    r.u = std::move(u);
    r.v = std::move(v);
    r.sigma1 = nu;
    r.history.push_back(nu);
  }
  return r;
}

}  // namespace sf
