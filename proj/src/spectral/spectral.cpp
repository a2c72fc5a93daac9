#include "sf/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace sf {

namespace {

double leading_sigma(const SvdFactors& f) {
  if (f.sigma.empty() || f.sigma[0] == 0.0) {
    throw DegenerateWeightError("weight has zero spectral norm");
  }
  return f.sigma[0];
}

void check_plan(const SvdFactors& f, const CompensationPlan& plan) {
  if (plan.delta_sigma.size() != f.rank()) {
    throw ParameterError("compensation plan has " + std::to_string(plan.delta_sigma.size()) +
                         " entries but the factors have rank " + std::to_string(f.rank()));
  }
  if (plan.n_compensated < 1 || plan.n_compensated > f.rank()) {
    throw ParameterError("compensation plan covers " + std::to_string(plan.n_compensated) +
                         " values, outside [1, " + std::to_string(f.rank()) + "]");
  }
  if (plan.mode == CompensationMode::Dynamic && plan.gamma.size() != f.rank()) {
    throw ParameterError("dynamic plan is missing its gamma vector");
  }
}

void check_factors(const Matrix& w, const SvdFactors& f) {
  if (f.u.rows() != w.rows() || f.v.rows() != w.cols()) {
    throw DimensionError("factors " + f.u.shape_string() + "/" + f.v.shape_string() +
                         " do not belong to a " + w.shape_string() + " weight");
  }
}

}  // namespace

CompensationPlan CompensationPlan::identity(std::size_t rank) {
  CompensationPlan p;
  p.mode = CompensationMode::Static;
  p.static_i = 1;
  p.delta_sigma.assign(rank, 0.0);
  p.n_compensated = 1;
  return p;
}

bool CompensationPlan::is_identity() const noexcept {
  return mode == CompensationMode::Static && n_compensated <= 1;
}

GammaState GammaState::from_spectrum(std::span<const double> sigma) {
  if (sigma.empty() || sigma[0] == 0.0) {
    throw DegenerateWeightError("cannot form singular-value ratios of a zero spectrum");
  }
  GammaState g;
  g.gamma.resize(sigma.size());
  g.gamma[0] = 1.0;
  for (std::size_t j = 1; j < sigma.size(); ++j) g.gamma[j] = sigma[j] / sigma[0];
  return g;
}

RegularizedWeight spectral_normalize(const Matrix& w) { return spectral_normalize(w, svd(w)); }

RegularizedWeight spectral_normalize(const Matrix& w, SvdFactors factors) {
  check_factors(w, factors);
  const double s1 = leading_sigma(factors);
  RegularizedWeight out;
  out.w_bar = w;
  out.w_bar /= s1;
  out.sigma1 = s1;
  out.plan = CompensationPlan::identity(factors.rank());
  out.factors = std::move(factors);
  return out;
}

std::size_t static_index_from_fraction(std::size_t rank, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw ParameterError("compensation fraction must lie in (0, 1], got " +
                         std::to_string(fraction));
  }
  const auto i = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(rank)));
  return std::clamp<std::size_t>(i, 1, rank);
}

CompensationPlan static_plan(const SvdFactors& f, std::size_t i) {
  const std::size_t r = f.rank();
  if (i < 1 || i > r) {
    throw ParameterError("static compensation index " + std::to_string(i) +
                         " outside [1, " + std::to_string(r) + "]");
  }
  CompensationPlan p;
  p.mode = CompensationMode::Static;
  p.static_i = i;
  p.n_compensated = i;
  p.delta_sigma.assign(r, 0.0);
  for (std::size_t k = 1; k < i; ++k) p.delta_sigma[k] = f.sigma[0] - f.sigma[k];
  return p;
}

std::pair<CompensationPlan, GammaState> dynamic_plan(const SvdFactors& f,
                                                     const GammaState& g) {
  const std::size_t r = f.rank();
  const double s1 = leading_sigma(f);
  GammaState next = GammaState::from_spectrum(f.sigma);
  if (!g.empty()) {
    if (g.gamma.size() != r) {
      throw ParameterError("gamma state has " + std::to_string(g.gamma.size()) +
                           " entries but the spectrum has " + std::to_string(r));
    }
    for (std::size_t j = 1; j < r; ++j) next.gamma[j] = std::max(g.gamma[j], next.gamma[j]);
  }

  CompensationPlan p;
  p.mode = CompensationMode::Dynamic;
  p.static_i = 0;
  p.n_compensated = r;
  p.gamma = next.gamma;
  p.delta_sigma.assign(r, 0.0);
  for (std::size_t k = 1; k < r; ++k) {
    p.delta_sigma[k] = std::max(0.0, next.gamma[k] * s1 - f.sigma[k]);
  }
  return {std::move(p), std::move(next)};
}

RegularizedWeight apply_sr(const Matrix& w, const SvdFactors& f,
                           const CompensationPlan& plan) {
  check_factors(w, f);
  check_plan(f, plan);
  const double s1 = leading_sigma(f);
  RegularizedWeight out;
  out.w_bar = w;
  for (std::size_t k = 1; k < plan.n_compensated; ++k) {
    const double d = plan.delta_sigma[k];
    if (d != 0.0) add_outer(out.w_bar, d, f.left(k), f.right(k));
  }
  out.w_bar /= s1;
  out.sigma1 = s1;
  out.plan = plan;
  out.factors = f;
  return out;
}

Matrix sn_gradient(const Matrix& w, const SvdFactors& f, const Matrix& upstream) {
  check_factors(w, f);
  if (upstream.rows() != w.rows() || upstream.cols() != w.cols()) {
    throw DimensionError("upstream gradient " + upstream.shape_string() +
                         " does not match weight " + w.shape_string());
  }
  const double s1 = leading_sigma(f);
  Matrix grad = upstream;
  add_outer(grad, -frobenius_inner(upstream, w) / s1, f.left(0), f.right(0));
  grad /= s1;
  return grad;
}

Matrix sr_gradient(const Matrix& w, const SvdFactors& f, const CompensationPlan& plan,
                   const Matrix& upstream) {
  check_plan(f, plan);
  // Indices whose Δσ_k varies with W, paired with the u1v1ᵀ weight of ∂Δσ_k.
  std::vector<std::pair<std::size_t, double>> active;
  for (std::size_t k = 1; k < plan.n_compensated; ++k) {
    if (plan.mode == CompensationMode::Static) {
      active.emplace_back(k, 1.0);
    } else if (plan.delta_sigma[k] > 0.0) {
      active.emplace_back(k, plan.gamma[k]);
    }
  }
  if (active.empty()) return sn_gradient(w, f, upstream);

  check_factors(w, f);
  if (upstream.rows() != w.rows() || upstream.cols() != w.cols()) {
    throw DimensionError("upstream gradient " + upstream.shape_string() +
                         " does not match weight " + w.shape_string());
  }
  const double s1 = leading_sigma(f);
  const std::size_t n = plan.n_compensated;

  // c_k = ⟨G, u_k v_kᵀ⟩
  Vector c(n, 0.0);
  for (std::size_t k = 1; k < n; ++k) c[k] = dot(f.left(k), matvec(upstream, f.right(k)));

  const double term2 = -frobenius_inner(upstream, w) / s1;
  double delta_inner = 0.0;
  for (std::size_t k = 1; k < n; ++k) delta_inner += plan.delta_sigma[k] * c[k];
  const double term3 = -delta_inner / s1;
  double term4_lead = 0.0;
  for (const auto& [k, weight] : active) term4_lead += c[k] * weight;

  Matrix grad = upstream;
  add_outer(grad, term2 + term3 + term4_lead, f.left(0), f.right(0));
  for (const auto& [k, weight] : active) add_outer(grad, -c[k], f.left(k), f.right(k));
  grad /= s1;
  return grad;
}

Matrix reshape_conv(const ConvKernel& kernel) {
  if (kernel.out == 0 || kernel.in == 0 || kernel.h == 0 || kernel.w == 0) {
    throw DimensionError("convolution kernel dimensions must be positive");
  }
  const std::size_t cols = kernel.in * kernel.h * kernel.w;
  if (kernel.data.size() != kernel.out * cols) {
    throw DimensionError("convolution kernel data length does not match its dimensions");
  }
  return Matrix(kernel.out, cols, kernel.data);
}

ConvKernel unreshape_conv(const Matrix& m, std::size_t in, std::size_t h, std::size_t w) {
  if (in * h * w != m.cols()) {
    throw DimensionError("cannot unreshape " + m.shape_string() + " into [" +
                         std::to_string(m.rows()) + ", " + std::to_string(in) + ", " +
                         std::to_string(h) + ", " + std::to_string(w) + "]");
  }
  ConvKernel k{m.rows(), in, h, w, {}};
  k.data.assign(m.data().begin(), m.data().end());
  return k;
}

std::vector<LipschitzProbe> lipschitz_probes(const Matrix& w, std::size_t trials,
                                             std::uint64_t seed) {
  const SvdFactors f = svd(w);
  if (f.sigma[0] > 1.0 + 1e-9) {
    throw ParameterError("lipschitz probe requires spectral norm <= 1, got " +
                         std::to_string(f.sigma[0]));
  }
  std::vector<LipschitzProbe> probes;
  probes.reserve(f.rank() + trials);
  for (std::size_t k = 0; k < f.rank(); ++k) {
    Vector x = f.right(k);
    const double nx = norm2(x);
    for (double& xi : x) xi /= nx;
    const double ratio = norm2(matvec(w, x));
    probes.push_back({std::move(x), ratio, true, k});
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t t = 0; t < trials; ++t) {
    Vector x(w.cols());
    double nx = 0.0;
    while (nx == 0.0) {
      for (double& xi : x) xi = normal(rng);
      nx = norm2(x);
    }
    for (double& xi : x) xi /= nx;
    const double ratio = norm2(matvec(w, x));
    probes.push_back({std::move(x), ratio, false, t});
  }
  return probes;
}

double verify_lipschitz_supremum(const Matrix& w, std::size_t trials, std::uint64_t seed) {
  double best = 0.0;
  for (const auto& p : lipschitz_probes(w, trials, seed)) best = std::max(best, p.ratio);
  return best;
}

}  // namespace sf
