#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "sf/spectral.hpp"

using namespace sf;

namespace {

Matrix diag(std::initializer_list<double> d) { return Matrix::diagonal(std::vector<double>(d)); }

// Hand-evaluated dynamic update: γ_j ← max(γ_j, σ_j/σ1), Δσ_k = max(0, γ_kσ1 − σ_k).
std::pair<Vector, Vector> scalar_dynamic(Vector gamma, const Vector& sigma) {
  Vector delta(sigma.size(), 0.0);
  for (std::size_t j = 0; j < sigma.size(); ++j) {
    gamma[j] = std::max(gamma[j], sigma[j] / sigma[0]);
    if (j > 0) delta[j] = std::max(0.0, gamma[j] * sigma[0] - sigma[j]);
  }
  gamma[0] = 1.0;
  return {gamma, delta};
}

using oracle::frozen_map;
using oracle::pairing;

Matrix distinct_spectrum_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng) {
  const std::size_t k = std::min(r, c);
  Vector sigma(k);
  for (std::size_t i = 0; i < k; ++i) sigma[i] = 3.0 - 2.5 * double(i) / double(k);
  return oracle::with_spectrum(r, c, sigma, rng);
}

}  // namespace

TEST_CASE("spectral_normalize examples") {
  const RegularizedWeight a = spectral_normalize(diag({2, 1}));
  CHECK(oracle::max_diff(a.w_bar, diag({1, 0.5})) <= 1e-15);
  CHECK(a.sigma1 == doctest::Approx(2.0));
  CHECK(a.plan.is_identity());

  const Matrix i3 = Matrix::identity(3);
  CHECK(oracle::max_diff(spectral_normalize(i3).w_bar, i3) <= 1e-15);

  std::mt19937_64 rng(64);
  const Matrix w = oracle::random_matrix(6, 4, rng);
  const Vector raw = oracle::singular_values(w);
  const Vector out = oracle::singular_values(spectral_normalize(w).w_bar);
  CHECK(std::abs(out[0] - 1.0) <= 1e-8);
  for (std::size_t k = 0; k < 4; ++k) CHECK(std::abs(out[k] - raw[k] / raw[0]) <= 1e-10);

  CHECK_THROWS_AS(spectral_normalize(Matrix(3, 3)), DegenerateWeightError);
}

TEST_CASE("static_plan follows sigma1 minus sigma_k") {
  const SvdFactors f = svd(diag({4, 2, 1}));
  CHECK(static_plan(f, 3).delta_sigma == Vector{0, 2, 3});
  CHECK(static_plan(f, 2).delta_sigma == Vector{0, 2, 0});
  CHECK(static_plan(f, 3).n_compensated == 3);
  const CompensationPlan one = static_plan(f, 1);
  CHECK(one.delta_sigma == Vector{0, 0, 0});
  CHECK(one.is_identity());
  CHECK(static_plan(svd(diag({5, 5, 5})), 3).delta_sigma == Vector{0, 0, 0});
  CHECK_THROWS_AS(static_plan(f, 0), ParameterError);
  CHECK_THROWS_AS(static_plan(f, 4), ParameterError);
}

TEST_CASE("static index from fraction") {
  CHECK(static_index_from_fraction(8, 0.5) == 4);
  CHECK(static_index_from_fraction(7, 0.5) == 4);
  CHECK(static_index_from_fraction(2, 0.5) == 1);
  CHECK(static_index_from_fraction(1, 0.5) == 1);
  CHECK(static_index_from_fraction(16, 1.0) == 16);
  CHECK(static_index_from_fraction(16, 1e-6) == 1);
  CHECK_THROWS_AS(static_index_from_fraction(4, 0.0), ParameterError);
  CHECK_THROWS_AS(static_index_from_fraction(4, 1.5), ParameterError);
}

TEST_CASE("dynamic_plan examples against the scalar oracle") {
  {
    const SvdFactors f = svd(diag({4, 2, 1}));
    const auto [plan, g] = dynamic_plan(f, GammaState{{1.0, 0.75, 0.5}});
    const auto [want_gamma, want_delta] = scalar_dynamic({1.0, 0.75, 0.5}, {4, 2, 1});
    CHECK(want_delta == Vector{0, 1, 1});
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK(plan.delta_sigma[k] == doctest::Approx(want_delta[k]).epsilon(1e-14));
      CHECK(g.gamma[k] == doctest::Approx(want_gamma[k]).epsilon(1e-14));
    }
    CHECK(plan.n_compensated == 3);
  }
  {
    const SvdFactors f = svd(diag({10, 9}));
    const auto [plan, g] = dynamic_plan(f, GammaState{{1.0, 0.4}});
    CHECK(g.gamma[0] == 1.0);
    CHECK(g.gamma[1] == doctest::Approx(0.9).epsilon(1e-14));
    CHECK(plan.delta_sigma == Vector{0, 0});
  }
  {
    std::mt19937_64 rng(3);
    const SvdFactors f = svd(oracle::random_matrix(5, 5, rng));
    const auto [plan, g] = dynamic_plan(f, GammaState{});
    for (double d : plan.delta_sigma) CHECK(d == 0.0);
    CHECK(g.gamma[0] == 1.0);
    for (std::size_t j = 1; j < 5; ++j) CHECK(g.gamma[j] <= g.gamma[j - 1]);
  }
  CHECK_THROWS_AS(dynamic_plan(svd(diag({2, 1})), GammaState{{1.0, 0.5, 0.2}}), ParameterError);
  CHECK_THROWS_AS(dynamic_plan(svd(Matrix(2, 2)), GammaState{}), DegenerateWeightError);
}

TEST_CASE("apply_sr examples on diag(4, 2, 1)") {
  const Matrix w = diag({4, 2, 1});
  const SvdFactors f = svd(w);
  const RegularizedWeight full = apply_sr(w, f, static_plan(f, 3));
  CHECK(oracle::max_diff(full.w_bar, Matrix::identity(3)) <= 1e-14);
  for (double s : oracle::singular_values(full.w_bar)) CHECK(std::abs(s - 1.0) <= 1e-8);

  const RegularizedWeight one = apply_sr(w, f, static_plan(f, 1));
  CHECK(oracle::max_diff(one.w_bar, diag({1, 0.5, 0.25})) <= 1e-15);
  CHECK(one.w_bar == spectral_normalize(w).w_bar);

  const auto [plan, g] = dynamic_plan(f, GammaState{{1.0, 0.75, 0.5}});
  const RegularizedWeight dyn = apply_sr(w, f, plan);
  CHECK(oracle::max_diff(dyn.w_bar, diag({1, 0.75, 0.5})) <= 1e-14);

  CompensationPlan bad = static_plan(f, 2);
  bad.delta_sigma.push_back(0.0);
  CHECK_THROWS_AS(apply_sr(w, f, bad), ParameterError);
}

TEST_CASE("property: static i = 1 equals spectral normalization") {
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<std::size_t> dim(1, 16);
  for (int t = 0; t < 100; ++t) {
    const Matrix w = oracle::random_matrix(dim(rng), dim(rng), rng);
    const SvdFactors f = svd(w);
    CHECK(oracle::max_diff(apply_sr(w, f, static_plan(f, 1)).w_bar, spectral_normalize(w).w_bar) <= 1e-12);
  }
}

TEST_CASE("property: static spectrum law and top-value pin") {
  std::mt19937_64 rng(202);
  std::uniform_int_distribution<std::size_t> dim(1, 12);
  for (int t = 0; t < 60; ++t) {
    const Matrix w = oracle::random_matrix(dim(rng), dim(rng), rng);
    const SvdFactors f = svd(w);
    const std::size_t r = f.rank();
    for (std::size_t i : {std::size_t(1), (r + 1) / 2, r}) {
      const Vector got = oracle::singular_values(apply_sr(w, f, static_plan(f, i)).w_bar);
      for (std::size_t k = 0; k < r; ++k) {
        const double want = k < i ? 1.0 : f.sigma[k] / f.sigma[0];
        CHECK(std::abs(got[k] - want) <= 1e-8);
      }
    }
  }
}

TEST_CASE("property: dynamic spectrum law and gamma monotonicity") {
  std::mt19937_64 rng(303);
  for (int seq = 0; seq < 10; ++seq) {
    GammaState g;
    Vector prev;
    for (int step = 0; step < 8; ++step) {
      const Matrix w = oracle::random_matrix(6, 5, rng);
      const SvdFactors f = svd(w);
      auto [plan, next] = dynamic_plan(f, g);
      const Vector got = oracle::singular_values(apply_sr(w, f, plan).w_bar);
      Vector want = next.gamma;
      std::sort(want.begin(), want.end(), std::greater<>());
      for (std::size_t k = 0; k < got.size(); ++k) CHECK(std::abs(got[k] - want[k]) <= 1e-8);
      if (!prev.empty())
        for (std::size_t j = 0; j < prev.size(); ++j) CHECK(next.gamma[j] >= prev[j]);
      CHECK(next.gamma[0] == 1.0);
      for (double x : next.gamma) CHECK((x >= 0.0 && x <= 1.0));
      prev = next.gamma;
      g = next;
    }
  }
}

TEST_CASE("sr_gradient is linear in upstream and reduces to the SN rule") {
  std::mt19937_64 rng(404);
  const Matrix w = distinct_spectrum_matrix(6, 8, rng);
  const SvdFactors f = svd(w);
  const Matrix zero(6, 8);
  CHECK(max_abs(sr_gradient(w, f, static_plan(f, 4), zero)) == 0.0);

  const Matrix g = oracle::random_matrix(6, 8, rng);
  const Matrix sn = sn_gradient(w, f, g);
  CHECK(oracle::max_diff(sr_gradient(w, f, static_plan(f, 1), g), sn) <= 1e-12);

  // SN rule assembled entry by entry: (G − ⟨G, W̄⟩ u1v1ᵀ)/σ1.
  const double s1 = f.sigma[0];
  double inner = 0.0;
  for (std::size_t a = 0; a < 6; ++a)
    for (std::size_t b = 0; b < 8; ++b) inner += g(a, b) * w(a, b) / s1;
  Matrix want(6, 8);
  for (std::size_t a = 0; a < 6; ++a)
    for (std::size_t b = 0; b < 8; ++b) want(a, b) = (g(a, b) - inner * f.u(a, 0) * f.v(b, 0)) / s1;
  CHECK(oracle::max_diff(sn, want) <= 1e-12);
}

TEST_CASE("sr_gradient matches the frozen-factor finite-difference oracle") {
  std::mt19937_64 rng(505);
  const Matrix w = distinct_spectrum_matrix(6, 8, rng);
  const SvdFactors f = svd(w);
  const Matrix g = oracle::random_matrix(6, 8, rng);

  const CompensationPlan plan = static_plan(f, 4);
  const Vector ones(6, 1.0);
  std::vector<bool> active(6, false);
  for (std::size_t k = 1; k < 4; ++k) active[k] = true;
  const auto loss = [&](const Matrix& x) { return pairing(g, frozen_map(x, f, ones, active)); };
  const Matrix fd = oracle::finite_difference(loss, w, 1e-6);
  CHECK(oracle::relative_error(sr_gradient(w, f, plan, g), fd) <= 1e-4);
}

TEST_CASE("dynamic sr_gradient matches its frozen-factor oracle") {
  std::mt19937_64 rng(606);
  const Matrix w = distinct_spectrum_matrix(5, 7, rng);
  const SvdFactors f = svd(w);
  GammaState g0;
  g0.gamma = {1.0, 0.95, 0.5, 0.8, 0.1};  // index 2 and 4 stay below the current ratio
  const auto [plan, g1] = dynamic_plan(f, g0);
  std::vector<bool> active(5, false);
  for (std::size_t k = 1; k < 5; ++k) active[k] = plan.delta_sigma[k] > 0.0;
  REQUIRE(active[1]);
  REQUIRE(active[3]);
  const Matrix up = oracle::random_matrix(5, 7, rng);
  const auto loss = [&](const Matrix& x) { return pairing(up, frozen_map(x, f, g1.gamma, active)); };
  const Matrix fd = oracle::finite_difference(loss, w, 1e-6);
  CHECK(oracle::relative_error(sr_gradient(w, f, plan, up), fd) <= 1e-4);
}

TEST_CASE("conv reshape") {
  ConvKernel k1{2, 1, 1, 1, {1.5, -2.0}};
  const Matrix m1 = reshape_conv(k1);
  CHECK(m1 == Matrix{{1.5}, {-2.0}});

  ConvKernel k2{1, 2, 2, 2, {1, 2, 3, 4, 5, 6, 7, 8}};
  CHECK(reshape_conv(k2) == Matrix{{1, 2, 3, 4, 5, 6, 7, 8}});
  CHECK(reshape_conv(k2)(0, 5) == k2.at(0, 1, 0, 1));

  std::mt19937_64 rng(77);
  std::normal_distribution<double> n;
  ConvKernel k3{4, 3, 3, 3, std::vector<double>(4 * 27)};
  for (double& x : k3.data) x = n(rng);
  const Matrix m3 = reshape_conv(k3);
  CHECK(m3.rows() == 4);
  CHECK(m3.cols() == 27);
  CHECK(unreshape_conv(m3, 3, 3, 3) == k3);
  CHECK_THROWS(unreshape_conv(m3, 2, 3, 3));
}

TEST_CASE("lipschitz supremum examples") {
  std::mt19937_64 rng(808);
  const Matrix q = oracle::with_spectrum(5, 5, Vector(5, 1.0), rng);
  for (const auto& p : lipschitz_probes(q, 64, 1)) CHECK(std::abs(p.ratio - 1.0) <= 1e-10);
  CHECK(std::abs(verify_lipschitz_supremum(q, 64, 1) - 1.0) <= 1e-10);

  const Matrix d = diag({1, 0.5});
  const auto probes = lipschitz_probes(d, 32, 2);
  CHECK(std::abs(verify_lipschitz_supremum(d, 32, 2) - 1.0) <= 1e-12);
  bool saw_half = false;
  for (const auto& p : probes) {
    CHECK(p.ratio <= 1.0 + 1e-9);
    if (p.singular_direction && p.index == 1) {
      CHECK(p.ratio == doctest::Approx(0.5));
      saw_half = true;
    }
  }
  CHECK(saw_half);

  const Matrix w = oracle::random_matrix(6, 4, rng);
  const SvdFactors f = svd(w);
  const Matrix full = apply_sr(w, f, static_plan(f, 4)).w_bar;
  for (const auto& p : lipschitz_probes(full, 64, 3)) CHECK(std::abs(p.ratio - 1.0) <= 1e-8);

  CHECK_THROWS_AS(lipschitz_probes(diag({2, 1}), 4, 1), ParameterError);
}

TEST_CASE("property: all probes reach 1 exactly when the full spectrum is all ones") {
  std::mt19937_64 rng(909);
  auto all_probes_one = [](const Matrix& m) {
    double lo = 1e300;
    for (const auto& p : lipschitz_probes(m, 128, 5)) lo = std::min(lo, p.ratio);
    return std::abs(lo - 1.0) <= 1e-8;
  };
  for (int t = 0; t < 20; ++t) {
    CHECK(all_probes_one(oracle::with_spectrum(4, 4, Vector(4, 1.0), rng)));
    CHECK(all_probes_one(oracle::with_spectrum(6, 3, Vector(3, 1.0), rng)));
    CHECK_FALSE(all_probes_one(oracle::with_spectrum(4, 4, {1.0, 1.0, 1.0, 0.9}, rng)));
    Vector s{1.0, 0.0, 0.0};
    std::uniform_real_distribution<double> u(0.05, 0.95);
    s[1] = u(rng);
    s[2] = u(rng) * s[1];
    CHECK_FALSE(all_probes_one(oracle::with_spectrum(3, 5, s, rng)));
    // Wide matrices have a null space, so their full spectrum includes zeros.
    CHECK_FALSE(all_probes_one(oracle::with_spectrum(3, 5, Vector(3, 1.0), rng)));
  }
}
