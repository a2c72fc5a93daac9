#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <random>

#include "oracles.hpp"
#include "sf/ganlab.hpp"
#include "sf/monitor.hpp"

using namespace sf;

namespace {

SpectrumSnapshot snap(Vector s) { return {0, 0, std::move(s)}; }

Matrix point_cloud(std::size_t n, double x, double y) {
  Matrix m(n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    m(i, 0) = x;
    m(i, 1) = y;
  }
  return m;
}

}  // namespace

TEST_CASE("collapse score examples") {
  CHECK(collapse_score(snap({1.0, 0.01, 0.01, 0.01}), 0.1) == 1.0);
  CHECK(collapse_score(snap({1.0, 0.5, 0.05}), 0.1) == 0.5);
  CHECK(collapse_score(snap({1.0, 1.0, 1.0}), 0.1) == 0.0);
  CHECK(collapse_score(snap({1.0}), 0.1) == 0.0);
  CHECK(collapse_score(snap({1.0, 0.1}), 0.1) == 0.0);  // strict comparison
  CHECK_THROWS_AS(collapse_score(snap({1.0, 0.5}), 0.0), std::invalid_argument);
}

TEST_CASE("detect_collapse examples") {
  const Vector rise{0, 0, 0, 0.9, 0.9, 0.9};
  const auto v = detect_collapse(rise, 0.5, 3);
  CHECK(v.collapsed);
  REQUIRE(v.onset);
  CHECK(*v.onset == 3);
  CHECK_FALSE(detect_collapse(Vector(10, 0.0), 0.5, 3).collapsed);
  // Scores that start high never rise above their own baseline.
  CHECK_FALSE(detect_collapse(Vector(8, 0.9), 0.5, 3).collapsed);
  // A run one shorter than the window is not enough.
  CHECK_FALSE(detect_collapse(Vector{0, 0, 0, 0.9, 0.9, 0.0}, 0.5, 3).collapsed);
  CHECK_THROWS_AS(detect_collapse(Vector{}, 0.5, 3), std::invalid_argument);
  CHECK_THROWS_AS(detect_collapse(rise, 0.5, 0), std::invalid_argument);
}

TEST_CASE("detect_collapse is monotone in the threshold") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    Vector s(4 + trial % 20);
    for (double& x : s) x = u(rng);
    const std::size_t window = 1 + trial % 4;
    bool previous = true;
    for (double t = 0.05; t <= 1.0; t += 0.05) {
      const bool now = detect_collapse(s, t, window).collapsed;
      if (now) CHECK(previous);  // flagged at t implies flagged at every lower t
      previous = now;
    }
  }
}

TEST_CASE("collapse report groups snapshots by layer") {
  std::vector<SpectrumSnapshot> snaps;
  for (std::size_t it = 0; it < 8; ++it) {
    snaps.push_back({it * 10, 0, it < 4 ? Vector{1, 0.8, 0.8} : Vector{1, 0.01, 0.01}});
    snaps.push_back({it * 10, 1, Vector{1, 0.9}});
  }
  const CollapseReport r = build_collapse_report(snaps, MonitorConfig{});
  REQUIRE(r.layers.size() == 2);
  CHECK(r.layers[0].collapsed);
  CHECK(r.layers[0].onset_iteration == 40u);
  CHECK(r.layers[0].rank == 3);
  CHECK_FALSE(r.layers[1].collapsed);
  CHECK(r.collapsed());
  CHECK(r.onset_iteration() == 40u);
  CHECK(r.onset_index() == 4u);
}

TEST_CASE("snapshots of hooked and unhooked layers") {
  std::mt19937_64 rng(4);
  SUBCASE("spectral normalization leads with one") {
    const Network net({DenseSpec{6, 5, NormHook::sn()}}, rng);
    const auto s = snapshot(net, 7);
    REQUIRE(s.size() == 1);
    CHECK(s[0].iteration == 7);
    CHECK(s[0].sigma_bar.size() == 5);
    CHECK(s[0].sigma_bar[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::is_sorted(s[0].sigma_bar.rbegin(), s[0].sigma_bar.rend()));
  }
  SUBCASE("static compensation with i = r is flat") {
    const Network net({DenseSpec{6, 4, NormHook::sr_static(1.0)}}, rng);
    const auto s = snapshot(net, 0);
    for (double x : s[0].sigma_bar) CHECK(x == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(collapse_score(s[0], 0.1) == 0.0);
  }
  SUBCASE("unhooked layers are scaled by their leading value") {
    const Matrix w = oracle::with_spectrum(3, 3, {4.0, 2.0, 1.0}, rng);
    const Network net({DenseSpec{3, 3, NormHook::none()}}, std::vector<Matrix>{w});
    const Vector s = snapshot(net, 0)[0].sigma_bar;
    CHECK(s[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s[1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(s[2] == doctest::Approx(0.25).epsilon(1e-12));
  }
  SUBCASE("snapshotting leaves the network untouched") {
    const Network net({DenseSpec{4, 4, NormHook::sr_dynamic()}}, rng);
    const auto version = net.version();
    const auto gamma = net.gamma_states();
    const auto a = snapshot(net, 0), b = snapshot(net, 0);
    CHECK(a == b);
    CHECK(net.version() == version);
    CHECK(net.gamma_states() == gamma);
  }
}

TEST_CASE("true samples cover every mode") {
  for (const MixtureSpec& spec : {MixtureSpec::ring8(), MixtureSpec::grid25()}) {
    const Matrix s = sample_mixture(spec, 10000, 99);
    const ModeMetrics m = mode_metrics(s, spec, 3.0);
    CHECK(m.covered_modes == spec.size());
    CHECK(m.high_quality_fraction >= 0.95);
    CHECK(m.jsd <= 0.1);
  }
}

TEST_CASE("a sample piled on one mean covers one mode") {
  const MixtureSpec ring = MixtureSpec::ring8();
  const auto& c = ring.components[2];
  const ModeMetrics m = mode_metrics(point_cloud(1000, c.mean_x, c.mean_y), ring, 3.0);
  CHECK(m.covered_modes == 1);
  CHECK(m.high_quality_fraction == 1.0);
  CHECK(m.jsd > 0.5);
  const ModeMetrics far = mode_metrics(point_cloud(1000, 0.0, 0.0), ring, 3.0);
  CHECK(far.covered_modes == 0);
  CHECK(far.high_quality_fraction == 0.0);
}

TEST_CASE("histogram JSD basics") {
  const Matrix ref = sample_mixture(MixtureSpec::ring8(), 4000, 1);
  CHECK(histogram_jsd(ref, ref) <= 0.02);
  const double far = histogram_jsd(point_cloud(4000, 0.0, 0.0), ref);
  CHECK(far <= std::log(2.0) + 1e-9);
  CHECK(far > 0.6);
  CHECK_THROWS_AS(histogram_jsd(Matrix(3, 3), ref), DimensionError);
}

TEST_CASE("mode metrics ignore sample order") {
  const MixtureSpec ring = MixtureSpec::ring8();
  const Matrix s = sample_mixture(ring, 3000, 5);
  std::vector<std::size_t> order(s.rows());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), std::mt19937_64(8));
  Matrix p(s.rows(), 2);
  for (std::size_t i = 0; i < order.size(); ++i) {
    p(i, 0) = s(order[i], 0);
    p(i, 1) = s(order[i], 1);
  }
  CHECK(mode_metrics(s, ring, 3.0) == mode_metrics(p, ring, 3.0));
}

TEST_CASE("seeded static-compensation runs are never flagged") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    TrainConfig c;
    c.width = 8;
    c.batch = 64;
    c.g_width = 16;
    c.norm_mode = NormMode::SRStatic;
    c.iterations = 300;
    c.snapshot_every = 10;
    c.eval_samples = 256;
    c.seed = seed;
    const RunArtifacts r = train(c);
    CHECK_FALSE(r.collapse.collapsed());
    for (const auto& s : r.spectra) {
      const std::size_t i = static_index_from_fraction(s.sigma_bar.size(), 0.5);
      for (std::size_t j = 0; j < i; ++j) CHECK(s.sigma_bar[j] >= c.monitor.tau);
    }
  }
}
