#include "sf/monitor.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace sf {

std::vector<SpectrumSnapshot> snapshot(const Network& net, std::size_t iteration) {
  std::vector<SpectrumSnapshot> out;
  out.reserve(net.dense_count());
  for (std::size_t k = 0; k < net.dense_count(); ++k) {
    Vector sigma = svd(net.effective_weight(k)).sigma;
    if (!net.hook(k).hooked() && sigma[0] > 0.0) {
      const double s1 = sigma[0];
      for (double& s : sigma) s /= s1;
    }
    out.push_back({iteration, k, std::move(sigma)});
  }
  return out;
}

double collapse_score(const SpectrumSnapshot& s, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("collapse_score: tau must lie in (0, 1)");
  if (s.sigma_bar.size() < 2) return 0.0;
  const auto below = std::count_if(s.sigma_bar.begin() + 1, s.sigma_bar.end(),
                                   [tau](double x) { return x < tau; });
  return static_cast<double>(below) / static_cast<double>(s.sigma_bar.size() - 1);
}

CollapseVerdict detect_collapse(std::span<const double> scores, double threshold,
                                std::size_t window) {
  if (scores.empty()) throw std::invalid_argument("detect_collapse: empty score series");
  if (window == 0) throw std::invalid_argument("detect_collapse: window must be positive");
  const std::size_t quarter = std::max<std::size_t>(1, scores.size() / 4);
  double baseline = 0.0;
  for (std::size_t i = 0; i < quarter; ++i) baseline += scores[i];
  baseline /= static_cast<double>(quarter);

  std::size_t run = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool hit = scores[i] >= threshold && scores[i] - baseline >= kCollapseRise;
    run = hit ? run + 1 : 0;
    if (run == window) return {true, i + 1 - window};
  }
  return {false, std::nullopt};
}

bool CollapseReport::collapsed() const noexcept {
  return std::any_of(layers.begin(), layers.end(), [](const auto& l) { return l.collapsed; });
}

std::optional<std::size_t> CollapseReport::onset_iteration() const noexcept {
  std::optional<std::size_t> best;
  for (const auto& l : layers)
    if (l.onset_iteration && (!best || *l.onset_iteration < *best)) best = l.onset_iteration;
  return best;
}

std::optional<std::size_t> CollapseReport::onset_index() const noexcept {
  std::optional<std::size_t> best_iter;
  std::optional<std::size_t> best;
  for (const auto& l : layers) {
    if (l.onset_iteration && (!best_iter || *l.onset_iteration < *best_iter)) {
      best_iter = l.onset_iteration;
      best = l.onset_index;
    }
  }
  return best;
}

CollapseReport build_collapse_report(std::span<const SpectrumSnapshot> snapshots,
                                     const MonitorConfig& config) {
  std::map<std::size_t, LayerCollapse> by_layer;
  for (const auto& s : snapshots) {
    auto& l = by_layer[s.layer_id];
    l.layer_id = s.layer_id;
    l.rank = s.sigma_bar.size();
    l.iterations.push_back(s.iteration);
    l.scores.push_back(collapse_score(s, config.tau));
  }
  CollapseReport report;
  for (auto& [id, l] : by_layer) {
    const CollapseVerdict v = detect_collapse(l.scores, config.threshold, config.window);
    l.collapsed = v.collapsed;
    if (v.onset) {
      l.onset_index = v.onset;
      l.onset_iteration = l.iterations[*v.onset];
    }
    report.layers.push_back(std::move(l));
  }
  return report;
}

namespace {

struct Box {
  double x0, x1, y0, y1;
};

Box bounding_box(const Matrix& m) {
  Box b{m(0, 0), m(0, 0), m(0, 1), m(0, 1)};
  for (std::size_t i = 1; i < m.rows(); ++i) {
    b.x0 = std::min(b.x0, m(i, 0));
    b.x1 = std::max(b.x1, m(i, 0));
    b.y0 = std::min(b.y0, m(i, 1));
    b.y1 = std::max(b.y1, m(i, 1));
  }
  if (b.x1 <= b.x0) { b.x0 -= 0.5; b.x1 += 0.5; }
  if (b.y1 <= b.y0) { b.y0 -= 0.5; b.y1 += 0.5; }
  return b;
}

std::size_t bin_of(double v, double lo, double hi) {
  const double t = (v - lo) / (hi - lo) * static_cast<double>(kJsdBins);
  if (!(t > 0.0)) return 0;
  return std::min(kJsdBins - 1, static_cast<std::size_t>(t));
}

std::vector<double> histogram(const Matrix& m, const Box& b) {
  std::vector<double> counts(kJsdBins * kJsdBins, 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    counts[bin_of(m(i, 0), b.x0, b.x1) * kJsdBins + bin_of(m(i, 1), b.y0, b.y1)] += 1.0;
  }
  const double n = static_cast<double>(m.rows());
  const double norm = 1.0 + kJsdSmoothing * static_cast<double>(counts.size());
  for (double& c : counts) c = (c / n + kJsdSmoothing) / norm;
  return counts;
}

void require_points(const Matrix& m, const char* what) {
  if (m.empty() || m.cols() != 2) {
    throw DimensionError(std::string(what) + " must be an n x 2 matrix, got " + m.shape_string());
  }
}

}  // namespace

double histogram_jsd(const Matrix& samples, const Matrix& reference) {
  require_points(samples, "samples");
  require_points(reference, "reference");
  const Box box = bounding_box(reference);
  const auto p = histogram(samples, box);
  const auto q = histogram(reference, box);
  double js = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    js += 0.5 * p[i] * std::log(p[i] / m) + 0.5 * q[i] * std::log(q[i] / m);
  }
  return std::max(0.0, js);
}

ModeMetrics mode_metrics(const Matrix& samples, const MixtureSpec& spec, double radius_sigmas,
                         std::uint64_t reference_seed) {
  require_points(samples, "samples");
  return mode_metrics(samples, spec, radius_sigmas,
                      sample_mixture(spec, samples.rows(), reference_seed));
}

ModeMetrics mode_metrics(const Matrix& samples, const MixtureSpec& spec, double radius_sigmas,
                         const Matrix& reference) {
  require_points(samples, "samples");
  spec.validate();
  if (!(radius_sigmas > 0.0)) throw std::invalid_argument("mode_metrics: radius must be positive");
  const std::size_t n = samples.rows();
  const std::size_t modes = spec.size();
  std::vector<std::size_t> hits(modes, 0);
  std::size_t near_any = 0;
  for (std::size_t i = 0; i < n; ++i) {
    bool near = false;
    for (std::size_t k = 0; k < modes; ++k) {
      const auto& c = spec.components[k];
      const double r = radius_sigmas * c.stddev;
      const double dx = samples(i, 0) - c.mean_x;
      const double dy = samples(i, 1) - c.mean_y;
      if (dx * dx + dy * dy <= r * r) {
        ++hits[k];
        near = true;
      }
    }
    if (near) ++near_any;
  }
  const double needed =
      std::max(10.0, 0.2 * static_cast<double>(n) / static_cast<double>(modes));
  ModeMetrics out;
  for (std::size_t h : hits)
    if (static_cast<double>(h) >= needed) ++out.covered_modes;
  out.high_quality_fraction = static_cast<double>(near_any) / static_cast<double>(n);
  out.jsd = histogram_jsd(samples, reference);
  return out;
}

}  // namespace sf
