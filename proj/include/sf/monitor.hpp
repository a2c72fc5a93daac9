#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "sf/linalg.hpp"
#include "sf/mixture.hpp"
#include "sf/netcore.hpp"

namespace sf {

/// Sorted (descending) spectrum of a layer's weight as used in forward,
/// scaled so the leading value is 1.
struct SpectrumSnapshot {
  std::size_t iteration = 0;
  std::size_t layer_id = 0;
  Vector sigma_bar;

  friend bool operator==(const SpectrumSnapshot&, const SpectrumSnapshot&) = default;
};

/// One snapshot per Dense layer. For hooked layers this is the spectrum of W̄
/// itself; unhooked layers report σ(W)/σ1(W).
std::vector<SpectrumSnapshot> snapshot(const Network& net, std::size_t iteration);

/// Fraction of the non-leading singular values below tau; 0 for rank-1 layers.
double collapse_score(const SpectrumSnapshot& s, double tau);

struct CollapseVerdict {
  bool collapsed = false;
  std::optional<std::size_t> onset;  // index into the score series
};

/// Minimum rise above the early baseline required before a layer counts as
/// collapsed.
inline constexpr double kCollapseRise = 0.2;

/// A series collapses when `window` consecutive scores are all ≥ threshold
/// and all at least kCollapseRise above the baseline, which is the mean of
/// the first quarter of the series.
CollapseVerdict detect_collapse(std::span<const double> scores, double threshold,
                                std::size_t window);

struct MonitorConfig {
  double tau = 0.1;
  double threshold = 0.5;
  std::size_t window = 3;
  double radius_sigmas = 3.0;

  friend bool operator==(const MonitorConfig&, const MonitorConfig&) = default;
};

struct LayerCollapse {
  std::size_t layer_id = 0;
  std::size_t rank = 0;
  std::vector<std::size_t> iterations;
  Vector scores;
  bool collapsed = false;
  std::optional<std::size_t> onset_index;
  std::optional<std::size_t> onset_iteration;
};

struct CollapseReport {
  std::vector<LayerCollapse> layers;

  bool collapsed() const noexcept;
  /// Earliest onset iteration over collapsed layers.
  std::optional<std::size_t> onset_iteration() const noexcept;
  /// Snapshot index matching onset_iteration().
  std::optional<std::size_t> onset_index() const noexcept;
};

/// Groups snapshots by layer (in iteration order) and runs detect_collapse on
/// each layer's score series.
CollapseReport build_collapse_report(std::span<const SpectrumSnapshot> snapshots,
                                     const MonitorConfig& config);

struct ModeMetrics {
  std::size_t covered_modes = 0;
  double high_quality_fraction = 0.0;
  double jsd = 0.0;

  friend bool operator==(const ModeMetrics&, const ModeMetrics&) = default;
};

inline constexpr std::size_t kJsdBins = 64;
inline constexpr double kJsdSmoothing = 1e-9;
inline constexpr std::uint64_t kReferenceSeed = 0x5eed5eedULL;

/// Mode coverage, near-mode sample share, and histogram Jensen–Shannon
/// divergence (natural log) against a reference draw of the same size.
ModeMetrics mode_metrics(const Matrix& samples, const MixtureSpec& spec,
                         double radius_sigmas, std::uint64_t reference_seed = kReferenceSeed);
/// Same metrics against an explicit reference sample.
ModeMetrics mode_metrics(const Matrix& samples, const MixtureSpec& spec,
                         double radius_sigmas, const Matrix& reference);

/// JSD between the 64×64 histograms of two samples over the reference's
/// bounding box; out-of-box points land in the edge bins.
double histogram_jsd(const Matrix& samples, const Matrix& reference);

}  // namespace sf
