#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "sf/linalg.hpp"

namespace sf {

/// The weight has zero spectral norm, so it cannot be normalized.
class DegenerateWeightError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class CompensationMode { Static, Dynamic };

/// Per-singular-value compensation Δσ_k added before renormalization.
///
/// delta_sigma has one entry per singular value and delta_sigma[0] is always
/// zero. Static plans raise the first `static_i` values to σ1; dynamic plans
/// raise value k to γ_k·σ1 and carry the γ they were built from, which the
/// backward rule needs.
struct CompensationPlan {
  CompensationMode mode = CompensationMode::Static;
  std::size_t static_i = 1;
  Vector delta_sigma;
  std::size_t n_compensated = 1;
  Vector gamma;  // dynamic only

  /// Static plan with i = 1: no compensation, i.e. plain spectral normalization.
  static CompensationPlan identity(std::size_t rank);
  bool is_identity() const noexcept;
};

/// Running maxima γ_j of σ_j/σ1 for one layer. Empty until the first update.
struct GammaState {
  Vector gamma;

  static GammaState from_spectrum(std::span<const double> sigma);
  bool empty() const noexcept { return gamma.empty(); }
  friend bool operator==(const GammaState&, const GammaState&) = default;
};

/// A weight as the layer uses it, with everything its backward pass needs.
struct RegularizedWeight {
  Matrix w_bar;
  double sigma1 = 0.0;
  CompensationPlan plan;
  SvdFactors factors;
};

RegularizedWeight spectral_normalize(const Matrix& w);
RegularizedWeight spectral_normalize(const Matrix& w, SvdFactors factors);

/// ⌈fraction·r⌉ clamped into [1, r].
std::size_t static_index_from_fraction(std::size_t rank, double fraction);

CompensationPlan static_plan(const SvdFactors& f, std::size_t i);

/// Updates the running maxima with the current spectrum, then builds the plan
/// from the updated γ. An empty state is initialized from the spectrum.
std::pair<CompensationPlan, GammaState> dynamic_plan(const SvdFactors& f,
                                                     const GammaState& g);

/// W̄ = (W + ΔW)/σ1(W) with ΔW = Σ_{k=2}^{N} Δσ_k u_k v_kᵀ.
RegularizedWeight apply_sr(const Matrix& w, const SvdFactors& f,
                           const CompensationPlan& plan);

/// Backward rule of the spectral normalization map alone:
/// (G − ⟨G, W/σ1⟩ u1v1ᵀ)/σ1.
Matrix sn_gradient(const Matrix& w, const SvdFactors& f, const Matrix& upstream);

/// Pulls `upstream` = ∂L/∂W̄ back to ∂L/∂W through the compensated map with
/// u_k, v_k held fixed and σ_k varying (∂σ_k/∂W = u_k v_kᵀ).
///
/// Dynamic plans use coefficient γ_k u1v1ᵀ − u_kv_kᵀ for each Δσ_k > 0;
/// clamped entries contribute nothing. An identity plan reduces exactly to
/// sn_gradient.
Matrix sr_gradient(const Matrix& w, const SvdFactors& f, const CompensationPlan& plan,
                   const Matrix& upstream);

/// Convolution kernel laid out [out, in, h, w], row-major.
struct ConvKernel {
  std::size_t out = 0, in = 0, h = 0, w = 0;
  std::vector<double> data;

  double& at(std::size_t o, std::size_t i, std::size_t y, std::size_t x) {
    return data[((o * in + i) * h + y) * w + x];
  }
  friend bool operator==(const ConvKernel&, const ConvKernel&) = default;
};

/// out × (in·h·w), one row per output channel.
Matrix reshape_conv(const ConvKernel& kernel);
ConvKernel unreshape_conv(const Matrix& m, std::size_t in, std::size_t h, std::size_t w);

struct LipschitzProbe {
  Vector direction;  // unit norm
  double ratio = 0.0;
  bool singular_direction = false;  // one of the right singular vectors
  std::size_t index = 0;            // singular index or trial number
};

/// Ratios ‖Wx‖/‖x‖ over every right singular vector plus `trials` random unit
/// vectors. Requires σ1(W) ≤ 1 + 1e-9.
std::vector<LipschitzProbe> lipschitz_probes(const Matrix& w, std::size_t trials,
                                             std::uint64_t seed);
double verify_lipschitz_supremum(const Matrix& w, std::size_t trials, std::uint64_t seed);

}  // namespace sf
