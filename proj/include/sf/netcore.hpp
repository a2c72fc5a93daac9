#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

#include "sf/linalg.hpp"
#include "sf/spectral.hpp"

namespace sf {

/// Raised when a tape is replayed against a network whose weights changed.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

enum class ActivationKind { ReLU, LeakyReLU, Tanh };

/// How a Dense layer turns its raw weight into the weight used in forward.
struct NormHook {
  enum class Kind { None, SN, SRStatic, SRDynamic };
  Kind kind = Kind::None;
  double fraction = 0.5;  // SRStatic: i = ⌈fraction·r⌉

  static NormHook none() { return {}; }
  static NormHook sn() { return {Kind::SN, 0.5}; }
  static NormHook sr_static(double fraction) { return {Kind::SRStatic, fraction}; }
  static NormHook sr_dynamic() { return {Kind::SRDynamic, 0.5}; }
  bool hooked() const noexcept { return kind != Kind::None; }
};

/// y = x Wᵀ (+ b) with W of shape out_dim × in_dim. The bias is optional,
/// starts at zero, and is never normalized.
struct DenseSpec {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  NormHook hook;
  bool bias = false;
};

struct ActivationSpec {
  ActivationKind kind = ActivationKind::LeakyReLU;
  double slope = 0.1;  // LeakyReLU only
};

using LayerSpec = std::variant<DenseSpec, ActivationSpec>;

/// Intermediates recorded by Network::forward. Rows of every matrix are
/// batch entries.
struct Tape {
  std::uint64_t version = 0;
  const void* owner = nullptr;
  std::vector<Matrix> inputs;  // input to each layer
  Matrix output;
};

struct Gradients {
  std::vector<Matrix> weights;  // one per Dense layer, w.r.t. the raw weight
  std::vector<Matrix> biases;   // 1×out_dim, empty for bias-free layers
  Matrix input;

  /// Weights followed by the non-empty biases, matching Network::parameters().
  std::vector<Matrix> flat() const;
};

/// Feed-forward stack of bias-free Dense layers and element-wise activations.
///
/// Hooked layers keep the raw weight as the trainable parameter and cache the
/// normalized weight used in forward. The cache (and, for dynamic hooks, the
/// γ running maxima) is rebuilt whenever the weights change.
class Network {
 public:
  Network(std::vector<LayerSpec> layers, std::mt19937_64& rng);
  Network(std::vector<LayerSpec> layers, std::vector<Matrix> weights);

  std::size_t input_dim() const noexcept { return input_dim_; }
  std::size_t output_dim() const noexcept { return output_dim_; }
  std::size_t dense_count() const noexcept { return dense_.size(); }
  std::size_t parameter_count() const noexcept;
  const std::vector<LayerSpec>& layers() const noexcept { return specs_; }

  const std::vector<Matrix>& weights() const noexcept { return weights_; }
  void set_weights(std::vector<Matrix> weights);
  /// Bias of a Dense layer as 1×out_dim; empty when the layer has none.
  const Matrix& bias(std::size_t dense_index) const { return biases_.at(dense_index); }
  /// All trainable parameters: weights, then the biases that exist.
  std::vector<Matrix> parameters() const;
  void set_parameters(std::vector<Matrix> params);
  const Matrix& effective_weight(std::size_t dense_index) const;
  /// Normalization result of a hooked layer; nullopt for unhooked layers.
  const std::optional<RegularizedWeight>& regularized(std::size_t dense_index) const;
  const NormHook& hook(std::size_t dense_index) const;
  const GammaState& gamma(std::size_t dense_index) const;
  std::vector<GammaState> gamma_states() const;

  std::uint64_t version() const noexcept { return version_; }

  Tape forward(const Matrix& x) const;
  Matrix predict(const Matrix& x) const { return forward(x).output; }
  /// Reverse pass. `upstream` is ∂L/∂output; ReLU-type kinks at exactly zero
  /// take subgradient 0 (LeakyReLU takes the slope).
  Gradients backward(const Tape& tape, const Matrix& upstream) const;

 private:
  struct DenseSlot {
    std::size_t layer_index;
    DenseSpec spec;
    std::optional<RegularizedWeight> reg;
    GammaState gamma;
  };

  void validate();
  void refresh();

  std::vector<LayerSpec> specs_;
  std::vector<Matrix> weights_;
  std::vector<Matrix> biases_;
  std::vector<DenseSlot> dense_;
  std::vector<std::ptrdiff_t> dense_of_layer_;
  std::size_t input_dim_ = 0;
  std::size_t output_dim_ = 0;
  std::uint64_t version_ = 0;
};

/// Hinge objective for D, maximized by training:
/// mean(min(0, −1 + d_real)) + mean(min(0, −1 − d_fake)).
double hinge_loss_d(std::span<const double> d_real, std::span<const double> d_fake);
/// Generator objective −mean(d_fake), minimized.
double hinge_loss_g(std::span<const double> d_fake);

/// Gradients of the minimized quantity −hinge_loss_d.
struct HingeGradients {
  Vector d_real;
  Vector d_fake;
};
HingeGradients hinge_loss_d_grad(std::span<const double> d_real,
                                 std::span<const double> d_fake);
Vector hinge_loss_g_grad(std::span<const double> d_fake);

struct AdamConfig {
  double lr = 0.0002;
  double beta1 = 0.0;
  double beta2 = 0.9;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  std::uint64_t step = 0;

  AdamState() = default;
  AdamState(AdamConfig cfg, std::span<const Matrix> params);
};

/// Bias-corrected Adam update applied in place.
void adam_step(AdamState& state, std::span<Matrix> params, std::span<const Matrix> grads);
/// Adam on a network's raw parameters, followed by re-normalization.
void adam_step(AdamState& state, Network& net, const Gradients& grads);

}  // namespace sf
