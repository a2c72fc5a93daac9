#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sf/linalg.hpp"
#include "sf/mixture.hpp"
#include "sf/monitor.hpp"
#include "sf/netcore.hpp"

namespace sf {

enum class NormMode { None, SN, SRStatic, SRDynamic };

std::string to_string(NormMode mode);
/// Accepts none, sn, sr-static, sr-dynamic.
NormMode parse_norm_mode(const std::string& text);

struct TrainConfig {
  MixtureSpec dataset = MixtureSpec::ring8();
  std::size_t batch = 64;
  std::size_t width = 16;       // discriminator hidden width
  std::size_t depth = 4;        // discriminator Dense layers, head included
  std::size_t latent_dim = 8;
  std::size_t g_width = 64;     // generator hidden width
  NormMode norm_mode = NormMode::SN;
  double sr_fraction = 0.5;     // static i = ⌈fraction·r⌉
  std::size_t n_critic = 5;
  double lr = 0.0002;
  double beta1 = 0.0;
  double beta2 = 0.9;
  std::size_t iterations = 1000;
  std::uint64_t seed = 1;
  std::size_t snapshot_every = 100;
  std::size_t eval_samples = 2048;
  MonitorConfig monitor;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
  NormHook discriminator_hook() const;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// Losses after one generator update. loss_d is the minimized −L_D of the
/// last critic step.
struct LossRecord {
  std::size_t iteration = 0;
  double loss_d = 0.0;
  double loss_g = 0.0;
};

struct Evaluation {
  std::size_t iteration = 0;
  ModeMetrics metrics;
  Vector collapse_scores;  // per discriminator layer
};

struct RunArtifacts {
  TrainConfig config;
  std::vector<LossRecord> losses;
  std::vector<Evaluation> evaluations;
  std::vector<SpectrumSnapshot> spectra;
  Matrix samples;                 // final generator samples
  std::vector<GammaState> gamma;  // final discriminator γ (dynamic runs)
  CollapseReport collapse;
  bool aborted = false;
  std::string abort_reason;
};

/// Training hit a non-finite loss. Carries everything recorded up to the
/// last snapshot.
class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(const std::string& what, RunArtifacts partial)
      : std::runtime_error(what), partial_(std::move(partial)) {}
  const RunArtifacts& partial() const noexcept { return partial_; }

 private:
  RunArtifacts partial_;
};

std::vector<LayerSpec> discriminator_layers(const TrainConfig& config);
std::vector<LayerSpec> generator_layers(const TrainConfig& config);

/// Called after every discriminator weight update with the refreshed network.
using CriticObserver = std::function<void(std::size_t iteration, const Network& discriminator)>;

/// Adversarial training: n_critic discriminator updates then one generator
/// update per iteration. Snapshots at iteration 0 and every snapshot_every.
RunArtifacts train(const TrainConfig& config, const CriticObserver& observer = {});

}  // namespace sf
