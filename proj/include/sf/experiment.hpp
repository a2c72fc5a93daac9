#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "sf/ganlab.hpp"

namespace sf {

/// Diagnostic for a malformed experiment file: carries the line (1-based, 0
/// when the problem is not tied to a line) and the offending field.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string source, std::size_t line, std::string field, const std::string& message);

  std::size_t line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

/// Declarative sweep: a base training configuration plus a grid over batch,
/// discriminator width, normalization mode and seed.
///
///   [experiment]  name, dataset, out
///   [grid]        batch, width, norm_mode, seed   (scalars or arrays)
///   [train]       depth, latent_dim, g_width, sr_fraction, n_critic, lr,
///                 beta1, beta2, iterations, snapshot_every, eval_samples
///   [monitor]     tau, threshold, window, radius_sigmas
struct ExperimentFile {
  std::string name = "experiment";
  std::string out_dir;  // empty: runs/<name>
  TrainConfig base;
  std::vector<std::size_t> batches;
  std::vector<std::size_t> widths;
  std::vector<NormMode> norm_modes;
  std::vector<std::uint64_t> seeds;

  friend bool operator==(const ExperimentFile&, const ExperimentFile&) = default;
};

struct CellConfig {
  std::string name;
  TrainConfig config;
};

ExperimentFile parse_experiment(const std::string& text, const std::string& source = "<input>");
ExperimentFile load_experiment(const std::string& path);

/// Grid cells in declaration order (norm_mode, batch, width, seed nesting),
/// with seed_offset added to every seed.
std::vector<CellConfig> expand_grid(const ExperimentFile& file, std::int64_t seed_offset = 0);

std::string cell_name(const TrainConfig& config);

/// One-cell experiment file reproducing `config` exactly when re-parsed.
std::string echo_config(const std::string& name, const TrainConfig& config);

/// Parses the SF_SEED_OFFSET value; empty or unset means 0.
std::int64_t seed_offset_from_env();

}  // namespace sf
