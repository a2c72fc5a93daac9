#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sf/ganlab.hpp"

namespace sf {

inline constexpr int kArtifactSchema = 1;

/// Files every completed cell directory holds.
const std::vector<std::string>& run_artifact_files();

/// A run directory that is missing or malformed.
class ArtifactError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// RFC 4180 field quoting.
std::string csv_field(const std::string& s);
/// Shortest decimal that round-trips.
std::string format_number(double x);

/// Writes config.echo.toml, metrics.csv, spectra.json, gamma.json,
/// samples.csv and manifest.json. Works for aborted runs too; the manifest
/// then carries status "aborted" and the reason.
void write_run(const std::filesystem::path& dir, const std::string& cell,
               const RunArtifacts& run);

struct RunSummary {
  std::string cell;
  std::filesystem::path dir;
  std::string status;  // "ok" or "aborted"
  std::string abort_reason;
  TrainConfig config;
  std::size_t modes = 0;
  std::vector<Evaluation> evaluations;
  bool collapsed = false;
  std::optional<std::size_t> onset_iteration;

  const Evaluation* final_evaluation() const {
    return evaluations.empty() ? nullptr : &evaluations.back();
  }
  /// Final coverage at most half the modes.
  bool mode_collapsed() const;
};

RunSummary read_run(const std::filesystem::path& dir);
std::vector<SpectrumSnapshot> read_spectra(const std::filesystem::path& dir);

}  // namespace sf
