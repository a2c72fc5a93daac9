#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <vector>

namespace sf {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // runtime failure or aborted cells
inline constexpr int kExitUsage = 2;    // bad configuration or arguments

struct RunOptions {
  std::filesystem::path experiment;
  std::optional<std::filesystem::path> out;
  std::size_t jobs = 1;
  std::int64_t seed_offset = 0;
};

/// Trains every grid cell into <out>/<cell>/ and writes <out>/experiment.json.
/// Cells are independent, so the artifacts do not depend on `jobs`.
int cmd_run(const RunOptions& options, std::ostream& out, std::ostream& err);

/// Writes spectra_layer<K>.csv and .svg for one layer of a run.
int cmd_spectra(const std::filesystem::path& run, std::size_t layer,
                const std::optional<std::filesystem::path>& out_dir, std::ostream& out,
                std::ostream& err);

/// Writes comparison.csv and comparison.svg with one column per run, in the
/// order given. Runs must share a dataset.
int cmd_compare(const std::vector<std::filesystem::path>& runs,
                const std::optional<std::filesystem::path>& out_dir, std::ostream& out,
                std::ostream& err);

}  // namespace sf
