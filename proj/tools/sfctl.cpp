#include <iostream>

#include "CLI11.hpp"
#include "sf/commands.hpp"
#include "sf/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Spectral normalization / regularization experiments on toy GANs"};
  app.require_subcommand(1);

  sf::RunOptions run;
  std::string out_dir;
  auto* run_cmd = app.add_subcommand("run", "Train every cell of an experiment grid");
  run_cmd->add_option("experiment", run.experiment, "Experiment file (TOML)")->required();
  run_cmd->add_option("--jobs,-j", run.jobs, "Cells trained in parallel")->check(CLI::PositiveNumber);
  run_cmd->add_option("--out,-o", out_dir, "Output directory (overrides the file)");

  std::string spectra_run;
  std::size_t layer = 0;
  std::string spectra_out;
  auto* spectra_cmd = app.add_subcommand("spectra", "Plot one layer's spectrum over training");
  spectra_cmd->add_option("run", spectra_run, "Cell directory")->required();
  spectra_cmd->add_option("--layer,-l", layer, "Discriminator layer id")->required();
  spectra_cmd->add_option("--out,-o", spectra_out, "Output directory (default: the run)");

  std::vector<std::string> compare_runs;
  std::string compare_out;
  auto* compare_cmd = app.add_subcommand("compare", "Tabulate and plot several runs");
  compare_cmd->add_option("runs", compare_runs, "Cell directories, in column order")->required();
  compare_cmd->add_option("--out,-o", compare_out, "Output directory (default: .)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : sf::kExitUsage;
  }

  if (*run_cmd) {
    if (!out_dir.empty()) run.out = out_dir;
    try {
      run.seed_offset = sf::seed_offset_from_env();
    } catch (const sf::ConfigError& e) {
      std::cerr << "error: " << e.what() << "\n";
      return sf::kExitUsage;
    }
    return sf::cmd_run(run, std::cout, std::cerr);
  }
  if (*spectra_cmd) {
    std::optional<std::filesystem::path> dest;
    if (!spectra_out.empty()) dest = spectra_out;
    return sf::cmd_spectra(spectra_run, layer, dest, std::cout, std::cerr);
  }
  std::optional<std::filesystem::path> dest;
  if (!compare_out.empty()) dest = compare_out;
  std::vector<std::filesystem::path> dirs(compare_runs.begin(), compare_runs.end());
  return sf::cmd_compare(dirs, dest, std::cout, std::cerr);
}
