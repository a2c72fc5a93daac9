#include "sf/artifacts.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "sf/experiment.hpp"

namespace sf {

namespace fs = std::filesystem;
using nlohmann::json;

const std::vector<std::string>& run_artifact_files() {
  static const std::vector<std::string> files = {"config.echo.toml", "metrics.csv",
                                                 "spectra.json",     "gamma.json",
                                                 "samples.csv",      "manifest.json"};
  return files;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  return out + "\"";
}

std::string format_number(double x) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, p);
}

bool RunSummary::mode_collapsed() const {
  const Evaluation* last = final_evaluation();
  return last && 2 * last->metrics.covered_modes <= modes;
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ArtifactError("cannot write " + path.string());
  out << text;
  if (!out) throw ArtifactError("short write to " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArtifactError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json optional_json(const std::optional<std::size_t>& v) {
  return v ? json(*v) : json(nullptr);
}

// One row per training iteration; evaluation columns are filled on snapshot
// iterations. The iteration-0 evaluation precedes any update and lives only in
// the manifest.
std::string metrics_csv(const RunArtifacts& run) {
  std::map<std::size_t, const Evaluation*> evals;
  for (const auto& e : run.evaluations) evals[e.iteration] = &e;

  std::string out = "# schema=1\niteration,loss_d,loss_g,covered_modes,high_quality_fraction,jsd\n";
  for (const auto& l : run.losses) {
    out += std::to_string(l.iteration) + ',' + format_number(l.loss_d) + ',' + format_number(l.loss_g) + ',';
    if (auto it = evals.find(l.iteration); it != evals.end()) {
      const ModeMetrics& m = it->second->metrics;
      out += std::to_string(m.covered_modes) + ',' + format_number(m.high_quality_fraction) + ',' +
             format_number(m.jsd);
    } else {
      out += ",,";
    }
    out += '\n';
  }
  return out;
}

json evaluations_json(const std::vector<Evaluation>& evals) {
  json arr = json::array();
  for (const auto& e : evals) {
    arr.push_back({{"iteration", e.iteration},
                   {"covered_modes", e.metrics.covered_modes},
                   {"high_quality_fraction", e.metrics.high_quality_fraction},
                   {"jsd", e.metrics.jsd},
                   {"collapse_scores", e.collapse_scores}});
  }
  return arr;
}

json collapse_json(const CollapseReport& report) {
  json layers = json::array();
  for (const auto& l : report.layers) {
    layers.push_back({{"layer", l.layer_id},
                      {"rank", l.rank},
                      {"collapsed", l.collapsed},
                      {"onset_iteration", optional_json(l.onset_iteration)},
                      {"scores", l.scores}});
  }
  return {{"collapsed", report.collapsed()},
          {"onset_iteration", optional_json(report.onset_iteration())},
          {"layers", layers}};
}

}  // namespace

void write_run(const fs::path& dir, const std::string& cell, const RunArtifacts& run) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ArtifactError("cannot create " + dir.string() + ": " + ec.message());

  write_text(dir / "config.echo.toml", echo_config(cell, run.config));
  write_text(dir / "metrics.csv", metrics_csv(run));

  json spectra = json::array();
  for (const auto& s : run.spectra)
    spectra.push_back({{"iteration", s.iteration}, {"layer", s.layer_id}, {"sigma_bar", s.sigma_bar}});
  write_text(dir / "spectra.json", spectra.dump(1) + "\n");

  json gamma = json::array();
  for (std::size_t k = 0; k < run.gamma.size(); ++k)
    gamma.push_back({{"layer", k}, {"gamma", run.gamma[k].gamma}});
  write_text(dir / "gamma.json", json{{"schema", kArtifactSchema}, {"layers", gamma}}.dump(1) + "\n");

  std::string samples = "# schema=1\nx,y\n";
  if (!run.samples.empty())
    for (std::size_t i = 0; i < run.samples.rows(); ++i)
      samples += format_number(run.samples(i, 0)) + ',' + format_number(run.samples(i, 1)) + '\n';
  write_text(dir / "samples.csv", samples);

  json manifest = {
      {"schema", kArtifactSchema},
      {"cell", cell},
      {"status", run.aborted ? "aborted" : "ok"},
      {"abort_reason", run.aborted ? json(run.abort_reason) : json(nullptr)},
      {"dataset", run.config.dataset.name},
      {"modes", run.config.dataset.size()},
      {"norm_mode", to_string(run.config.norm_mode)},
      {"batch", run.config.batch},
      {"width", run.config.width},
      {"seed", run.config.seed},
      {"iterations_completed", run.losses.empty() ? 0 : run.losses.back().iteration},
      {"evaluations", evaluations_json(run.evaluations)},
      {"collapse", collapse_json(run.collapse)},
      {"files", run_artifact_files()},
  };
  write_text(dir / "manifest.json", manifest.dump(1) + "\n");
}

namespace {

void require_run_dir(const fs::path& dir, const std::string& needed) {
  if (!fs::is_directory(dir)) throw ArtifactError(dir.string() + ": not a directory");
  if (!fs::exists(dir / needed)) {
    std::string list;
    for (const auto& f : run_artifact_files()) list += (list.empty() ? "" : ", ") + f;
    throw ArtifactError(dir.string() + ": missing " + needed +
                        " (a run directory holds " + list + ")");
  }
}

json parse_json(const fs::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw ArtifactError(path.string() + ": malformed JSON: " + e.what());
  }
}

}  // namespace

RunSummary read_run(const fs::path& dir) {
  require_run_dir(dir, "manifest.json");
  require_run_dir(dir, "config.echo.toml");
  RunSummary s;
  s.dir = dir;
  const fs::path cfg_path = dir / "config.echo.toml";
  try {
    const auto cells = expand_grid(parse_experiment(read_text(cfg_path), cfg_path.string()));
    s.config = cells.front().config;
  } catch (const ConfigError& e) {
    throw ArtifactError(e.what());
  }
  const json m = parse_json(dir / "manifest.json");
  try {
    if (m.at("schema").get<int>() != kArtifactSchema)
      throw ArtifactError((dir / "manifest.json").string() + ": unsupported schema");
    s.cell = m.at("cell").get<std::string>();
    s.status = m.at("status").get<std::string>();
    if (!m.at("abort_reason").is_null()) s.abort_reason = m.at("abort_reason").get<std::string>();
    s.modes = m.at("modes").get<std::size_t>();
    for (const auto& e : m.at("evaluations")) {
      Evaluation ev;
      ev.iteration = e.at("iteration").get<std::size_t>();
      ev.metrics.covered_modes = e.at("covered_modes").get<std::size_t>();
      ev.metrics.high_quality_fraction = e.at("high_quality_fraction").get<double>();
      ev.metrics.jsd = e.at("jsd").get<double>();
      ev.collapse_scores = e.at("collapse_scores").get<Vector>();
      s.evaluations.push_back(std::move(ev));
    }
    const json& c = m.at("collapse");
    s.collapsed = c.at("collapsed").get<bool>();
    if (!c.at("onset_iteration").is_null()) s.onset_iteration = c.at("onset_iteration").get<std::size_t>();
  } catch (const json::exception& e) {
    throw ArtifactError((dir / "manifest.json").string() + ": " + e.what());
  }
  return s;
}

std::vector<SpectrumSnapshot> read_spectra(const fs::path& dir) {
  require_run_dir(dir, "spectra.json");
  const json arr = parse_json(dir / "spectra.json");
  std::vector<SpectrumSnapshot> out;
  try {
    for (const auto& e : arr) {
      out.push_back({e.at("iteration").get<std::size_t>(), e.at("layer").get<std::size_t>(),
                     e.at("sigma_bar").get<Vector>()});
    }
  } catch (const json::exception& e) {
    throw ArtifactError((dir / "spectra.json").string() + ": " + e.what());
  }
  return out;
}

}  // namespace sf
