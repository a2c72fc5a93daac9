#include "sf/commands.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include "json.hpp"
#include "sf/artifacts.hpp"
#include "sf/experiment.hpp"
#include "sf/svg.hpp"

namespace sf {

namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream o(path, std::ios::binary | std::ios::trunc);
  if (!o) throw ArtifactError("cannot write " + path.string());
  o << text;
}

std::string fixed(double x, int digits) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

struct CellOutcome {
  std::string status = "pending";
  std::string reason;
};

}  // namespace

int cmd_run(const RunOptions& options, std::ostream& out, std::ostream& err) {
  ExperimentFile file;
  std::vector<CellConfig> cells;
  try {
    file = load_experiment(options.experiment.string());
    cells = expand_grid(file, options.seed_offset);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  std::set<std::string> names;
  for (const auto& c : cells) {
    if (!names.insert(c.name).second) {
      err << "error: " << options.experiment.string() << ": grid produces cell '" << c.name
          << "' twice; remove the repeated value\n";
      return kExitUsage;
    }
  }
  const fs::path root = options.out ? *options.out
                        : !file.out_dir.empty() ? fs::path(file.out_dir)
                                                : fs::path("runs") / file.name;
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) {
    err << "error: cannot create " << root.string() << ": " << ec.message() << "\n";
    return kExitFailure;
  }

  std::vector<CellOutcome> outcomes(cells.size());
  std::atomic<std::size_t> next{0};
  std::mutex io;
  auto worker = [&] {
    for (std::size_t k = next++; k < cells.size(); k = next++) {
      const CellConfig& cell = cells[k];
      CellOutcome& result = outcomes[k];
      try {
        RunArtifacts run;
        try {
          run = train(cell.config);
        } catch (const TrainingDiverged& d) {
          run = d.partial();
        }
        write_run(root / cell.name, cell.name, run);
        result.status = run.aborted ? "aborted" : "ok";
        result.reason = run.abort_reason;
        std::lock_guard lock(io);
        out << cell.name << ": " << result.status;
        if (run.aborted) {
          out << " (" << run.abort_reason << ")";
        } else if (!run.evaluations.empty()) {
          const ModeMetrics& m = run.evaluations.back().metrics;
          out << " coverage " << m.covered_modes << "/" << cell.config.dataset.size() << " jsd "
              << fixed(m.jsd, 3) << " collapse " << (run.collapse.collapsed() ? "yes" : "no");
        }
        out << "\n";
      } catch (const std::exception& e) {
        result.status = "failed";
        result.reason = e.what();
        std::lock_guard lock(io);
        err << cell.name << ": failed: " << e.what() << "\n";
      }
    }
  };
  const std::size_t jobs = std::max<std::size_t>(1, std::min(options.jobs, cells.size()));
  std::vector<std::thread> pool;
  for (std::size_t j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  nlohmann::json list = nlohmann::json::array();
  bool all_ok = true;
  for (std::size_t k = 0; k < cells.size(); ++k) {
    all_ok = all_ok && outcomes[k].status == "ok";
    list.push_back({{"cell", cells[k].name},
                    {"status", outcomes[k].status},
                    {"reason", outcomes[k].reason.empty() ? nlohmann::json(nullptr)
                                                          : nlohmann::json(outcomes[k].reason)}});
  }
  const nlohmann::json summary = {{"schema", kArtifactSchema},
                                  {"name", file.name},
                                  {"dataset", file.base.dataset.name},
                                  {"seed_offset", options.seed_offset},
                                  {"cells", list}};
  try {
    write_file(root / "experiment.json", summary.dump(1) + "\n");
  } catch (const ArtifactError& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  out << "wrote " << cells.size() << " cell(s) to " << root.string() << "\n";
  return all_ok ? kExitOk : kExitFailure;
}

int cmd_spectra(const fs::path& run, std::size_t layer, const std::optional<fs::path>& out_dir,
                std::ostream& out, std::ostream& err) {
  std::vector<SpectrumSnapshot> all;
  try {
    all = read_spectra(run);
  } catch (const ArtifactError& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  std::vector<const SpectrumSnapshot*> picked;
  std::set<std::size_t> available;
  for (const auto& s : all) {
    available.insert(s.layer_id);
    if (s.layer_id == layer) picked.push_back(&s);
  }
  if (picked.empty()) {
    err << "error: " << run.string() << " has no spectra for layer " << layer
        << "; available layers:";
    if (available.empty()) err << " none";
    for (std::size_t id : available) err << " " << id;
    err << "\n";
    return kExitUsage;
  }

  std::string csv = "# schema=1\niteration,index,sigma_bar\n";
  svg::Chart chart;
  chart.title = "Layer " + std::to_string(layer) + " normalized spectrum";
  chart.x_label = "singular value index";
  chart.y_label = "sigma / sigma_1";
  chart.y_min = 0.0;
  chart.y_max = 1.05;
  for (std::size_t p = 0; p < picked.size(); ++p) {
    const SpectrumSnapshot& s = *picked[p];
    svg::Series series;
    series.label = "it " + std::to_string(s.iteration);
    series.color = svg::ramp_color(picked.size() > 1 ? double(p) / double(picked.size() - 1) : 0.0);
    for (std::size_t i = 0; i < s.sigma_bar.size(); ++i) {
      csv += std::to_string(s.iteration) + "," + std::to_string(i + 1) + "," +
             format_number(s.sigma_bar[i]) + "\n";
      series.xs.push_back(double(i + 1));
      series.ys.push_back(s.sigma_bar[i]);
    }
    chart.series.push_back(std::move(series));
  }

  const fs::path dest = out_dir ? *out_dir : run;
  const std::string stem = "spectra_layer" + std::to_string(layer);
  try {
    std::error_code ec;
    fs::create_directories(dest, ec);
    write_file(dest / (stem + ".csv"), csv);
    write_file(dest / (stem + ".svg"), svg::render_chart(chart));
  } catch (const ArtifactError& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  out << "wrote " << (dest / (stem + ".csv")).string() << " and " << stem << ".svg ("
      << picked.size() << " snapshots)\n";
  return kExitOk;
}

int cmd_compare(const std::vector<fs::path>& runs, const std::optional<fs::path>& out_dir,
                std::ostream& out, std::ostream& err) {
  if (runs.size() < 2) {
    err << "error: compare needs at least two run directories\n";
    return kExitUsage;
  }
  std::vector<RunSummary> summaries;
  try {
    for (const auto& r : runs) summaries.push_back(read_run(r));
  } catch (const ArtifactError& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  for (const auto& s : summaries) {
    if (s.config.dataset.name != summaries.front().config.dataset.name) {
      err << "error: refusing to compare runs on different datasets: "
          << summaries.front().dir.string() << " uses " << summaries.front().config.dataset.name
          << ", " << s.dir.string() << " uses " << s.config.dataset.name << "\n";
      return kExitUsage;
    }
  }

  std::vector<std::string> labels;
  for (const auto& s : summaries) {
    std::string label = s.dir.filename().string();
    if (label.empty()) label = s.dir.parent_path().filename().string();
    labels.push_back(label.empty() ? s.cell : label);
  }

  // Each row: name, exact CSV cells, display cells.
  struct Row {
    std::string metric;
    std::vector<std::string> exact;
    std::vector<std::string> shown;
  };
  std::vector<Row> rows;
  auto add = [&](const std::string& metric, auto exact, auto shown) {
    Row r{metric, {}, {}};
    for (const auto& s : summaries) {
      r.exact.push_back(exact(s));
      r.shown.push_back(shown(s));
    }
    rows.push_back(std::move(r));
  };
  auto final_metric = [](const RunSummary& s, auto f) -> std::string {
    const Evaluation* e = s.final_evaluation();
    return e ? f(e->metrics) : std::string();
  };

  const auto norm = [](const RunSummary& s) { return to_string(s.config.norm_mode); };
  add("norm_mode", norm, norm);
  const auto batch = [](const RunSummary& s) { return std::to_string(s.config.batch); };
  add("batch", batch, batch);
  const auto width = [](const RunSummary& s) { return std::to_string(s.config.width); };
  add("width", width, width);
  const auto seed = [](const RunSummary& s) { return std::to_string(s.config.seed); };
  add("seed", seed, seed);
  const auto status = [](const RunSummary& s) { return s.status; };
  add("status", status, status);
  const auto last_it = [](const RunSummary& s) {
    return s.final_evaluation() ? std::to_string(s.final_evaluation()->iteration) : std::string();
  };
  add("final_iteration", last_it, last_it);
  add("covered_modes",
      [&](const RunSummary& s) {
        return final_metric(s, [](const ModeMetrics& m) { return std::to_string(m.covered_modes); });
      },
      [&](const RunSummary& s) {
        return final_metric(s, [&](const ModeMetrics& m) {
          return std::to_string(m.covered_modes) + "/" + std::to_string(s.modes);
        });
      });
  add("high_quality_fraction",
      [&](const RunSummary& s) {
        return final_metric(s, [](const ModeMetrics& m) { return format_number(m.high_quality_fraction); });
      },
      [&](const RunSummary& s) {
        return final_metric(s, [](const ModeMetrics& m) { return fixed(m.high_quality_fraction, 3); });
      });
  add("jsd",
      [&](const RunSummary& s) {
        return final_metric(s, [](const ModeMetrics& m) { return format_number(m.jsd); });
      },
      [&](const RunSummary& s) {
        return final_metric(s, [](const ModeMetrics& m) { return fixed(m.jsd, 3); });
      });
  const auto sc = [](const RunSummary& s) { return std::string(s.collapsed ? "yes" : "no"); };
  add("spectral_collapse", sc, sc);
  const auto onset = [](const RunSummary& s) {
    return s.onset_iteration ? std::to_string(*s.onset_iteration) : std::string();
  };
  add("collapse_onset_iteration", onset, [&](const RunSummary& s) {
    const std::string o = onset(s);
    return o.empty() ? std::string("-") : o;
  });
  const auto mc = [](const RunSummary& s) { return std::string(s.mode_collapsed() ? "yes" : "no"); };
  add("mode_collapse", mc, mc);

  std::string csv = "# schema=1\nmetric";
  for (const auto& l : labels) csv += "," + csv_field(l);
  csv += "\n";
  for (const auto& r : rows) {
    csv += csv_field(r.metric);
    for (const auto& c : r.exact) csv += "," + csv_field(c);
    csv += "\n";
  }

  svg::Table table;
  table.header.push_back("metric");
  table.header.insert(table.header.end(), labels.begin(), labels.end());
  for (const auto& r : rows) {
    std::vector<std::string> cells{r.metric};
    cells.insert(cells.end(), r.shown.begin(), r.shown.end());
    table.rows.push_back(std::move(cells));
  }
  svg::Chart coverage{"Mode coverage", "iteration", "covered modes", {}, 0.0,
                      double(summaries.front().modes)};
  svg::Chart jsd{"Histogram JSD", "iteration", "JSD (nats)", {}, 0.0, std::log(2.0)};
  for (std::size_t k = 0; k < summaries.size(); ++k) {
    svg::Series c{labels[k], {}, {}, {}};
    svg::Series j{labels[k], {}, {}, {}};
    for (const auto& e : summaries[k].evaluations) {
      c.xs.push_back(double(e.iteration));
      c.ys.push_back(double(e.metrics.covered_modes));
      j.xs.push_back(double(e.iteration));
      j.ys.push_back(e.metrics.jsd);
    }
    coverage.series.push_back(std::move(c));
    jsd.series.push_back(std::move(j));
  }

  const fs::path dest = out_dir ? *out_dir : fs::path(".");
  try {
    std::error_code ec;
    fs::create_directories(dest, ec);
    write_file(dest / "comparison.csv", csv);
    write_file(dest / "comparison.svg",
               svg::render_report("Run comparison (" + summaries.front().config.dataset.name + ")",
                                  table, {coverage, jsd}));
  } catch (const ArtifactError& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }

  for (const auto& r : table.rows) {
    for (std::size_t c = 0; c < r.size(); ++c) out << (c ? "  " : "") << r[c];
    out << "\n";
  }
  out << "wrote " << (dest / "comparison.csv").string() << " and comparison.svg\n";
  return kExitOk;
}

}  // namespace sf
