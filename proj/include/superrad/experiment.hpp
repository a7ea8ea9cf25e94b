#pragma once

// Run an ExperimentConfig and write its outputs.
//
// Files (all under the output directory, written by a single writer):
//   trajectory.csv   time,n_e,axial_intensity,total_rate,pop_<label>...
//   analysis.csv     one row per pulse duration (columns: kAnalysisColumns)
//   manifest.json    {"config": <resolved config>, "run": {...}}
//   trajectories/duration_NNN.csv          sweep only, mean trajectory per row
//   realizations/realization_NNNNNN.csv    simulate with keep_realizations
// Numbers are written with std::to_chars (shortest round-trip form).

#include <array>
#include <charconv>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <nlohmann/json.hpp>

#include "superrad/config.hpp"
#include "superrad/error.hpp"
#include "superrad/sweep.hpp"

#ifndef SUPERRAD_VERSION
#define SUPERRAD_VERSION "unknown"
#endif

namespace superrad {

enum class Verb { Simulate, Sweep, Analyze };

inline const char* verb_name(Verb v) {
  switch (v) {
    case Verb::Simulate:
      return "simulate";
    case Verb::Sweep:
      return "sweep";
    case Verb::Analyze:
      return "analyze";
  }
  return "?";
}

struct RunRequest {
  Verb verb = Verb::Simulate;
  std::filesystem::path out_dir;          // overrides outputs.dir when nonempty
  std::size_t jobs = 0;                   // 0: all hardware threads
  std::filesystem::path input;            // analyze: stored trajectory.csv
};

inline constexpr std::array<std::string_view, 20> kAnalysisColumns = {
    "duration",         "status",          "flags",           "n_e_at_t0",
    "tau_super",        "tau_sub",         "amplitude_super", "amplitude_sub",
    "n_super",          "n_sub",           "rms_super",       "rms_sub",
    "tau_super_total",  "tau_sub_total",   "n_super_total",   "n_sub_total",
    "max_trace_drift",  "max_hermiticity_residue", "min_final_eigenvalue", "error"};

inline std::string format_double(double x) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), res.ptr);
}

inline double parse_double(std::string_view s, const std::string& where) {
  double x = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (!s.empty() && s.front() == '+') ++first;
  const auto res = std::from_chars(first, last, x);
  if (res.ec != std::errc{} || res.ptr != last) {
    throw IoError(where + ": cannot parse number \"" + std::string(s) + "\"");
  }
  return x;
}

inline std::string csv_quote(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) {
    return std::string(s);
  }
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += (c == '\n') ? ' ' : c;
  }
  return out + "\"";
}

inline void write_trajectory_csv(std::ostream& os, const EmissionTrajectory& tr) {
  os << "time,n_e,axial_intensity,total_rate";
  for (const TaggedColumn& c : tr.tagged_populations) {
    os << ",pop_" << c.label;
  }
  os << '\n';
  for (std::size_t i = 0; i < tr.size(); ++i) {
    os << format_double(tr.times[i]) << ',' << format_double(tr.n_e[i]) << ','
       << format_double(tr.axial_intensity[i]) << ',' << format_double(tr.total_rate[i]);
    for (const TaggedColumn& c : tr.tagged_populations) {
      os << ',' << format_double(c.values[i]);
    }
    os << '\n';
  }
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline EmissionTrajectory read_trajectory_csv(std::istream& is, const std::string& name) {
  std::string line;
  if (!std::getline(is, line)) {
    throw IoError(name + ": empty file");
  }
  const auto header = split_commas(line);
  static constexpr std::array<std::string_view, 4> kFixed = {"time", "n_e", "axial_intensity",
                                                             "total_rate"};
  if (header.size() < kFixed.size() ||
      !std::equal(kFixed.begin(), kFixed.end(), header.begin())) {
    throw IoError(name + ": header must start with time,n_e,axial_intensity,total_rate");
  }
  EmissionTrajectory tr;
  for (std::size_t c = kFixed.size(); c < header.size(); ++c) {
    if (header[c].substr(0, 4) != "pop_") {
      throw IoError(name + ": unexpected column \"" + std::string(header[c]) + "\"");
    }
    tr.tagged_populations.push_back({std::string(header[c].substr(4)), {}});
  }
  std::size_t row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty()) continue;
    const auto cells = split_commas(line);
    const std::string where = name + ":" + std::to_string(row);
    if (cells.size() != header.size()) {
      throw IoError(where + ": expected " + std::to_string(header.size()) + " columns");
    }
    tr.times.push_back(parse_double(cells[0], where));
    tr.n_e.push_back(parse_double(cells[1], where));
    tr.axial_intensity.push_back(parse_double(cells[2], where));
    tr.total_rate.push_back(parse_double(cells[3], where));
    for (std::size_t c = 0; c < tr.tagged_populations.size(); ++c) {
      tr.tagged_populations[c].values.push_back(parse_double(cells[4 + c], where));
    }
  }
  if (tr.times.empty()) {
    throw IoError(name + ": no data rows");
  }
  for (std::size_t i = 1; i < tr.times.size(); ++i) {
    if (!(tr.times[i] > tr.times[i - 1])) {
      throw IoError(name + ": times must be strictly increasing");
    }
  }
  return tr;
}

struct AnalysisRow {
  double duration = 0.0;
  bool ok = false;
  DecayAnalysis analysis;
  std::optional<EvolutionStats> stats;
  std::optional<double> min_final_eigenvalue;
  std::string error;
};

inline void write_analysis_csv(std::ostream& os, const std::vector<AnalysisRow>& rows) {
  for (std::size_t c = 0; c < kAnalysisColumns.size(); ++c) {
    os << (c ? "," : "") << kAnalysisColumns[c];
  }
  os << '\n';
  const std::string nan = "nan";
  for (const AnalysisRow& r : rows) {
    const DecayAnalysis& a = r.analysis;
    auto num = [&](double x) { return r.ok ? format_double(x) : nan; };
    os << format_double(r.duration) << ',' << (r.ok ? "ok" : "failed") << ','
       << (r.ok ? std::to_string(a.flags) : std::string("0")) << ',' << num(a.n_e_at_t0) << ','
       << num(a.tau_super) << ',' << num(a.tau_sub) << ',' << num(a.amplitude_super) << ','
       << num(a.amplitude_sub) << ',' << num(a.n_super) << ',' << num(a.n_sub) << ','
       << num(a.rms_super) << ',' << num(a.rms_sub) << ',' << num(a.tau_super_total) << ','
       << num(a.tau_sub_total) << ',' << num(a.n_super_total) << ',' << num(a.n_sub_total) << ','
       << (r.stats ? format_double(r.stats->max_trace_drift) : nan) << ','
       << (r.stats ? format_double(r.stats->max_hermiticity_residue) : nan) << ','
       << (r.min_final_eigenvalue ? format_double(*r.min_final_eigenvalue) : nan) << ','
       << csv_quote(r.error) << '\n';
  }
}

namespace experiment_detail {

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) {
    throw IoError("cannot open " + path.string() + " for writing");
  }
  os << content;
  os.flush();
  if (!os) {
    throw IoError("write to " + path.string() + " failed");
  }
}

inline void make_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw IoError("cannot create directory " + dir.string() +
                  (ec ? ": " + ec.message() : std::string()));
  }
}

inline std::string trajectory_text(const EmissionTrajectory& tr) {
  std::ostringstream os;
  write_trajectory_csv(os, tr);
  return os.str();
}

inline std::string zero_pad(std::size_t i, int width) {
  std::string s = std::to_string(i);
  return std::string(static_cast<std::size_t>(std::max(0, width - static_cast<int>(s.size()))), '0') + s;
}

inline AnalysisRow analyze_row(const EmissionTrajectory& tr, double t0,
                               const ExperimentConfig& cfg) {
  AnalysisRow row;
  row.duration = t0;
  try {
    row.analysis = analyze_decay(tr, t0, cfg.windows, cfg.analysis);
    row.ok = true;
  } catch (const InputError& e) {
    row.error = e.what();
  }
  return row;
}

}  // namespace experiment_detail

struct RunSummary {
  std::filesystem::path out_dir;
  std::vector<std::filesystem::path> data_files;  // everything except the manifest
  std::size_t failed_rows = 0;
};

/// Runs one verb and writes its outputs. Throws ConfigError, InputError,
/// NumericsError or IoError.
inline RunSummary run_experiment(const ExperimentConfig& cfg, const RunRequest& req) {
  using namespace experiment_detail;
  namespace fs = std::filesystem;
  const auto start = std::chrono::steady_clock::now();
  RunSummary summary;
  summary.out_dir = req.out_dir.empty() ? fs::path(cfg.outputs.dir) : req.out_dir;
  nlohmann::ordered_json run;
  run["verb"] = verb_name(req.verb);
  run["version"] = SUPERRAD_VERSION;
  run["seed"] = cfg.scenario.ensemble.seed;
  run["jobs"] = resolve_jobs(req.jobs);

  if ((req.verb == Verb::Simulate || req.verb == Verb::Analyze) && !cfg.has_duration) {
    throw ConfigError("drive.duration: required for " + std::string(verb_name(req.verb)));
  }
  if (req.verb == Verb::Sweep && cfg.sweep_durations.empty()) {
    throw ConfigError("sweep: a duration list is required for sweep");
  }

  // Compute everything before touching the filesystem.
  std::vector<std::pair<fs::path, std::string>> files;
  std::vector<AnalysisRow> rows;
  if (req.verb == Verb::Simulate) {
    const EnsembleResult res =
        simulate(cfg.scenario, req.jobs, cfg.outputs.keep_realizations);
    files.emplace_back("trajectory.csv", trajectory_text(res.mean));
    AnalysisRow row = analyze_row(res.mean, cfg.scenario.drive.t_off, cfg);
    row.stats = res.stats;
    row.min_final_eigenvalue = res.min_final_eigenvalue;
    rows.push_back(row);
    if (cfg.outputs.keep_realizations) {
      std::size_t next_failure = 0;
      std::size_t k = 0;
      for (std::size_t idx = 0; idx < cfg.scenario.ensemble.n_realizations; ++idx) {
        if (next_failure < res.failures.size() && res.failures[next_failure].index == idx) {
          ++next_failure;
          continue;
        }
        files.emplace_back(fs::path("realizations") / ("realization_" + zero_pad(idx, 6) + ".csv"),
                           trajectory_text(res.realizations[k++]));
      }
    }
    run["n_succeeded"] = res.n_succeeded;
    nlohmann::ordered_json failures = nlohmann::ordered_json::array();
    for (const RealizationFailure& f : res.failures) {
      failures.push_back({{"index", f.index}, {"error", f.what}});
    }
    run["failures"] = failures;
  } else if (req.verb == Verb::Sweep) {
    const auto sweep = pulse_sweep(cfg.scenario, cfg.sweep_durations, cfg.windows, cfg.analysis,
                                   req.jobs, true);
    for (std::size_t i = 0; i < sweep.size(); ++i) {
      const SweepRow& s = sweep[i];
      AnalysisRow row;
      row.duration = s.duration;
      row.ok = s.ok;
      row.analysis = s.analysis;
      row.error = s.error;
      if (s.ok) {
        row.stats = s.stats;
        row.min_final_eigenvalue = s.min_final_eigenvalue;
        files.emplace_back(fs::path("trajectories") / ("duration_" + zero_pad(i, 3) + ".csv"),
                           trajectory_text(s.trajectory));
      }
      rows.push_back(row);
    }
  } else {
    if (req.input.empty()) {
      throw ConfigError("analyze: an input trajectory is required");
    }
    std::ifstream is(req.input, std::ios::binary);
    if (!is) {
      throw IoError("cannot open " + req.input.string());
    }
    const EmissionTrajectory tr = read_trajectory_csv(is, req.input.string());
    rows.push_back(analyze_row(tr, cfg.scenario.drive.t_off, cfg));
    run["input"] = req.input.string();
  }
  {
    std::ostringstream os;
    write_analysis_csv(os, rows);
    files.emplace_back("analysis.csv", os.str());
  }
  for (const AnalysisRow& r : rows) {
    summary.failed_rows += r.ok ? 0 : 1;
  }

  make_dir(summary.out_dir);
  for (const auto& [rel, text] : files) {
    const fs::path path = summary.out_dir / rel;
    if (rel.has_parent_path()) {
      make_dir(path.parent_path());
    }
    write_file(path, text);
    summary.data_files.push_back(path);
  }
  run["failed_rows"] = summary.failed_rows;
  run["wall_time_s"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  nlohmann::ordered_json manifest;
  manifest["config"] = config_to_json(cfg);
  manifest["run"] = run;
  write_file(summary.out_dir / "manifest.json", manifest.dump(2) + "\n");
  return summary;
}

}  // namespace superrad
