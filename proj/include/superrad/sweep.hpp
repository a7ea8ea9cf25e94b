#pragma once

// Pulse-duration sweeps: one simulate-then-analyze pass per square-pulse
// duration, plus the reshaping into the (n_e(t0), tau_super, n_super) scatter.

#include <cstddef>
#include <exception>
#include <string>
#include <vector>

#include "superrad/analysis.hpp"
#include "superrad/ensemble.hpp"
#include "superrad/parallel.hpp"
#include "superrad/propagator.hpp"

namespace superrad {

struct SamplingSettings {
  double sample_dt = 0.02;     // 1/Gamma0
  double record_after = 8.0;   // record length after t0, 1/Gamma0
  double rtol = 1e-8;
  double atol = 1e-10;
  double max_step = 0.0;       // <= 0: automatic
  IntegrationMethod method = IntegrationMethod::DormandPrince54;

  friend bool operator==(const SamplingSettings&, const SamplingSettings&) = default;
};

/// Everything needed to simulate one pulse duration.
struct Scenario {
  EnsembleSpec ensemble;
  DrivePulse drive;  // drive.t_off is the pulse duration
  SamplingSettings sampling;
  ObservablesConfig observables;
  std::size_t n_max = kDefaultMaxAtoms;
};

inline EvolutionSchedule make_schedule(const SamplingSettings& s, double t_off) {
  EvolutionSchedule schedule;
  schedule.t_grid = make_time_grid(t_off, s.record_after, s.sample_dt);
  schedule.rtol = s.rtol;
  schedule.atol = s.atol;
  schedule.max_step = s.max_step;
  schedule.method = s.method;
  return schedule;
}

inline EnsembleResult simulate(const Scenario& scenario, std::size_t jobs = 1,
                               bool keep_realizations = false) {
  RunOptions opts;
  opts.jobs = jobs;
  opts.keep_realizations = keep_realizations;
  opts.n_max = scenario.n_max;
  return run_ensemble(scenario.ensemble, scenario.drive,
                      make_schedule(scenario.sampling, scenario.drive.t_off),
                      scenario.observables, opts);
}

struct SweepRow {
  double duration = 0.0;
  DecayAnalysis analysis;
  bool ok = false;
  std::string error;
  EvolutionStats stats;
  double min_final_eigenvalue = 0.0;
  EmissionTrajectory trajectory;  // ensemble mean, only with keep_trajectories
};

/// Rows run in parallel (each with a single-threaded ensemble) and are
/// assembled in duration order. A failed row is flagged and the sweep goes on.
inline std::vector<SweepRow> pulse_sweep(const Scenario& base, const std::vector<double>& durations,
                                         const DecayWindows& windows,
                                         const AnalysisOptions& analysis_opts = {},
                                         std::size_t jobs = 1, bool keep_trajectories = false) {
  if (durations.empty()) {
    throw InputError("pulse_sweep: no durations");
  }
  for (std::size_t i = 0; i < durations.size(); ++i) {
    if (!(durations[i] > 0.0) || (i > 0 && !(durations[i] > durations[i - 1]))) {
      throw InputError("pulse_sweep: durations must be positive and increasing");
    }
  }
  windows.validate();
  std::vector<SweepRow> rows(durations.size());
  parallel_for(durations.size(), jobs, [&](std::size_t i) {
    SweepRow& row = rows[i];
    row.duration = durations[i];
    try {
      Scenario sc = base;
      sc.drive.t_off = durations[i];
      const EnsembleResult res = simulate(sc, 1, false);
      row.analysis = analyze_decay(res.mean, durations[i], windows, analysis_opts);
      row.stats = res.stats;
      row.min_final_eigenvalue = res.min_final_eigenvalue;
      if (keep_trajectories) {
        row.trajectory = res.mean;
      }
      row.ok = true;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
  });
  return rows;
}

struct ScatterRow {
  double n_e_at_t0;
  double tau_super;
  double n_super;
  double t0;
};

inline std::vector<ScatterRow> correlate_vs_ne(const std::vector<SweepRow>& rows) {
  if (rows.empty()) {
    throw InputError("correlate_vs_ne: empty sweep table");
  }
  std::vector<ScatterRow> out;
  out.reserve(rows.size());
  for (const SweepRow& r : rows) {
    if (r.ok) {
      out.push_back({r.analysis.n_e_at_t0, r.analysis.tau_super, r.analysis.n_super, r.duration});
    }
  }
  return out;
}

}  // namespace superrad
