#pragma once

// Time-windowed decay analysis: single-exponential fits and photon-count
// integrals over the early (superradiant) and late (subradiant) windows.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "superrad/error.hpp"
#include "superrad/observables.hpp"
#include "superrad/units.hpp"

namespace superrad {

struct TimeWindow {
  double start;
  double end;  // may be +inf for "end of record"
};

/// Fit result. A non-decaying window reports tau = +inf with `decaying`
/// cleared rather than throwing.
struct ExponentialFit {
  double tau = std::numeric_limits<double>::infinity();
  double amplitude = 0.0;
  double rms_residual = 0.0;
  std::size_t n_used = 0;
  std::size_t n_excluded = 0;
  bool decaying = false;
};

inline constexpr std::size_t kMinFitSamples = 5;

/// Weighted log-linear least squares: minimizes sum v_i (ln v_i - a - b t_i)^2
/// over samples in the window with v_i > background, after subtracting the
/// constant background.
inline ExponentialFit fit_exponential(std::span<const double> times,
                                      std::span<const double> values, TimeWindow window,
                                      double background = 0.0) {
  if (times.size() != values.size()) {
    throw InputError("fit_exponential: times and values differ in length");
  }
  std::vector<double> t;
  std::vector<double> y;
  std::vector<double> w;
  ExponentialFit fit;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < window.start || times[i] > window.end) {
      continue;
    }
    const double v = values[i] - background;
    if (!(v > 0.0)) {
      ++fit.n_excluded;
      continue;
    }
    t.push_back(times[i]);
    y.push_back(std::log(v));
    w.push_back(v);
  }
  fit.n_used = t.size();
  if (fit.n_used < kMinFitSamples) {
    throw InputError("fit_exponential: only " + std::to_string(fit.n_used) +
                     " positive samples in window, need " + std::to_string(kMinFitSamples));
  }

  double sw = 0.0, st = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    sw += w[i];
    st += w[i] * t[i];
    sy += w[i] * y[i];
  }
  const double tbar = st / sw;
  const double ybar = sy / sw;
  double stt = 0.0, sty = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double dt = t[i] - tbar;
    stt += w[i] * dt * dt;
    sty += w[i] * dt * (y[i] - ybar);
  }
  if (!(stt > 0.0)) {
    throw InputError("fit_exponential: window samples share a single time");
  }
  const double slope = sty / stt;
  const double intercept = ybar - slope * tbar;

  double ss = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double r = y[i] - (intercept + slope * t[i]);
    ss += r * r;
  }
  fit.rms_residual = std::sqrt(ss / static_cast<double>(t.size()));
  fit.amplitude = std::exp(intercept);
  // A total log-decay below 1e-12 across the window is indistinguishable from flat.
  const double span = t.back() - t.front();
  fit.decaying = -slope * span > 1e-12;
  fit.tau = fit.decaying ? -1.0 / slope : std::numeric_limits<double>::infinity();
  return fit;
}

/// Linear interpolation of a sampled series; t must lie in [times.front(), times.back()].
inline double interpolate(std::span<const double> times, std::span<const double> values,
                          double t) {
  if (times.empty() || t < times.front() || t > times.back()) {
    throw InputError("interpolate: time outside the record");
  }
  const auto it = std::lower_bound(times.begin(), times.end(), t);
  const auto i = static_cast<std::size_t>(it - times.begin());
  if (times[i] == t || i == 0) {
    return values[i];
  }
  const double f = (t - times[i - 1]) / (times[i] - times[i - 1]);
  return values[i - 1] + f * (values[i] - values[i - 1]);
}

/// Trapezoidal integral over the intersection of the record with the window.
inline double integrate_window(std::span<const double> times, std::span<const double> values,
                               TimeWindow window) {
  if (times.size() != values.size() || times.empty()) {
    throw InputError("integrate_window: need matching nonempty series");
  }
  const double lo = std::max(window.start, times.front());
  const double hi = std::min(window.end, times.back());
  if (!(hi > lo)) {
    throw InputError("integrate_window: window does not overlap the record");
  }
  double sum = 0.0;
  double t_prev = lo;
  double v_prev = interpolate(times, values, lo);
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] <= lo) {
      continue;
    }
    if (times[i] >= hi) {
      break;
    }
    sum += 0.5 * (times[i] - t_prev) * (values[i] + v_prev);
    t_prev = times[i];
    v_prev = values[i];
  }
  const double v_hi = interpolate(times, values, hi);
  sum += 0.5 * (hi - t_prev) * (v_hi + v_prev);
  return sum;
}

/// Window offsets relative to t0, in 1/Gamma0.
struct DecayWindows {
  double super_fit_start = si_time_to_gamma_units(5e-9, TransitionSpec{});
  double super_fit_end = 1.0;
  double super_count_end = 1.0;
  double sub_start = 4.0;
  double sub_end = std::numeric_limits<double>::infinity();

  void validate() const {
    if (!(super_fit_start >= 0.0 && super_fit_start < super_fit_end &&
          super_fit_end <= sub_start && sub_start < sub_end && super_count_end > 0.0 &&
          super_count_end <= sub_start)) {
      throw InputError(
          "DecayWindows: need 0 <= super_fit_start < super_fit_end <= sub_start < sub_end and "
          "0 < super_count_end <= sub_start");
    }
  }

  friend bool operator==(const DecayWindows&, const DecayWindows&) = default;
};

/// Decay-analysis flags (bit set).
enum DecayFlag : unsigned {
  kSuperNotDecaying = 1u << 0,
  kSubNotDecaying = 1u << 1,
  kSuperFitFailed = 1u << 2,
  kSubFitFailed = 1u << 3,
};

struct DecayAnalysis {
  double tau_super = std::numeric_limits<double>::infinity();
  double tau_sub = std::numeric_limits<double>::infinity();
  double amplitude_super = 0.0;
  double amplitude_sub = 0.0;
  double n_super = 0.0;
  double n_sub = 0.0;
  double rms_super = 0.0;
  double rms_sub = 0.0;
  double n_e_at_t0 = 0.0;
  // Same analysis on the total emission rate instead of the axial signal.
  double tau_super_total = std::numeric_limits<double>::infinity();
  double tau_sub_total = std::numeric_limits<double>::infinity();
  double n_super_total = 0.0;
  double n_sub_total = 0.0;
  unsigned flags = 0;
};

struct AnalysisOptions {
  double background = 0.0;
};

inline DecayAnalysis analyze_decay(const EmissionTrajectory& traj, double t0,
                                   const DecayWindows& windows, const AnalysisOptions& opts = {}) {
  windows.validate();
  if (traj.times.empty() || t0 < traj.times.front() ||
      traj.times.back() < t0 + windows.sub_start + 2.0) {
    throw InputError("analyze_decay: trajectory must cover [t0, t0 + sub_start + 2]");
  }
  const std::span<const double> times(traj.times);
  const TimeWindow super_fit{t0 + windows.super_fit_start, t0 + windows.super_fit_end};
  const TimeWindow super_count{t0, t0 + windows.super_count_end};
  const TimeWindow sub{t0 + windows.sub_start, t0 + windows.sub_end};

  DecayAnalysis out;
  out.n_e_at_t0 = interpolate(times, traj.n_e, t0);

  auto fit_into = [&](std::span<const double> values, TimeWindow w, double& tau, double* amp,
                      double* rms, unsigned not_decaying, unsigned failed) {
    try {
      const ExponentialFit f = fit_exponential(times, values, w, opts.background);
      tau = f.tau;
      if (amp) *amp = f.amplitude;
      if (rms) *rms = f.rms_residual;
      if (!f.decaying) out.flags |= not_decaying;
    } catch (const InputError&) {
      out.flags |= failed;
    }
  };

  fit_into(traj.axial_intensity, super_fit, out.tau_super, &out.amplitude_super, &out.rms_super,
           kSuperNotDecaying, kSuperFitFailed);
  fit_into(traj.axial_intensity, sub, out.tau_sub, &out.amplitude_sub, &out.rms_sub,
           kSubNotDecaying, kSubFitFailed);
  out.n_super = std::max(0.0, integrate_window(times, traj.axial_intensity, super_count));
  out.n_sub = std::max(0.0, integrate_window(times, traj.axial_intensity, sub));

  // Diagnostics only: no flags.
  fit_into(traj.total_rate, super_fit, out.tau_super_total, nullptr, nullptr, 0, 0);
  fit_into(traj.total_rate, sub, out.tau_sub_total, nullptr, nullptr, 0, 0);
  out.n_super_total = std::max(0.0, integrate_window(times, traj.total_rate, super_count));
  out.n_sub_total = std::max(0.0, integrate_window(times, traj.total_rate, sub));
  return out;
}

}  // namespace superrad
