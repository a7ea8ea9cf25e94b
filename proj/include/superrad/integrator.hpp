#pragma once

// Explicit Runge-Kutta integrators for dense Eigen states.
//
// DormandPrince54 is the embedded 5(4) pair with the 4th-order continuous
// extension, so samples are produced by interpolation and never force a
// step boundary. ClassicalRk4 is a fixed-step cross-check that lands on
// every requested sample time.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <sstream>

#include <Eigen/Dense>

#include "superrad/error.hpp"

namespace superrad {

struct IntegratorOptions {
  double rtol = 1e-8;
  double atol = 1e-10;
  double max_step = std::numeric_limits<double>::infinity();
  std::size_t max_steps = 50'000'000;
};

struct IntegratorStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t rhs_evals = 0;

  IntegratorStats& operator+=(const IntegratorStats& o) {
    accepted += o.accepted;
    rejected += o.rejected;
    rhs_evals += o.rhs_evals;
    return *this;
  }
};

namespace detail {

inline void check_samples(std::span<const double> samples, double t0, double t1) {
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i] < t0 || samples[i] > t1 || (i > 0 && !(samples[i] > samples[i - 1]))) {
      throw InputError("integrator: sample times must be strictly increasing inside [t0, t1]");
    }
  }
}

}  // namespace detail

template <class State>
class DormandPrince54 {
public:
  explicit DormandPrince54(IntegratorOptions opts = {}) : opts_(opts) {}

  /// Integrates y from t0 to t1 in place. `rhs(t, y, dydt)` must fill dydt.
  /// `observe(t, y)` is called once per entry of `samples` (strictly
  /// increasing, inside [t0, t1]).
  template <class Rhs, class Observer>
  IntegratorStats integrate(Rhs&& rhs, State& y, double t0, double t1,
                            std::span<const double> samples, Observer&& observe) const {
    detail::check_samples(samples, t0, t1);
    IntegratorStats stats;
    std::size_t next = 0;
    while (next < samples.size() && samples[next] == t0) {
      observe(t0, static_cast<const State&>(y));
      ++next;
    }
    if (t1 == t0) {
      return stats;
    }

    State k1 = y, k2 = y, k3 = y, k4 = y, k5 = y, k6 = y, k7 = y;
    State ytmp = y, ynew = y, err = y, interp = y;
    rhs(t0, y, k1);
    ++stats.rhs_evals;

    const double span = t1 - t0;
    double h = std::min({opts_.max_step, span, initial_step(y, k1)});
    double t = t0;
    double fac_old = 1e-4;

    while (t < t1) {
      if (stats.accepted + stats.rejected >= opts_.max_steps) {
        throw NumericsError("DormandPrince54: maximum number of steps exceeded");
      }
      bool last = false;
      if (t + h >= t1 || t + 1.01 * h >= t1) {
        h = t1 - t;
        last = true;
      }
      if (h < 1e-13 * std::max(1.0, std::abs(t))) {
        std::ostringstream msg;
        msg << "DormandPrince54: step size underflow at t=" << t << " (h=" << h << ")";
        throw NumericsError(msg.str());
      }

      ytmp = y + h * (a21 * k1);
      rhs(t + c2 * h, ytmp, k2);
      ytmp = y + h * (a31 * k1 + a32 * k2);
      rhs(t + c3 * h, ytmp, k3);
      ytmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
      rhs(t + c4 * h, ytmp, k4);
      ytmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
      rhs(t + c5 * h, ytmp, k5);
      ytmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
      const double t_new = last ? t1 : t + h;
      rhs(t_new, ytmp, k6);
      ynew = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
      rhs(t_new, ynew, k7);
      stats.rhs_evals += 6;

      err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
      const double enorm = error_norm(err, y, ynew);

      if (enorm <= 1.0) {
        // Lund-stabilized PI controller.
        const double fac11 = std::pow(enorm, 0.2 - kBeta * 0.75);
        double fac = fac11 / std::pow(fac_old, kBeta);
        fac = std::clamp(fac / kSafe, 1.0 / kFacMax, 1.0 / kFacMin);
        fac_old = std::max(enorm, 1e-4);

        while (next < samples.size() && samples[next] <= t_new) {
          if (samples[next] == t_new) {
            observe(t_new, static_cast<const State&>(ynew));
          } else {
            const double theta = (samples[next] - t) / h;
            dense_output(theta, h, y, ynew, k1, k3, k4, k5, k6, k7, interp);
            observe(samples[next], static_cast<const State&>(interp));
          }
          ++next;
        }

        y.swap(ynew);
        k1.swap(k7);  // FSAL
        t = t_new;
        ++stats.accepted;
        h = std::min(h / fac, opts_.max_step);
      } else {
        const double fac11 = std::pow(enorm, 0.2 - kBeta * 0.75);
        h /= std::min(1.0 / kFacMin, fac11 / kSafe);
        ++stats.rejected;
      }
    }
    return stats;
  }

  const IntegratorOptions& options() const { return opts_; }

private:
  double error_norm(const State& err, const State& y0, const State& y1) const {
    const auto scale =
        (opts_.atol + opts_.rtol * y0.cwiseAbs().array().max(y1.cwiseAbs().array())).eval();
    const double n = static_cast<double>(err.size());
    return std::sqrt((err.cwiseAbs().array() / scale).square().sum() / n);
  }

  double initial_step(const State& y, const State& f0) const {
    const auto scale = (opts_.atol + opts_.rtol * y.cwiseAbs().array()).eval();
    const double n = static_cast<double>(y.size());
    const double d0 = std::sqrt((y.cwiseAbs().array() / scale).square().sum() / n);
    const double d1 = std::sqrt((f0.cwiseAbs().array() / scale).square().sum() / n);
    if (d0 < 1e-5 || d1 < 1e-5) {
      return 1e-6;
    }
    return 0.01 * d0 / d1;
  }

  static void dense_output(double theta, double h, const State& y0, const State& y1,
                           const State& k1, const State& k3, const State& k4, const State& k5,
                           const State& k6, const State& k7, State& out) {
    const double theta1 = 1.0 - theta;
    // Continuous extension coefficients (Hairer & Wanner, DOPRI5 contd5).
    out = y0 + theta * ((y1 - y0) +
                        theta1 * ((h * k1 - (y1 - y0)) +
                                  theta * (((y1 - y0) - h * k7 - (h * k1 - (y1 - y0))) +
                                           theta1 * h *
                                               (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 +
                                                d6 * k6 + d7 * k7))));
  }

  static constexpr double kSafe = 0.9;
  static constexpr double kFacMin = 0.2;
  static constexpr double kFacMax = 10.0;
  static constexpr double kBeta = 0.04;

  static constexpr double c2 = 0.2, c3 = 0.3, c4 = 0.8, c5 = 8.0 / 9.0;
  static constexpr double a21 = 0.2;
  static constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
  static constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
  static constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0,
                          a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
  static constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                          a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
  static constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0,
                          a75 = -2187.0 / 6784.0, a76 = 11.0 / 84.0;
  static constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                          e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
  static constexpr double d1 = -12715105075.0 / 11282082432.0,
                          d3 = 87487479700.0 / 32700410799.0,
                          d4 = -10690763975.0 / 1880347072.0,
                          d5 = 701980252875.0 / 199316789632.0,
                          d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

  IntegratorOptions opts_;
};

/// Fixed-step classical RK4 with step <= max_step, adjusted so every sample
/// time is a step boundary.
template <class State>
class ClassicalRk4 {
public:
  explicit ClassicalRk4(IntegratorOptions opts = {}) : opts_(opts) {}

  template <class Rhs, class Observer>
  IntegratorStats integrate(Rhs&& rhs, State& y, double t0, double t1,
                            std::span<const double> samples, Observer&& observe) const {
    detail::check_samples(samples, t0, t1);
    if (!std::isfinite(opts_.max_step) || !(opts_.max_step > 0.0)) {
      throw InputError("ClassicalRk4: a finite positive max_step is required");
    }
    IntegratorStats stats;
    State k1 = y, k2 = y, k3 = y, k4 = y, tmp = y;
    auto advance = [&](double from, double to) {
      if (to <= from) {
        return;
      }
      const auto n = static_cast<std::size_t>(std::ceil((to - from) / opts_.max_step - 1e-12));
      const double h = (to - from) / static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) {
        const double t = from + static_cast<double>(i) * h;
        rhs(t, y, k1);
        tmp = y + (0.5 * h) * k1;
        rhs(t + 0.5 * h, tmp, k2);
        tmp = y + (0.5 * h) * k2;
        rhs(t + 0.5 * h, tmp, k3);
        tmp = y + h * k3;
        rhs(t + h, tmp, k4);
        y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        stats.rhs_evals += 4;
        ++stats.accepted;
      }
    };
    double t = t0;
    for (const double ts : samples) {
      advance(t, ts);
      t = ts;
      observe(t, static_cast<const State&>(y));
    }
    advance(t, t1);
    return stats;
  }

private:
  IntegratorOptions opts_;
};

}  // namespace superrad
