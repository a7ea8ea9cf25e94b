#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "superrad/analysis.hpp"
#include "superrad/observables.hpp"
#include "superrad/propagator.hpp"
#include "superrad/units.hpp"

using namespace superrad;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = a + (b - a) * i / (n - 1);
  return v;
}

std::vector<double> exponential(const std::vector<double>& t, double amp, double tau) {
  std::vector<double> v;
  for (double x : t) v.push_back(amp * std::exp(-x / tau));
  return v;
}

EmissionTrajectory simulate_decay(const AtomConfiguration& cfg, const Eigen::VectorXcd& psi0,
                                  double t_end) {
  const CouplingMatrices c = build_couplings(cfg);
  EvolutionSchedule sched;
  sched.t_grid = make_time_grid(0.0, t_end, 0.01);
  TrajectoryRecorder rec(cfg, c, {});
  evolve_observe(pure_state(psi0), cfg, c, DrivePulse{}, sched, std::ref(rec));
  return rec.take();
}

}  // namespace

TEST(FitExponential, RecoversExactDecay) {
  const auto t = linspace(0.0, 5.0, 101);
  const auto v = exponential(t, 3.0, 2.0);
  const ExponentialFit f = fit_exponential(t, v, {0.0, kInf});
  EXPECT_NEAR(f.tau, 2.0, 1e-10);
  EXPECT_NEAR(f.amplitude, 3.0, 1e-10);
  EXPECT_TRUE(f.decaying);
  EXPECT_EQ(f.n_used, 101u);
  EXPECT_LT(f.rms_residual, 1e-12);
}

TEST(FitExponential, ConstantIsFlaggedNotDecaying) {
  const auto t = linspace(0.0, 5.0, 50);
  const std::vector<double> v(t.size(), 0.7);
  const ExponentialFit f = fit_exponential(t, v, {0.0, 5.0});
  EXPECT_FALSE(f.decaying);
  EXPECT_TRUE(std::isinf(f.tau));
}

TEST(FitExponential, GrowingIsFlaggedNotDecaying) {
  const auto t = linspace(0.0, 1.0, 20);
  const auto v = exponential(t, 1.0, -3.0);
  const ExponentialFit f = fit_exponential(t, v, {0.0, 1.0});
  EXPECT_FALSE(f.decaying);
  EXPECT_TRUE(std::isinf(f.tau));
}

TEST(FitExponential, TooFewPositiveSamplesThrows) {
  const auto t = linspace(0.0, 1.0, 10);
  std::vector<double> v(10, -1.0);
  v[0] = v[1] = v[2] = 1.0;
  EXPECT_THROW(fit_exponential(t, v, {0.0, 1.0}), InputError);
  const auto w = exponential(t, 1.0, 1.0);
  EXPECT_THROW(fit_exponential(t, w, {0.05, 0.3}), InputError);
  EXPECT_THROW(fit_exponential(t, std::vector<double>(3, 1.0), {0.0, 1.0}), InputError);
}

TEST(FitExponential, NonPositiveSamplesAreExcludedAndCounted) {
  const auto t = linspace(0.0, 4.0, 41);
  auto v = exponential(t, 1.0, 1.5);
  v[7] = 0.0;
  v[9] = -0.2;
  const ExponentialFit f = fit_exponential(t, v, {0.0, 4.0});
  EXPECT_EQ(f.n_excluded, 2u);
  EXPECT_EQ(f.n_used, 39u);
  EXPECT_NEAR(f.tau, 1.5, 1e-10);
}

TEST(FitExponential, BackgroundIsSubtracted) {
  const auto t = linspace(0.0, 6.0, 61);
  auto v = exponential(t, 2.0, 0.8);
  for (double& x : v) x += 0.25;
  EXPECT_NEAR(fit_exponential(t, v, {0.0, kInf}, 0.25).tau, 0.8, 1e-10);
}

TEST(FitExponential, NoisyDecayWithinOnePercent) {
  const auto t = linspace(0.0, 3.0, 151);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> nd(0.0, 1e-3);
    auto v = exponential(t, 5.0, 1.2);
    for (double& x : v) x *= 1.0 + nd(gen);
    EXPECT_NEAR(fit_exponential(t, v, {0.0, kInf}).tau, 1.2, 0.012) << seed;
  }
}

TEST(FitExponential, ScaleAndShiftEquivariance) {
  std::mt19937_64 gen(99);
  std::normal_distribution<double> nd(0.0, 1e-3);
  const auto t = linspace(0.0, 3.0, 61);
  auto v = exponential(t, 1.0, 0.7);
  for (double& x : v) x *= 1.0 + nd(gen);
  const ExponentialFit base = fit_exponential(t, v, {0.0, 3.0});

  auto scaled = v;
  for (double& x : scaled) x *= 37.5;
  const ExponentialFit fs = fit_exponential(t, scaled, {0.0, 3.0});
  EXPECT_NEAR(fs.tau, base.tau, 1e-12 * base.tau);
  EXPECT_NEAR(fs.amplitude, 37.5 * base.amplitude, 1e-12 * fs.amplitude);

  auto shifted = t;
  for (double& x : shifted) x += 4.25;
  const ExponentialFit ft = fit_exponential(shifted, v, {4.25, 7.25});
  EXPECT_NEAR(ft.tau, base.tau, 1e-12 * base.tau);
  EXPECT_NEAR(ft.amplitude, base.amplitude * std::exp(4.25 / base.tau), 1e-10 * ft.amplitude);
}

TEST(IntegrateWindow, Examples) {
  const auto t = linspace(0.0, 3.0, 31);
  const std::vector<double> ones(t.size(), 1.0);
  EXPECT_NEAR(integrate_window(t, ones, {0.0, 2.0}), 2.0, 1e-14);
  EXPECT_NEAR(integrate_window(t, ones, {0.55, 1.05}), 0.5, 1e-14);

  const auto te = linspace(0.0, 10.0, 1001);
  const auto e = exponential(te, 1.0, 1.0);
  EXPECT_NEAR(integrate_window(te, e, {0.0, 10.0}), 1.0, 5e-5);
  EXPECT_NEAR(integrate_window(te, e, {0.0, kInf}), 1.0 - std::exp(-10.0), 1e-5);
}

TEST(IntegrateWindow, EmptyOverlapThrows) {
  const auto t = linspace(0.0, 1.0, 11);
  const std::vector<double> v(t.size(), 1.0);
  EXPECT_THROW(integrate_window(t, v, {2.0, 3.0}), InputError);
}

TEST(Interpolate, LinearBetweenSamples) {
  const std::vector<double> t{0.0, 1.0, 3.0};
  const std::vector<double> v{0.0, 2.0, 6.0};
  EXPECT_DOUBLE_EQ(interpolate(t, v, 0.5), 1.0);
  EXPECT_DOUBLE_EQ(interpolate(t, v, 2.0), 4.0);
  EXPECT_DOUBLE_EQ(interpolate(t, v, 3.0), 6.0);
}

TEST(DecayWindows, Validation) {
  DecayWindows w;
  EXPECT_NO_THROW(w.validate());
  EXPECT_NEAR(w.super_fit_start, 5e-9 * 2 * std::numbers::pi * 6e6, 1e-12);
  w.super_fit_end = 5.0;
  EXPECT_THROW(w.validate(), InputError);
  w = DecayWindows{};
  w.sub_end = 3.0;
  EXPECT_THROW(w.validate(), InputError);
}

TEST(AnalyzeDecay, SingleAtomHasUnitLifetime) {
  const AtomConfiguration single({Vec3::Zero()}, linear_dipole(Vec3::UnitZ()));
  Eigen::VectorXcd e = Eigen::VectorXcd::Zero(2);
  e(1) = 1.0;
  const EmissionTrajectory tr = simulate_decay(single, e, 8.0);
  const DecayAnalysis a = analyze_decay(tr, 0.0, DecayWindows{});
  EXPECT_NEAR(a.tau_super, 1.0, 1e-3);
  EXPECT_NEAR(a.tau_sub, 1.0, 1e-3);
  EXPECT_NEAR(a.n_e_at_t0, 1.0, 1e-12);
  EXPECT_NEAR(a.n_super, 1.0 - std::exp(-1.0), 1e-4);
  EXPECT_EQ(a.flags, 0u);
}

TEST(AnalyzeDecay, PureExponentialRecordGivesTrueTau) {
  EmissionTrajectory tr;
  tr.times = linspace(0.0, 10.0, 501);
  tr.axial_intensity = exponential(tr.times, 2.0, 0.9);
  tr.total_rate = tr.axial_intensity;
  tr.n_e = exponential(tr.times, 0.5, 0.9);
  const DecayAnalysis a = analyze_decay(tr, 1.0, DecayWindows{});
  EXPECT_NEAR(a.tau_super, 0.9, 1e-6);
  EXPECT_NEAR(a.tau_sub, 0.9, 1e-6);
  EXPECT_NEAR(a.tau_super_total, 0.9, 1e-6);
  EXPECT_NEAR(a.n_e_at_t0, 0.5 * std::exp(-1.0 / 0.9), 1e-4);
}

TEST(AnalyzeDecay, ShortRecordThrows) {
  EmissionTrajectory tr;
  tr.times = linspace(0.0, 5.0, 51);
  tr.axial_intensity = tr.total_rate = tr.n_e = exponential(tr.times, 1.0, 1.0);
  EXPECT_THROW(analyze_decay(tr, 0.0, DecayWindows{}), InputError);
}

TEST(AnalyzeDecay, DickePairSeparatesFastAndSlowDecay) {
  const AtomConfiguration pair({Vec3::Zero(), Vec3(0, 0, 0.05)}, linear_dipole(Vec3::UnitY()));
  const CouplingMatrices c = build_couplings(pair);
  DrivePulse drive;
  drive.rabi = saturation_to_rabi(75.0);
  drive.t_off = 0.5 * std::numbers::pi / drive.rabi;
  drive.k_hat = Vec3::UnitZ();
  EvolutionSchedule sched;
  sched.t_grid = make_time_grid(drive.t_off, 30.0, 0.02);
  ObservablesConfig obs;
  obs.k_ax_hat = Vec3::UnitZ();
  TrajectoryRecorder rec(pair, c, obs);
  evolve_observe(initial_ground_state(2), pair, c, drive, sched, std::ref(rec));
  const DecayAnalysis a = analyze_decay(rec.take(), drive.t_off, DecayWindows{});
  EXPECT_LT(a.tau_super, 1.0);
  EXPECT_GT(a.tau_sub, 1.0);
  EXPECT_EQ(a.flags, 0u);
}
