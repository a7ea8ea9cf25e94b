#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "superrad/integrator.hpp"

using namespace superrad;
using State = Eigen::MatrixXcd;

namespace {

// y' = A y for a rotation-with-damping generator; exact solution known.
struct Oscillator {
  double omega = 3.0;
  double damping = 0.4;
  void operator()(double, const State& y, State& dydt) const {
    dydt.resize(y.rows(), y.cols());
    dydt(0, 0) = -damping * y(0, 0) + omega * y(1, 0);
    dydt(1, 0) = -omega * y(0, 0) - damping * y(1, 0);
  }
  double exact_first(double t) const { return std::exp(-damping * t) * std::cos(omega * t); }
};

}  // namespace

TEST(DormandPrince54, DenseOutputTracksExactSolution) {
  IntegratorOptions opts;
  opts.rtol = 1e-10;
  opts.atol = 1e-12;
  opts.max_step = 0.5;
  const DormandPrince54<State> dp(opts);
  State y(2, 1);
  y << 1.0, 0.0;
  std::vector<double> samples;
  for (int i = 0; i <= 200; ++i) samples.push_back(0.05 * i);
  double worst = 0.0;
  std::size_t seen = 0;
  const Oscillator osc;
  const IntegratorStats stats = dp.integrate(osc, y, 0.0, 10.0, samples, [&](double t, const State& s) {
    worst = std::max(worst, std::abs(s(0, 0).real() - osc.exact_first(t)));
    ++seen;
  });
  EXPECT_EQ(seen, samples.size());
  EXPECT_LT(worst, 1e-8);
  EXPECT_GT(stats.accepted, 0u);
  EXPECT_NEAR(y(0, 0).real(), osc.exact_first(10.0), 1e-9);
}

TEST(DormandPrince54, RespectsMaxStep) {
  IntegratorOptions opts;
  opts.max_step = 0.01;
  const DormandPrince54<State> dp(opts);
  State y = State::Constant(1, 1, 1.0);
  const auto stats = dp.integrate(
      [](double, const State& s, State& d) { d = -s; }, y, 0.0, 1.0, std::vector<double>{},
      [](double, const State&) {});
  EXPECT_GE(stats.accepted, 100u);
  EXPECT_NEAR(y(0, 0).real(), std::exp(-1.0), 1e-12);
}

TEST(DormandPrince54, SampleAtStartAndEnd) {
  const DormandPrince54<State> dp;
  State y = State::Constant(1, 1, 2.0);
  std::vector<double> got;
  dp.integrate([](double, const State& s, State& d) { d = -s; }, y, 1.0, 2.0,
               std::vector<double>{1.0, 2.0}, [&](double t, const State& s) {
                 got.push_back(t);
                 if (t == 1.0) {
                   EXPECT_EQ(s(0, 0).real(), 2.0);
                 }
               });
  ASSERT_EQ(got.size(), 2u);
  EXPECT_EQ(got.back(), 2.0);
}

TEST(DormandPrince54, StepUnderflowIsReported) {
  const DormandPrince54<State> dp;
  State y = State::Constant(1, 1, 1.0);
  auto bad = [](double t, const State&, State& d) {
    d = State::Constant(1, 1, t > 0.5 ? std::numeric_limits<double>::quiet_NaN() : 1.0);
  };
  EXPECT_THROW(dp.integrate(bad, y, 0.0, 1.0, std::vector<double>{}, [](double, const State&) {}),
               NumericsError);
}

TEST(DormandPrince54, RejectsBadSamples) {
  const DormandPrince54<State> dp;
  State y = State::Constant(1, 1, 1.0);
  auto rhs = [](double, const State& s, State& d) { d = -s; };
  auto obs = [](double, const State&) {};
  EXPECT_THROW(dp.integrate(rhs, y, 0.0, 1.0, std::vector<double>{0.5, 0.4}, obs), InputError);
  EXPECT_THROW(dp.integrate(rhs, y, 0.0, 1.0, std::vector<double>{1.5}, obs), InputError);
}

TEST(ClassicalRk4, AgreesWithAdaptive) {
  IntegratorOptions opts;
  opts.max_step = 1e-3;
  const ClassicalRk4<State> rk4(opts);
  State y(2, 1);
  y << 1.0, 0.0;
  const Oscillator osc;
  std::vector<double> samples{0.25, 1.0, 3.3};
  std::vector<double> vals;
  rk4.integrate(osc, y, 0.0, 4.0, samples, [&](double t, const State& s) {
    EXPECT_NEAR(s(0, 0).real(), osc.exact_first(t), 1e-10);
    vals.push_back(t);
  });
  EXPECT_EQ(vals, samples);
  EXPECT_NEAR(y(0, 0).real(), osc.exact_first(4.0), 1e-10);
}
