#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "superrad/ensemble.hpp"
#include "superrad/sweep.hpp"
#include "superrad/units.hpp"

using namespace superrad;

namespace {

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double stddev_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

Scenario small_pair_scenario(std::size_t n_real) {
  Scenario sc;
  sc.ensemble.n_realizations = n_real;
  sc.ensemble.seed = 42;
  sc.drive.rabi = saturation_to_rabi(75.0);
  sc.drive.t_off = 0.5;
  sc.sampling.record_after = 1.0;
  sc.sampling.sample_dt = 0.05;
  sc.observables.tags = {{"minus", NamedState::Minus}};
  return sc;
}

}  // namespace

TEST(Philox, KnownAnswerVectors) {
  EXPECT_EQ(philox4x32_10({0, 0, 0, 0}, {0, 0}),
            (Philox4x32Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
  EXPECT_EQ(philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                          {0xffffffffu, 0xffffffffu}),
            (Philox4x32Counter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
  EXPECT_EQ(philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                          {0xa4093822u, 0x299f31d0u}),
            (Philox4x32Counter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(CounterRng, StreamsAreIndependentAndReproducible) {
  CounterRng a(7, 3, RngStream::Geometry);
  CounterRng b(7, 3, RngStream::Geometry);
  CounterRng c(7, 3, RngStream::Drive);
  CounterRng d(7, 4, RngStream::Geometry);
  CounterRng e(8, 3, RngStream::Geometry);
  for (int i = 0; i < 10; ++i) {
    const auto x = a.next_u32();
    EXPECT_EQ(x, b.next_u32());
    const bool all_same = x == c.next_u32() && x == d.next_u32() && x == e.next_u32();
    EXPECT_FALSE(all_same);
  }
}

TEST(CounterRng, UniformAndNormalMoments) {
  CounterRng rng(1, 0, RngStream::Geometry);
  std::vector<double> u;
  std::vector<double> z;
  for (int i = 0; i < 100000; ++i) {
    const double x = rng.uniform();
    ASSERT_GE(x, 0.0);
    ASSERT_LT(x, 1.0);
    u.push_back(x);
    z.push_back(rng.normal());
  }
  EXPECT_NEAR(mean_of(u), 0.5, 0.005);
  EXPECT_NEAR(mean_of(z), 0.0, 0.01);
  EXPECT_NEAR(stddev_of(z), 1.0, 0.01);
}

TEST(SampleConfiguration, FixedPairDistanceIsExact) {
  EnsembleSpec spec;
  spec.seed = 3;
  for (std::uint64_t i = 0; i < 200; ++i) {
    const AtomConfiguration cfg = sample_configuration(spec, i);
    ASSERT_EQ(cfg.size(), 2u);
    EXPECT_EQ(cfg.position(0), Vec3::Zero());
    EXPECT_NEAR(cfg.position(1).norm(), 1.0 / 3.0, 1e-15);
  }
}

TEST(SampleConfiguration, SolidAngleSamplingIsIsotropic) {
  EnsembleSpec spec;
  spec.seed = 11;
  Vec3 sum = Vec3::Zero();
  std::vector<double> cz;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const Vec3 u = 3.0 * sample_configuration(spec, i).position(1);
    sum += u;
    cz.push_back(u.z());
  }
  EXPECT_LT((sum / n).norm(), 0.01);
  // Uniform on the sphere: cos(theta) uniform on [-1, 1], variance 1/3.
  EXPECT_NEAR(stddev_of(cz) * stddev_of(cz), 1.0 / 3.0, 0.01);
}

TEST(SampleConfiguration, PolarAngleSamplingHasUniformTheta) {
  EnsembleSpec spec;
  spec.seed = 12;
  spec.sampler = FixedPairSampler{1.0 / 3.0, OrientationSampling::PolarAngle};
  std::vector<double> theta;
  for (int i = 0; i < 20000; ++i) {
    const Vec3 u = 3.0 * sample_configuration(spec, i).position(1);
    theta.push_back(std::acos(std::clamp(u.z(), -1.0, 1.0)));
  }
  EXPECT_NEAR(mean_of(theta), std::numbers::pi / 2, 0.02);
  EXPECT_NEAR(stddev_of(theta), std::numbers::pi / std::sqrt(12.0), 0.02);
}

TEST(SampleConfiguration, GaussianCloudWidths) {
  EnsembleSpec spec;
  spec.seed = 5;
  spec.sampler = GaussianCloudSampler{4, 15.0, 0.5};
  std::vector<double> x, y, z;
  for (int i = 0; i < 2500; ++i) {
    const AtomConfiguration cfg = sample_configuration(spec, i);
    for (const Vec3& p : cfg.positions()) {
      x.push_back(p.x());
      y.push_back(p.y());
      z.push_back(p.z());
    }
  }
  ASSERT_EQ(x.size(), 10000u);
  EXPECT_NEAR(stddev_of(x), 15.0, 0.03 * 15.0);
  EXPECT_NEAR(stddev_of(y), 0.5, 0.03 * 0.5);
  EXPECT_NEAR(stddev_of(z), 0.5, 0.03 * 0.5);
}

TEST(SampleConfiguration, DeterministicPerIndex) {
  EnsembleSpec spec;
  spec.seed = 77;
  spec.sampler = GaussianCloudSampler{5, 2.0, 0.5};
  for (std::uint64_t i : {0u, 9u, 1000u}) {
    EXPECT_EQ(sample_configuration(spec, i).positions(), sample_configuration(spec, i).positions());
  }
  EXPECT_NE(sample_configuration(spec, 0).positions(), sample_configuration(spec, 1).positions());
}

TEST(SampleConfiguration, ExplicitPositionsPassThrough) {
  EnsembleSpec spec;
  spec.sampler = ExplicitPositions{{Vec3::Zero(), Vec3(0.5, 0, 0), Vec3(1, 0, 0)}};
  EXPECT_EQ(spec.n_atoms(), 3u);
  EXPECT_EQ(sample_configuration(spec, 17).position(2), Vec3(1, 0, 0));
  spec.sampler = ExplicitPositions{{Vec3::Zero(), Vec3::Zero()}};
  EXPECT_THROW(sample_configuration(spec, 0), SingularityError);
}

TEST(SampleDrive, JitterStatisticsAndTruncation) {
  EnsembleSpec spec;
  spec.seed = 21;
  spec.intensity_jitter_rel = 0.1;
  DrivePulse base;
  base.rabi = 2.0;
  std::vector<double> eps;
  for (int i = 0; i < 20000; ++i) {
    const double r = sample_drive(spec, base, i).rabi;
    eps.push_back(r * r / (base.rabi * base.rabi) - 1.0);
  }
  EXPECT_NEAR(mean_of(eps), 0.0, 0.005);
  EXPECT_NEAR(stddev_of(eps), 0.1, 0.005);
  const auto [lo, hi] = std::minmax_element(eps.begin(), eps.end());
  EXPECT_GE(*lo, -0.3 - 1e-12);
  EXPECT_LE(*hi, 0.3 + 1e-12);
  spec.intensity_jitter_rel = 0.0;
  EXPECT_EQ(sample_drive(spec, base, 3).rabi, 2.0);
}

TEST(EnsembleSpec, Validation) {
  EnsembleSpec spec;
  spec.n_realizations = 0;
  EXPECT_THROW(spec.validate(), InputError);
  spec = EnsembleSpec{};
  spec.intensity_jitter_rel = -0.1;
  EXPECT_THROW(spec.validate(), InputError);
  spec = EnsembleSpec{};
  spec.sampler = FixedPairSampler{0.0};
  EXPECT_THROW(spec.validate(), InputError);
  spec = EnsembleSpec{};
  spec.sampler = GaussianCloudSampler{0, 1.0, 1.0};
  EXPECT_THROW(spec.validate(), InputError);
}

TEST(RunEnsemble, SingleRealizationEqualsDirectRun) {
  const Scenario sc = small_pair_scenario(1);
  const EnsembleResult res = simulate(sc, 1, true);
  const AtomConfiguration cfg = sample_configuration(sc.ensemble, 0);
  const CouplingMatrices c = build_couplings(cfg);
  TrajectoryRecorder rec(cfg, c, sc.observables);
  evolve_observe(initial_ground_state(2), cfg, c, sc.drive,
                 make_schedule(sc.sampling, sc.drive.t_off), std::ref(rec));
  EXPECT_EQ(res.mean, rec.trajectory());
  ASSERT_EQ(res.realizations.size(), 1u);
  EXPECT_EQ(res.realizations[0], rec.trajectory());
  EXPECT_EQ(res.n_succeeded, 1u);
}

TEST(RunEnsemble, MeanLiesInsideRealizationEnvelope) {
  const EnsembleResult res = simulate(small_pair_scenario(16), 1, true);
  ASSERT_EQ(res.realizations.size(), 16u);
  for (std::size_t i = 0; i < res.mean.size(); ++i) {
    double lo = 1e300, hi = -1e300, sum = 0.0;
    for (const auto& r : res.realizations) {
      lo = std::min(lo, r.n_e[i]);
      hi = std::max(hi, r.n_e[i]);
      sum += r.n_e[i];
    }
    EXPECT_GE(res.mean.n_e[i], lo - 1e-15);
    EXPECT_LE(res.mean.n_e[i], hi + 1e-15);
    EXPECT_NEAR(res.mean.n_e[i], sum / 16.0, 1e-15);
  }
  EXPECT_GE(res.min_final_eigenvalue, -1e-7);
  EXPECT_LE(res.stats.max_trace_drift, 1e-8);
}

TEST(RunEnsemble, ResultIndependentOfJobs) {
  const Scenario sc = small_pair_scenario(12);
  const EnsembleResult one = simulate(sc, 1);
  const EnsembleResult four = simulate(sc, 4);
  EXPECT_EQ(one.mean, four.mean);
  EXPECT_EQ(one.stats.integrator.accepted, four.stats.integrator.accepted);
}

TEST(RunEnsemble, NCapIsEnforced) {
  Scenario sc = small_pair_scenario(1);
  sc.n_max = 1;
  EXPECT_THROW(simulate(sc), InputError);
}

TEST(RunEnsemble, FailurePolicy) {
  // A cloud far below the minimum separation cannot be resampled into a valid geometry.
  Scenario sc = small_pair_scenario(4);
  sc.ensemble.sampler = GaussianCloudSampler{2, 1e-12, 1e-12};
  EXPECT_THROW(simulate(sc), NumericsError);
}

TEST(PulseSweep, RowsAreOrderedAndAnalyzed) {
  Scenario sc = small_pair_scenario(2);
  sc.sampling.record_after = 8.0;
  const std::vector<double> durations{0.2, 0.5};
  const auto rows = pulse_sweep(sc, durations, DecayWindows{});
  ASSERT_EQ(rows.size(), 2u);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_TRUE(rows[i].ok) << rows[i].error;
    EXPECT_EQ(rows[i].duration, durations[i]);
    EXPECT_GT(rows[i].analysis.n_super, 0.0);
  }
  EXPECT_EQ(correlate_vs_ne(rows).size(), 2u);
  EXPECT_THROW(pulse_sweep(sc, {0.5, 0.2}, DecayWindows{}), InputError);
  EXPECT_THROW(pulse_sweep(sc, {}, DecayWindows{}), InputError);
}

TEST(PulseSweep, FailedRowIsFlaggedAndSweepContinues) {
  Scenario sc = small_pair_scenario(1);
  sc.sampling.record_after = 1.0;  // too short for the subradiant window
  const auto rows = pulse_sweep(sc, {0.2, 0.4}, DecayWindows{});
  for (const auto& r : rows) {
    EXPECT_FALSE(r.ok);
    EXPECT_FALSE(r.error.empty());
  }
}
