#pragma once

// Disorder averaging: sample geometries and drive realizations, evolve each
// independently and average the observables in fixed index order.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "superrad/couplings.hpp"
#include "superrad/density_matrix.hpp"
#include "superrad/error.hpp"
#include "superrad/observables.hpp"
#include "superrad/parallel.hpp"
#include "superrad/propagator.hpp"
#include "superrad/rng.hpp"

namespace superrad {

enum class OrientationSampling {
  SolidAngle,  // uniform on the sphere
  PolarAngle,  // polar angle uniform in [0, pi], azimuth uniform
};

/// Atom 0 at the origin, atom 1 at distance * u with a random direction u.
struct FixedPairSampler {
  double distance = 1.0 / 3.0;
  OrientationSampling orientation = OrientationSampling::SolidAngle;
};

/// i.i.d. normal positions; axial width along x, radial width along y and z.
struct GaussianCloudSampler {
  std::size_t n_atoms = 2;
  double sigma_ax = 15.0;
  double sigma_rad = 0.5;
};

/// The same explicit geometry for every realization.
struct ExplicitPositions {
  std::vector<Vec3> positions;
};

using GeometrySampler = std::variant<FixedPairSampler, GaussianCloudSampler, ExplicitPositions>;

struct EnsembleSpec {
  std::size_t n_realizations = 1;
  GeometrySampler sampler = FixedPairSampler{};
  CVec3 dipole = sigma_minus_dipole(Vec3::UnitY());
  double intensity_jitter_rel = 0.0;
  std::uint64_t seed = 0;

  std::size_t n_atoms() const {
    return std::visit(
        [](const auto& s) -> std::size_t {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, FixedPairSampler>) {
            return 2;
          } else if constexpr (std::is_same_v<T, GaussianCloudSampler>) {
            return s.n_atoms;
          } else {
            return s.positions.size();
          }
        },
        sampler);
  }

  void validate() const {
    if (n_realizations < 1) {
      throw InputError("EnsembleSpec: n_realizations must be >= 1");
    }
    if (!(intensity_jitter_rel >= 0.0)) {
      throw InputError("EnsembleSpec: intensity_jitter_rel must be >= 0");
    }
    if (std::abs(dipole.norm() - 1.0) > 1e-12) {
      throw InputError("EnsembleSpec: dipole must be a unit vector");
    }
    if (const auto* p = std::get_if<FixedPairSampler>(&sampler); p && !(p->distance > 0.0)) {
      throw InputError("EnsembleSpec: pair distance must be > 0");
    }
    if (const auto* g = std::get_if<GaussianCloudSampler>(&sampler)) {
      if (g->n_atoms < 1 || !(g->sigma_ax > 0.0) || !(g->sigma_rad > 0.0)) {
        throw InputError("EnsembleSpec: gaussian cloud needs n_atoms >= 1 and positive widths");
      }
    }
    if (const auto* e = std::get_if<ExplicitPositions>(&sampler); e && e->positions.empty()) {
      throw InputError("EnsembleSpec: explicit geometry needs at least one position");
    }
  }
};

inline constexpr int kMaxResampleAttempts = 100;

inline Vec3 sample_direction(CounterRng& rng, OrientationSampling mode) {
  const double phi = 2.0 * std::numbers::pi * rng.uniform();
  double cos_theta = 0.0;
  if (mode == OrientationSampling::SolidAngle) {
    cos_theta = 2.0 * rng.uniform() - 1.0;
  } else {
    cos_theta = std::cos(std::numbers::pi * rng.uniform());
  }
  const double sin_theta = std::sqrt(std::max(0.0, 1.0 - cos_theta * cos_theta));
  return {sin_theta * std::cos(phi), sin_theta * std::sin(phi), cos_theta};
}

inline AtomConfiguration sample_configuration(const EnsembleSpec& spec,
                                              std::uint64_t realization_index) {
  CounterRng rng(spec.seed, realization_index, RngStream::Geometry);
  if (const auto* pair = std::get_if<FixedPairSampler>(&spec.sampler)) {
    const Vec3 u = sample_direction(rng, pair->orientation);
    return AtomConfiguration({Vec3::Zero(), pair->distance * u}, spec.dipole);
  }
  if (const auto* cloud = std::get_if<GaussianCloudSampler>(&spec.sampler)) {
    for (int attempt = 0; attempt < kMaxResampleAttempts; ++attempt) {
      std::vector<Vec3> pos(cloud->n_atoms);
      for (Vec3& p : pos) {
        const double x = cloud->sigma_ax * rng.normal();
        const double y = cloud->sigma_rad * rng.normal();
        const double z = cloud->sigma_rad * rng.normal();
        p = {x, y, z};
      }
      bool ok = true;
      for (std::size_t m = 0; m < pos.size() && ok; ++m) {
        for (std::size_t n = m + 1; n < pos.size() && ok; ++n) {
          ok = (pos[m] - pos[n]).norm() > kMinSeparation;
        }
      }
      if (ok) {
        return AtomConfiguration(std::move(pos), spec.dipole);
      }
    }
    throw InputError("sample_configuration: gaussian cloud resampling exceeded " +
                     std::to_string(kMaxResampleAttempts) + " attempts");
  }
  return AtomConfiguration(std::get<ExplicitPositions>(spec.sampler).positions, spec.dipole);
}

/// Rabi frequency scaled by sqrt(1 + eps), eps ~ N(0, jitter) truncated at 3 sigma.
inline DrivePulse sample_drive(const EnsembleSpec& spec, const DrivePulse& base,
                               std::uint64_t realization_index) {
  if (!(spec.intensity_jitter_rel >= 0.0)) {
    throw InputError("sample_drive: jitter must be >= 0");
  }
  DrivePulse drive = base;
  if (spec.intensity_jitter_rel == 0.0) {
    return drive;
  }
  CounterRng rng(spec.seed, realization_index, RngStream::Drive);
  double z = rng.normal();
  while (std::abs(z) > 3.0) {
    z = rng.normal();
  }
  const double eps = spec.intensity_jitter_rel * z;
  drive.rabi = base.rabi * std::sqrt(std::max(0.0, 1.0 + eps));
  return drive;
}

struct RunOptions {
  std::size_t jobs = 1;
  bool keep_realizations = false;
  std::size_t n_max = kDefaultMaxAtoms;
  bool check_positivity = true;
};

struct RealizationFailure {
  std::size_t index;
  std::string what;
};

struct EnsembleResult {
  EmissionTrajectory mean;
  std::vector<EmissionTrajectory> realizations;  // only with keep_realizations
  std::vector<RealizationFailure> failures;
  EvolutionStats stats;
  double min_final_eigenvalue = 0.0;  // worst over realizations; 0 if unchecked
  std::size_t n_succeeded = 0;
};

namespace detail {

inline void accumulate(std::vector<double>& sum, const std::vector<double>& v) {
  for (std::size_t i = 0; i < sum.size(); ++i) {
    sum[i] += v[i];
  }
}

}  // namespace detail

/// Runs every realization on the shared schedule and averages the observable
/// columns. Failed realizations are excluded and reported; more than 1%
/// failures is an error.
inline EnsembleResult run_ensemble(const EnsembleSpec& spec, const DrivePulse& base_drive,
                                   const EvolutionSchedule& schedule, const ObservablesConfig& obs,
                                   const RunOptions& opts = {}) {
  spec.validate();
  base_drive.validate();
  schedule.validate(base_drive.t_off);
  const std::size_t n_atoms = spec.n_atoms();
  if (n_atoms < 1 || n_atoms > opts.n_max) {
    throw InputError("run_ensemble: N=" + std::to_string(n_atoms) + " exceeds the cap " +
                     std::to_string(opts.n_max));
  }

  struct Slot {
    std::optional<EmissionTrajectory> traj;
    EvolutionStats stats;
    double min_eig = 0.0;
    std::string error;
  };
  std::vector<Slot> slots(spec.n_realizations);

  parallel_for(spec.n_realizations, opts.jobs, [&](std::size_t idx) {
    Slot& slot = slots[idx];
    try {
      const AtomConfiguration config = sample_configuration(spec, idx);
      const CouplingMatrices couplings = build_couplings(config);
      const DrivePulse drive = sample_drive(spec, base_drive, idx);
      TrajectoryRecorder recorder(config, couplings, obs);
      DensityMatrix last;
      slot.stats = evolve_observe(initial_ground_state(n_atoms, opts.n_max), config, couplings,
                                  drive, schedule, [&](double t, const DensityMatrix& rho) {
                                    recorder(t, rho);
                                    if (t == schedule.t_grid.back()) {
                                      last = rho;
                                    }
                                  });
      if (opts.check_positivity) {
        slot.min_eig = min_eigenvalue(last);
      }
      slot.traj = recorder.take();
    } catch (const std::exception& e) {
      slot.error = e.what();
    }
  });

  EnsembleResult result;
  for (std::size_t idx = 0; idx < slots.size(); ++idx) {
    Slot& slot = slots[idx];
    if (!slot.traj) {
      result.failures.push_back({idx, slot.error});
      continue;
    }
    const EmissionTrajectory& tr = *slot.traj;
    if (result.n_succeeded == 0) {
      result.mean = tr;
      result.min_final_eigenvalue = slot.min_eig;
    } else {
      detail::accumulate(result.mean.n_e, tr.n_e);
      detail::accumulate(result.mean.axial_intensity, tr.axial_intensity);
      detail::accumulate(result.mean.total_rate, tr.total_rate);
      for (std::size_t c = 0; c < tr.tagged_populations.size(); ++c) {
        detail::accumulate(result.mean.tagged_populations[c].values,
                           tr.tagged_populations[c].values);
      }
      result.min_final_eigenvalue = std::min(result.min_final_eigenvalue, slot.min_eig);
    }
    result.stats += slot.stats;
    ++result.n_succeeded;
    if (opts.keep_realizations) {
      result.realizations.push_back(std::move(*slot.traj));
    }
  }

  if (result.failures.size() * 100 > spec.n_realizations || result.n_succeeded == 0) {
    throw NumericsError("run_ensemble: " + std::to_string(result.failures.size()) + " of " +
                        std::to_string(spec.n_realizations) +
                        " realizations failed; first: " + result.failures.front().what);
  }
  const double inv = 1.0 / static_cast<double>(result.n_succeeded);
  auto scale = [inv](std::vector<double>& v) {
    for (double& x : v) x *= inv;
  };
  scale(result.mean.n_e);
  scale(result.mean.axial_intensity);
  scale(result.mean.total_rate);
  for (auto& col : result.mean.tagged_populations) {
    scale(col.values);
  }
  return result;
}

}  // namespace superrad
