#pragma once

// Driven collective master equation for N two-level atoms,
//
//   d rho/dt = -i[H, rho] + sum_mn Gamma_mn (s_n^- rho s_m^+ - 1/2 {s_m^+ s_n^-, rho})
//   H = -Delta sum_n s_n^+ s_n^- + sum_{m!=n} J_mn s_m^+ s_n^-
//       + [drive on] 1/2 sum_n (Omega e^{i k.R_n} s_n^+ + h.c.)
//
// in the frame rotating at the laser frequency. The square drive is on for
// t < t_off and off afterwards; integration restarts at t_off so no step
// straddles the edge.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "superrad/couplings.hpp"
#include "superrad/density_matrix.hpp"
#include "superrad/error.hpp"
#include "superrad/integrator.hpp"

namespace superrad {

struct DrivePulse {
  double rabi = 0.0;      // Gamma0
  double detuning = 0.0;  // Gamma0, laser minus atom
  Vec3 k_hat = Vec3::UnitY();
  double t_off = 0.0;  // 1/Gamma0

  void validate() const {
    if (!(rabi >= 0.0) || !std::isfinite(rabi)) {
      throw InputError("DrivePulse: rabi must be finite and >= 0");
    }
    if (!std::isfinite(detuning)) {
      throw InputError("DrivePulse: detuning must be finite");
    }
    if (std::abs(k_hat.norm() - 1.0) > 1e-12) {
      throw InputError("DrivePulse: k_hat must be a unit vector");
    }
    if (!(t_off >= 0.0) || !std::isfinite(t_off)) {
      throw InputError("DrivePulse: t_off must be finite and >= 0");
    }
  }
};

enum class IntegrationMethod { DormandPrince54, Rk4 };

struct EvolutionSchedule {
  std::vector<double> t_grid;
  double rtol = 1e-8;
  double atol = 1e-10;
  /// <= 0 selects the default 0.01 / max(1, rabi) for each segment.
  double max_step = 0.0;
  IntegrationMethod method = IntegrationMethod::DormandPrince54;

  void validate(double t_off) const {
    if (t_grid.empty()) {
      throw InputError("EvolutionSchedule: empty t_grid");
    }
    if (t_grid.front() < 0.0) {
      throw InputError("EvolutionSchedule: t_grid must start at t >= 0");
    }
    for (std::size_t i = 1; i < t_grid.size(); ++i) {
      if (!(t_grid[i] > t_grid[i - 1])) {
        throw InputError("EvolutionSchedule: t_grid must be strictly increasing");
      }
    }
    if (t_off > t_grid.front() && t_off < t_grid.back() &&
        !std::binary_search(t_grid.begin(), t_grid.end(), t_off)) {
      throw InputError("EvolutionSchedule: t_off must be an exact grid point");
    }
    if (!(rtol > 0.0) || !(atol > 0.0)) {
      throw InputError("EvolutionSchedule: tolerances must be positive");
    }
  }
};

/// Uniform sampling with step <= dt on [0, t_off] followed by step dt on
/// (t_off, t_off + record_after]. t_off is always an exact grid point.
inline std::vector<double> make_time_grid(double t_off, double record_after, double dt) {
  if (!(dt > 0.0) || !(t_off >= 0.0) || !(record_after >= 0.0)) {
    throw InputError("make_time_grid: need dt > 0, t_off >= 0, record_after >= 0");
  }
  std::vector<double> grid;
  const auto n_on = static_cast<std::size_t>(std::ceil(t_off / dt - 1e-9));
  for (std::size_t i = 0; i < n_on; ++i) {
    grid.push_back(t_off * static_cast<double>(i) / static_cast<double>(n_on));
  }
  grid.push_back(t_off);
  const auto n_off = static_cast<std::size_t>(std::floor(record_after / dt + 1e-9));
  for (std::size_t i = 1; i <= n_off; ++i) {
    grid.push_back(t_off + static_cast<double>(i) * dt);
  }
  return grid;
}

namespace detail {

inline std::vector<cplx> drive_amplitudes(const AtomConfiguration& config,
                                          const DrivePulse& drive) {
  const Vec3 k = 2.0 * std::numbers::pi * drive.k_hat;
  std::vector<cplx> amps(config.size());
  for (std::size_t n = 0; n < config.size(); ++n) {
    amps[n] = 0.5 * drive.rabi * std::exp(cplx{0.0, k.dot(config.position(n))});
  }
  return amps;
}

inline void check_sizes(const AtomConfiguration& config, const CouplingMatrices& couplings) {
  if (couplings.size() != config.size() || couplings.j.rows() != couplings.gamma.rows() ||
      couplings.j.cols() != couplings.gamma.cols()) {
    throw InputError("configuration and coupling matrices disagree on N");
  }
}

inline Eigen::Index bit(std::size_t n) { return Eigen::Index{1} << n; }

}  // namespace detail

/// Dense system Hamiltonian (Gamma0 units).
inline Eigen::MatrixXcd build_hamiltonian(const AtomConfiguration& config,
                                          const CouplingMatrices& couplings,
                                          const DrivePulse& drive, bool drive_on) {
  detail::check_sizes(config, couplings);
  const std::size_t n_atoms = config.size();
  const Eigen::Index dim = hilbert_dim(n_atoms);
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(dim, dim);
  for (Eigen::Index a = 0; a < dim; ++a) {
    h(a, a) = -drive.detuning * std::popcount(static_cast<std::uint64_t>(a));
  }
  for (std::size_t m = 0; m < n_atoms; ++m) {
    for (std::size_t n = 0; n < n_atoms; ++n) {
      if (m == n) {
        continue;
      }
      // s_m^+ s_n^- : |c> -> |c - 2^n + 2^m> when n in c and m not in c.
      for (Eigen::Index c = 0; c < dim; ++c) {
        if ((c & detail::bit(n)) && !(c & detail::bit(m))) {
          h(c ^ detail::bit(n) ^ detail::bit(m), c) += couplings.j(m, n);
        }
      }
    }
  }
  if (drive_on) {
    const auto amps = detail::drive_amplitudes(config, drive);
    for (std::size_t n = 0; n < n_atoms; ++n) {
      for (Eigen::Index c = 0; c < dim; ++c) {
        if (!(c & detail::bit(n))) {
          h(c | detail::bit(n), c) += amps[n];
          h(c, c | detail::bit(n)) += std::conj(amps[n]);
        }
      }
    }
  }
  return h;
}

/// Generic master-equation right-hand side for an arbitrary dense H.
inline DensityMatrix lindblad_rhs(const DensityMatrix& rho, const Eigen::MatrixXcd& h,
                                  const CouplingMatrices& couplings) {
  if (rho.rows() != rho.cols() || h.rows() != rho.rows() || h.cols() != rho.cols()) {
    throw InputError("lindblad_rhs: shape mismatch");
  }
  const std::size_t n_atoms = atoms_for_dim(rho.rows());
  if (couplings.size() != n_atoms) {
    throw InputError("lindblad_rhs: coupling matrices do not match the state dimension");
  }
  const Eigen::Index dim = rho.rows();
  const cplx i{0.0, 1.0};
  DensityMatrix out = -i * (h * rho - rho * h);

  // Anticommutator with K = sum_mn Gamma_mn s_m^+ s_n^-.
  Eigen::MatrixXcd k = Eigen::MatrixXcd::Zero(dim, dim);
  for (std::size_t m = 0; m < n_atoms; ++m) {
    for (std::size_t n = 0; n < n_atoms; ++n) {
      for (Eigen::Index c = 0; c < dim; ++c) {
        if (!(c & detail::bit(n))) {
          continue;
        }
        if (m == n) {
          k(c, c) += couplings.gamma(m, n);
        } else if (!(c & detail::bit(m))) {
          k(c ^ detail::bit(n) ^ detail::bit(m), c) += couplings.gamma(m, n);
        }
      }
    }
  }
  out -= 0.5 * (k * rho + rho * k);

  // Jumps: (s_n^- rho s_m^+)[a, b] = rho[a | 2^n, b | 2^m] for n not in a, m not in b.
  for (std::size_t m = 0; m < n_atoms; ++m) {
    for (std::size_t n = 0; n < n_atoms; ++n) {
      const double g = couplings.gamma(m, n);
      for (Eigen::Index b = 0; b < dim; ++b) {
        if (b & detail::bit(m)) {
          continue;
        }
        for (Eigen::Index a = 0; a < dim; ++a) {
          if (!(a & detail::bit(n))) {
            out(a, b) += g * rho(a | detail::bit(n), b | detail::bit(m));
          }
        }
      }
    }
  }
  return out;
}

/// Matrix-free generator for a fixed geometry and drive. Applies
/// -i(H_eff rho - rho H_eff^dag) + jumps with H_eff = H - i/2 K, using index
/// arithmetic only (O(N^2 4^N) per call).
class LindbladGenerator {
public:
  LindbladGenerator(const AtomConfiguration& config, const CouplingMatrices& couplings,
                    const DrivePulse& drive)
      : n_atoms_(config.size()), dim_(hilbert_dim(config.size())), gamma_(couplings.gamma) {
    detail::check_sizes(config, couplings);
    drive.validate();
    const cplx i{0.0, 1.0};
    diag_.resize(dim_);
    for (Eigen::Index a = 0; a < dim_; ++a) {
      double decay = 0.0;
      for (std::size_t n = 0; n < n_atoms_; ++n) {
        if (a & detail::bit(n)) {
          decay += couplings.gamma(n, n);
        }
      }
      diag_[a] = -drive.detuning * std::popcount(static_cast<std::uint64_t>(a)) - 0.5 * i * decay;
    }
    for (std::size_t m = 0; m < n_atoms_; ++m) {
      for (std::size_t n = 0; n < n_atoms_; ++n) {
        if (m != n) {
          hops_.push_back({m, n, couplings.j(m, n) - 0.5 * i * couplings.gamma(m, n)});
        }
      }
    }
    drive_ = detail::drive_amplitudes(config, drive);
    without_.resize(n_atoms_);
    for (std::size_t n = 0; n < n_atoms_; ++n) {
      for (Eigen::Index a = 0; a < dim_; ++a) {
        if (!(a & detail::bit(n))) {
          without_[n].push_back(a);
        }
      }
    }
  }

  std::size_t n_atoms() const { return n_atoms_; }
  Eigen::Index dim() const { return dim_; }

  void apply(const DensityMatrix& rho, DensityMatrix& out, bool drive_on) const {
    const cplx i{0.0, 1.0};
    // out <- H_eff rho - rho H_eff^dag, built as left and right actions.
    out.noalias() = diag_.asDiagonal() * rho;
    out.noalias() -= rho * diag_.conjugate().asDiagonal();
    for (const Hop& hop : hops_) {
      const Eigen::Index bm = detail::bit(hop.m);
      const Eigen::Index bn = detail::bit(hop.n);
      // H_eff[c ^ bn ^ bm, c] = coef for c in without_[m] having bit n.
      for (const Eigen::Index c : without_[hop.m]) {
        if (!(c & bn)) {
          continue;
        }
        const Eigen::Index a = c ^ bn ^ bm;
        out.row(a) += hop.coef * rho.row(c);
        out.col(a) -= std::conj(hop.coef) * rho.col(c);
      }
    }
    if (drive_on) {
      for (std::size_t n = 0; n < n_atoms_; ++n) {
        const Eigen::Index bn = detail::bit(n);
        const cplx up = drive_[n];
        const cplx down = std::conj(drive_[n]);
        for (const Eigen::Index c : without_[n]) {
          // H[c|bn, c] = up, H[c, c|bn] = down.
          out.row(c | bn) += up * rho.row(c);
          out.row(c) += down * rho.row(c | bn);
          out.col(c | bn) -= down * rho.col(c);
          out.col(c) -= up * rho.col(c | bn);
        }
      }
    }
    out *= -i;

    for (std::size_t m = 0; m < n_atoms_; ++m) {
      const Eigen::Index bm = detail::bit(m);
      for (std::size_t n = 0; n < n_atoms_; ++n) {
        const double g = gamma_(m, n);
        if (g == 0.0) {
          continue;
        }
        const Eigen::Index bn = detail::bit(n);
        for (const Eigen::Index b : without_[m]) {
          const auto src = rho.col(b | bm);
          auto dst = out.col(b);
          for (const Eigen::Index a : without_[n]) {
            dst(a) += g * src(a | bn);
          }
        }
      }
    }
  }

private:
  struct Hop {
    std::size_t m;
    std::size_t n;
    cplx coef;
  };

  std::size_t n_atoms_;
  Eigen::Index dim_;
  Eigen::MatrixXd gamma_;
  Eigen::VectorXcd diag_;
  std::vector<Hop> hops_;
  std::vector<cplx> drive_;
  std::vector<std::vector<Eigen::Index>> without_;
};

struct EvolutionStats {
  IntegratorStats integrator;
  double max_trace_drift = 0.0;
  double max_hermiticity_residue = 0.0;

  EvolutionStats& operator+=(const EvolutionStats& o) {
    integrator += o.integrator;
    max_trace_drift = std::max(max_trace_drift, o.max_trace_drift);
    max_hermiticity_residue = std::max(max_hermiticity_residue, o.max_hermiticity_residue);
    return *this;
  }
};

inline constexpr double kTraceDriftAbort = 1e-8;
inline constexpr double kTraceRenormalizeFloor = 1e-12;
inline constexpr double kHermiticityAbort = 1e-9;

using SnapshotObserver = std::function<void(double, const DensityMatrix&)>;

/// Evolves rho0 (given at schedule.t_grid.front()) and hands each cleaned
/// snapshot to `observe`. Snapshots are Hermitized and, when the trace
/// drift lies in (1e-12, 1e-8], renormalized; larger drift aborts.
inline EvolutionStats evolve_observe(const DensityMatrix& rho0, const AtomConfiguration& config,
                                     const CouplingMatrices& couplings, const DrivePulse& drive,
                                     const EvolutionSchedule& schedule,
                                     const SnapshotObserver& observe) {
  drive.validate();
  schedule.validate(drive.t_off);
  if (rho0.rows() != hilbert_dim(config.size()) || rho0.cols() != rho0.rows()) {
    throw InputError("evolve: initial state does not match the configuration size");
  }
  const LindbladGenerator generator(config, couplings, drive);

  EvolutionStats stats;
  DensityMatrix clean;
  auto on_sample = [&](double t, const DensityMatrix& raw) {
    const double residue = hermiticity_residue(raw);
    const cplx tr = raw.trace();
    const double drift = std::abs(tr - cplx{1.0, 0.0});
    stats.max_hermiticity_residue = std::max(stats.max_hermiticity_residue, residue);
    stats.max_trace_drift = std::max(stats.max_trace_drift, drift);
    if (!(drift <= kTraceDriftAbort)) {
      throw NumericsError("evolve: trace drift " + std::to_string(drift) + " at t=" +
                          std::to_string(t) + " exceeds bound");
    }
    if (!(residue <= kHermiticityAbort)) {
      throw NumericsError("evolve: Hermiticity residue " + std::to_string(residue) +
                          " at t=" + std::to_string(t) + " exceeds bound");
    }
    clean = 0.5 * (raw + raw.adjoint());
    if (drift > kTraceRenormalizeFloor) {
      clean /= tr.real();
    }
    observe(t, clean);
  };

  const std::vector<double>& grid = schedule.t_grid;
  DensityMatrix y = rho0;
  double t = grid.front();
  auto first = grid.begin();

  auto run_segment = [&](double t_end, bool drive_on) {
    auto last = std::upper_bound(first, grid.end(), t_end);
    const std::span<const double> samples(&*first, static_cast<std::size_t>(last - first));
    IntegratorOptions opts;
    opts.rtol = schedule.rtol;
    opts.atol = schedule.atol;
    opts.max_step = schedule.max_step > 0.0
                        ? schedule.max_step
                        : 0.01 / std::max(1.0, drive_on ? drive.rabi : 0.0);
    auto rhs = [&](double, const DensityMatrix& r, DensityMatrix& out) {
      generator.apply(r, out, drive_on);
    };
    if (schedule.method == IntegrationMethod::DormandPrince54) {
      stats.integrator +=
          DormandPrince54<DensityMatrix>(opts).integrate(rhs, y, t, t_end, samples, on_sample);
    } else {
      stats.integrator +=
          ClassicalRk4<DensityMatrix>(opts).integrate(rhs, y, t, t_end, samples, on_sample);
    }
    t = t_end;
    first = last;
  };

  if (drive.t_off > t) {
    run_segment(std::min(drive.t_off, grid.back()), true);
  }
  if (first != grid.end()) {
    run_segment(grid.back(), false);
  }
  return stats;
}

struct EvolutionResult {
  std::vector<double> times;
  std::vector<DensityMatrix> states;
  EvolutionStats stats;
};

inline EvolutionResult evolve(const DensityMatrix& rho0, const AtomConfiguration& config,
                              const CouplingMatrices& couplings, const DrivePulse& drive,
                              const EvolutionSchedule& schedule) {
  EvolutionResult result;
  result.stats = evolve_observe(rho0, config, couplings, drive, schedule,
                                [&](double t, const DensityMatrix& rho) {
                                  result.times.push_back(t);
                                  result.states.push_back(rho);
                                });
  return result;
}

}  // namespace superrad
