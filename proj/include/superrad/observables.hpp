#pragma once

// Measured quantities evaluated on density-matrix snapshots.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "superrad/couplings.hpp"
#include "superrad/density_matrix.hpp"
#include "superrad/error.hpp"

namespace superrad {

/// C(m, n) = <s_m^+ s_n^->.
inline Eigen::MatrixXcd correlation_matrix(const DensityMatrix& rho) {
  const std::size_t n_atoms = atoms_for_dim(rho.rows());
  const auto n = static_cast<Eigen::Index>(n_atoms);
  const Eigen::Index dim = rho.rows();
  Eigen::MatrixXcd corr = Eigen::MatrixXcd::Zero(n, n);
  // Tr(s_m^+ s_n^- rho) = sum over c with n in c, m not in c of rho[c, c ^ 2^n ^ 2^m].
  for (Eigen::Index m = 0; m < n; ++m) {
    const Eigen::Index bm = Eigen::Index{1} << m;
    for (Eigen::Index k = 0; k < n; ++k) {
      const Eigen::Index bk = Eigen::Index{1} << k;
      cplx sum{0.0, 0.0};
      for (Eigen::Index c = 0; c < dim; ++c) {
        if (!(c & bk)) {
          continue;
        }
        if (m == k) {
          sum += rho(c, c);
        } else if (!(c & bm)) {
          sum += rho(c, c ^ bk ^ bm);
        }
      }
      corr(m, k) = sum;
    }
  }
  return corr;
}

inline double excited_fraction(const DensityMatrix& rho) {
  const Eigen::MatrixXcd corr = correlation_matrix(rho);
  return corr.trace().real() / static_cast<double>(corr.rows());
}

/// sum_mn e^{i k_ax.(R_m - R_n)} <s_m^+ s_n^-> with k_ax = 2 pi k_ax_hat.
inline double axial_intensity_from_correlations(const Eigen::MatrixXcd& corr, const AtomConfiguration& config,
                              const Vec3& k_ax_hat) {
  if (std::abs(k_ax_hat.norm() - 1.0) > 1e-12) {
    throw InputError("axial_intensity: k_ax_hat must be a unit vector");
  }
  const Vec3 k = 2.0 * std::numbers::pi * k_ax_hat;
  const auto n = static_cast<Eigen::Index>(config.size());
  Eigen::VectorXcd phase(n);
  for (Eigen::Index m = 0; m < n; ++m) {
    phase(m) = std::exp(cplx{0.0, k.dot(config.position(static_cast<std::size_t>(m)))});
  }
  cplx sum{0.0, 0.0};
  for (Eigen::Index m = 0; m < n; ++m) {
    for (Eigen::Index k2 = 0; k2 < n; ++k2) {
      sum += phase(m) * std::conj(phase(k2)) * corr(m, k2);
    }
  }
  return sum.real();
}

inline double axial_intensity(const DensityMatrix& rho, const AtomConfiguration& config,
                              const Vec3& k_ax_hat) {
  return axial_intensity_from_correlations(correlation_matrix(rho), config, k_ax_hat);
}

/// sum_mn Gamma_mn <s_m^+ s_n^-> (Gamma0 units).
inline double total_rate_from_correlations(const Eigen::MatrixXcd& corr,
                                  const CouplingMatrices& couplings) {
  if (couplings.size() != static_cast<std::size_t>(corr.rows())) {
    throw InputError("total_emission_rate: coupling matrices do not match the state");
  }
  return (couplings.gamma.cast<cplx>().cwiseProduct(corr)).sum().real();
}

inline double total_emission_rate(const DensityMatrix& rho, const CouplingMatrices& couplings) {
  return total_rate_from_correlations(correlation_matrix(rho), couplings);
}

/// Named collective states. plus/minus are (|eg> +- |ge>)/sqrt(2) and need N = 2.
enum class NamedState { Plus, Minus, Ground, AllExcited };

using StateLabel = std::variant<NamedState, Eigen::VectorXcd>;

inline Eigen::VectorXcd state_vector(const StateLabel& label, std::size_t n_atoms) {
  const Eigen::Index dim = hilbert_dim(n_atoms);
  if (const auto* v = std::get_if<Eigen::VectorXcd>(&label)) {
    if (v->size() != dim) {
      throw InputError("state vector dimension does not match the state");
    }
    if (std::abs(v->norm() - 1.0) > 1e-10) {
      throw InputError("state vector is not normalized");
    }
    return *v;
  }
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(dim);
  switch (std::get<NamedState>(label)) {
    case NamedState::Ground:
      psi(0) = 1.0;
      break;
    case NamedState::AllExcited:
      psi(dim - 1) = 1.0;
      break;
    case NamedState::Plus:
    case NamedState::Minus: {
      if (n_atoms != 2) {
        throw InputError("plus/minus states are defined for two atoms only");
      }
      const double sign = std::get<NamedState>(label) == NamedState::Plus ? 1.0 : -1.0;
      psi(1) = 1.0 / std::numbers::sqrt2;          // |eg>: atom 0 excited
      psi(2) = sign * 1.0 / std::numbers::sqrt2;   // |ge>: atom 1 excited
      break;
    }
  }
  return psi;
}

/// <psi|rho|psi>, clamped to [0, 1].
inline double state_population(const DensityMatrix& rho, const StateLabel& label) {
  const Eigen::VectorXcd psi = state_vector(label, atoms_for_dim(rho.rows()));
  const double p = (psi.adjoint() * rho * psi)(0, 0).real();
  return std::clamp(p, 0.0, 1.0);
}

struct TaggedState {
  std::string label;
  StateLabel state;
};

struct TaggedColumn {
  std::string label;
  std::vector<double> values;

  friend bool operator==(const TaggedColumn&, const TaggedColumn&) = default;
};

struct EmissionTrajectory {
  std::vector<double> times;
  std::vector<double> n_e;
  std::vector<double> axial_intensity;
  std::vector<double> total_rate;
  std::vector<TaggedColumn> tagged_populations;

  std::size_t size() const { return times.size(); }

  friend bool operator==(const EmissionTrajectory&, const EmissionTrajectory&) = default;
};

struct ObservablesConfig {
  Vec3 k_ax_hat = Vec3::UnitX();
  std::vector<TaggedState> tags;
};

/// Incremental builder; record_trajectory is the batch form.
class TrajectoryRecorder {
public:
  TrajectoryRecorder(const AtomConfiguration& config, const CouplingMatrices& couplings,
                     ObservablesConfig obs)
      : config_(config), couplings_(couplings), obs_(std::move(obs)) {
    for (const auto& tag : obs_.tags) {
      traj_.tagged_populations.push_back({tag.label, {}});
      vectors_.push_back(state_vector(tag.state, config_.size()));
    }
  }

  void operator()(double t, const DensityMatrix& rho) {
    const Eigen::MatrixXcd corr = correlation_matrix(rho);
    traj_.times.push_back(t);
    traj_.n_e.push_back(corr.trace().real() / static_cast<double>(corr.rows()));
    traj_.axial_intensity.push_back(axial_intensity_from_correlations(corr, config_, obs_.k_ax_hat));
    traj_.total_rate.push_back(total_rate_from_correlations(corr, couplings_));
    for (std::size_t i = 0; i < vectors_.size(); ++i) {
      const double p = (vectors_[i].adjoint() * rho * vectors_[i])(0, 0).real();
      traj_.tagged_populations[i].values.push_back(std::clamp(p, 0.0, 1.0));
    }
  }

  const EmissionTrajectory& trajectory() const { return traj_; }
  EmissionTrajectory take() { return std::move(traj_); }

private:
  const AtomConfiguration& config_;
  const CouplingMatrices& couplings_;
  ObservablesConfig obs_;
  std::vector<Eigen::VectorXcd> vectors_;
  EmissionTrajectory traj_;
};

inline EmissionTrajectory record_trajectory(const std::vector<double>& times,
                                            const std::vector<DensityMatrix>& snapshots,
                                            const AtomConfiguration& config,
                                            const CouplingMatrices& couplings,
                                            const ObservablesConfig& obs) {
  if (snapshots.empty() || snapshots.size() != times.size()) {
    throw InputError("record_trajectory: need a nonempty snapshot list matching the times");
  }
  TrajectoryRecorder recorder(config, couplings, obs);
  for (std::size_t i = 0; i < snapshots.size(); ++i) {
    recorder(times[i], snapshots[i]);
  }
  return recorder.take();
}

}  // namespace superrad
