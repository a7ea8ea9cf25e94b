#pragma once

// Resonant dipole-dipole couplings from the free-space Green tensor.
//
// For two atoms separated by r (units of lambda0) sharing the unit dipole d,
// with x = k0 |r| and c = |d . r_hat|^2,
//
//   gamma_mn = 3/2 [ (1-c) sin x / x + (1-3c) (cos x / x^2 - sin x / x^3) ]
//   j_mn     = -3/4 [ (1-c) cos x / x - (1-3c) (sin x / x^2 + cos x / x^3) ]
//
// which are 6 pi/k0 Im and -3 pi/k0 Re of d* . G(r) . d. gamma_mn -> 1 as
// x -> 0 and j_mn diverges as x^-3.

#include <cmath>
#include <complex>
#include <cstddef>
#include <algorithm>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "superrad/error.hpp"
#include "superrad/types.hpp"

namespace superrad {

/// Pairs closer than this (lambda0 units) are rejected.
inline constexpr double kMinSeparation = 1e-6;

/// Circular sigma- dipole (e1 - i e2)/sqrt(2) about `quantization_axis`,
/// where (e1, e2, axis) is a right-handed orthonormal triad.
inline CVec3 sigma_minus_dipole(const Vec3& quantization_axis) {
  const Vec3 q = quantization_axis.normalized();
  // Any vector not parallel to q seeds the transverse basis.
  Vec3 seed = std::abs(q.z()) < 0.9 ? Vec3::UnitZ() : Vec3::UnitX();
  const Vec3 e1 = (seed - seed.dot(q) * q).normalized();
  const Vec3 e2 = q.cross(e1);
  const cplx i{0.0, 1.0};
  return (e1.cast<cplx>() - i * e2.cast<cplx>()) /
         std::numbers::sqrt2;
}

inline CVec3 linear_dipole(const Vec3& axis) {
  return axis.normalized().cast<cplx>();
}

/// Static atom positions (lambda0 units) with one shared dipole orientation.
class AtomConfiguration {
public:
  AtomConfiguration(std::vector<Vec3> positions, CVec3 dipole)
      : positions_(std::move(positions)), dipole_(std::move(dipole)) {
    validate();
  }

  std::size_t size() const { return positions_.size(); }
  const std::vector<Vec3>& positions() const { return positions_; }
  const Vec3& position(std::size_t n) const { return positions_[n]; }
  const CVec3& dipole() const { return dipole_; }

  /// Smallest pairwise distance, +inf for a single atom.
  double min_separation() const {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < size(); ++m) {
      for (std::size_t n = m + 1; n < size(); ++n) {
        best = std::min(best, (positions_[m] - positions_[n]).norm());
      }
    }
    return best;
  }

private:
  void validate() const {
    if (positions_.empty()) {
      throw InputError("AtomConfiguration: need at least one atom");
    }
    if (std::abs(dipole_.norm() - 1.0) > 1e-12) {
      throw InputError("AtomConfiguration: dipole must be a unit vector");
    }
    for (std::size_t m = 0; m < size(); ++m) {
      if (!positions_[m].allFinite()) {
        throw InputError("AtomConfiguration: non-finite position for atom " + std::to_string(m));
      }
      for (std::size_t n = m + 1; n < size(); ++n) {
        if ((positions_[m] - positions_[n]).norm() <= kMinSeparation) {
          std::ostringstream msg;
          msg << "AtomConfiguration: atoms " << m << " and " << n
              << " closer than the minimum separation " << kMinSeparation;
          throw SingularityError(msg.str());
        }
      }
    }
  }

  std::vector<Vec3> positions_;
  CVec3 dipole_;
};

struct PairCoupling {
  double gamma;
  double j;
};

namespace detail {

// cos x / x^2 - sin x / x^3, series below x = 0.3 to avoid cancellation.
inline double radial_near(double x) {
  if (x < 0.3) {
    const double x2 = x * x;
    return -1.0 / 3.0 +
           x2 * (1.0 / 30.0 + x2 * (-1.0 / 840.0 + x2 * (1.0 / 45360.0 - x2 / 3991680.0)));
  }
  return std::cos(x) / (x * x) - std::sin(x) / (x * x * x);
}

}  // namespace detail

inline PairCoupling pair_coupling(const Vec3& separation, const CVec3& dipole) {
  const double r = separation.norm();
  if (!(r > kMinSeparation)) {
    throw SingularityError("pair_coupling: separation below minimum, coupling diverges");
  }
  const Vec3 rhat = separation / r;
  const double c = std::norm(dipole.dot(rhat.cast<cplx>()));
  const double x = 2.0 * std::numbers::pi * r;
  const double sinc = std::sin(x) / x;
  const double gamma = 1.5 * ((1.0 - c) * sinc + (1.0 - 3.0 * c) * detail::radial_near(x));
  const double j = -0.75 * ((1.0 - c) * std::cos(x) / x -
                            (1.0 - 3.0 * c) * (std::sin(x) / (x * x) + std::cos(x) / (x * x * x)));
  return {gamma, j};
}

/// N x N coupling matrices (Gamma0 units): gamma has unit diagonal, j zero diagonal.
struct CouplingMatrices {
  Eigen::MatrixXd gamma;
  Eigen::MatrixXd j;

  std::size_t size() const { return static_cast<std::size_t>(gamma.rows()); }
};

inline CouplingMatrices build_couplings(const AtomConfiguration& config) {
  const auto n = static_cast<Eigen::Index>(config.size());
  CouplingMatrices out{Eigen::MatrixXd::Identity(n, n), Eigen::MatrixXd::Zero(n, n)};
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = a + 1; b < n; ++b) {
      PairCoupling pc{};
      try {
        pc = pair_coupling(config.position(b) - config.position(a), config.dipole());
      } catch (const SingularityError&) {
        throw SingularityError("build_couplings: atoms " + std::to_string(a) + " and " +
                               std::to_string(b) + " coincide");
      }
      out.gamma(a, b) = out.gamma(b, a) = pc.gamma;
      out.j(a, b) = out.j(b, a) = pc.j;
    }
  }
  return out;
}

}  // namespace superrad
