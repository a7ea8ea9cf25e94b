#pragma once

// Dense 2^N x 2^N density matrices in the bit-string basis: bit n of a basis
// index is set when atom n is excited, so index 0 is |g...g>.

#include <bit>
#include <complex>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include <Eigen/Dense>

#include "superrad/error.hpp"
#include "superrad/types.hpp"

namespace superrad {

using DensityMatrix = Eigen::MatrixXcd;

inline constexpr std::size_t kDefaultMaxAtoms = 10;

inline Eigen::Index hilbert_dim(std::size_t n_atoms) {
  return Eigen::Index{1} << n_atoms;
}

/// Number of atoms for a state of dimension dim (dim must be a power of two).
inline std::size_t atoms_for_dim(Eigen::Index dim) {
  const auto d = static_cast<std::uint64_t>(dim);
  if (dim < 2 || !std::has_single_bit(d)) {
    throw InputError("state dimension " + std::to_string(dim) + " is not 2^N with N >= 1");
  }
  return static_cast<std::size_t>(std::countr_zero(d));
}

inline DensityMatrix initial_ground_state(std::size_t n_atoms,
                                          std::size_t n_max = kDefaultMaxAtoms) {
  if (n_atoms < 1 || n_atoms > n_max) {
    throw InputError("initial_ground_state: n_atoms=" + std::to_string(n_atoms) +
                     " outside [1, " + std::to_string(n_max) + "]");
  }
  const Eigen::Index dim = hilbert_dim(n_atoms);
  DensityMatrix rho = DensityMatrix::Zero(dim, dim);
  rho(0, 0) = 1.0;
  return rho;
}

inline DensityMatrix pure_state(const Eigen::VectorXcd& psi) {
  return psi * psi.adjoint();
}

inline double hermiticity_residue(const DensityMatrix& rho) {
  return (rho - rho.adjoint()).cwiseAbs().maxCoeff();
}

inline double trace_drift(const DensityMatrix& rho) {
  return std::abs(rho.trace() - cplx{1.0, 0.0});
}

inline double min_eigenvalue(const DensityMatrix& rho) {
  const DensityMatrix h = 0.5 * (rho + rho.adjoint());
  Eigen::SelfAdjointEigenSolver<DensityMatrix> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

inline double purity(const DensityMatrix& rho) {
  return (rho * rho).trace().real();
}

/// Full invariant check: Hermitian to 1e-10, unit trace to 1e-8, PSD to -1e-8.
inline void check_density_matrix(const DensityMatrix& rho) {
  if (rho.rows() != rho.cols()) {
    throw InputError("density matrix must be square");
  }
  atoms_for_dim(rho.rows());
  if (hermiticity_residue(rho) > 1e-10) {
    throw InputError("density matrix is not Hermitian");
  }
  if (trace_drift(rho) > 1e-8) {
    throw InputError("density matrix trace differs from 1");
  }
  if (min_eigenvalue(rho) < -1e-8) {
    throw InputError("density matrix has a negative eigenvalue");
  }
}

// Snapshot dump: uint64 dim, then dim*dim row-major (re, im) float64 pairs,
// all little-endian.

namespace detail {

inline void put_le64(std::ostream& os, std::uint64_t v) {
  char buf[8];
  for (int i = 0; i < 8; ++i) {
    buf[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  }
  os.write(buf, 8);
}

inline std::uint64_t get_le64(std::istream& is) {
  unsigned char buf[8];
  if (!is.read(reinterpret_cast<char*>(buf), 8)) {
    throw IoError("snapshot: truncated input");
  }
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  }
  return v;
}

}  // namespace detail

inline void write_snapshot(std::ostream& os, const DensityMatrix& rho) {
  detail::put_le64(os, static_cast<std::uint64_t>(rho.rows()));
  for (Eigen::Index r = 0; r < rho.rows(); ++r) {
    for (Eigen::Index c = 0; c < rho.cols(); ++c) {
      detail::put_le64(os, std::bit_cast<std::uint64_t>(rho(r, c).real()));
      detail::put_le64(os, std::bit_cast<std::uint64_t>(rho(r, c).imag()));
    }
  }
  if (!os) {
    throw IoError("snapshot: write failed");
  }
}

inline DensityMatrix read_snapshot(std::istream& is) {
  const std::uint64_t dim = detail::get_le64(is);
  if (dim == 0 || dim > (std::uint64_t{1} << 20)) {
    throw IoError("snapshot: implausible dimension " + std::to_string(dim));
  }
  const auto d = static_cast<Eigen::Index>(dim);
  DensityMatrix rho(d, d);
  for (Eigen::Index r = 0; r < d; ++r) {
    for (Eigen::Index c = 0; c < d; ++c) {
      const double re = std::bit_cast<double>(detail::get_le64(is));
      const double im = std::bit_cast<double>(detail::get_le64(is));
      rho(r, c) = cplx{re, im};
    }
  }
  return rho;
}

}  // namespace superrad
