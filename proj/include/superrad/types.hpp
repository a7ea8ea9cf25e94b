#pragma once

#include <complex>

#include <Eigen/Dense>

namespace superrad {

using cplx = std::complex<double>;
using Vec3 = Eigen::Vector3d;
using CVec3 = Eigen::Vector3cd;

}  // namespace superrad
