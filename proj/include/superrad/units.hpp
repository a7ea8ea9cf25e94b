#pragma once

// Rb87 D2-line constants and the dimensionless unit system.
//
// Inside the library every length is in units of the transition wavelength
// lambda0, every time in 1/Gamma0 and every rate or Rabi frequency in
// Gamma0. SI quantities only appear at the configuration boundary.

#include <cmath>
#include <numbers>
#include <string>

#include "superrad/error.hpp"

namespace superrad {

struct TransitionSpec {
  double lambda0 = 780.2e-9;                    // m
  double gamma0 = 2.0 * std::numbers::pi * 6e6;  // rad/s
  double isat = 16.7;                           // W/m^2 (1.67 mW/cm^2)

  double k0() const { return 2.0 * std::numbers::pi / lambda0; }

  void validate() const {
    if (!(lambda0 > 0.0) || !(gamma0 > 0.0) || !(isat > 0.0)) {
      throw InputError("TransitionSpec: lambda0, gamma0 and isat must be strictly positive");
    }
  }

  friend bool operator==(const TransitionSpec&, const TransitionSpec&) = default;
};

/// On-resonance Rabi frequency (Gamma0 units) for saturation parameter s = I/Isat.
inline double saturation_to_rabi(double s) {
  if (!(s >= 0.0)) {
    throw InputError("saturation parameter must be non-negative, got " + std::to_string(s));
  }
  return std::sqrt(s / 2.0);
}

inline double rabi_to_saturation(double rabi) { return 2.0 * rabi * rabi; }

inline double si_time_to_gamma_units(double seconds, const TransitionSpec& spec) {
  return seconds * spec.gamma0;
}

inline double gamma_units_to_si_time(double t, const TransitionSpec& spec) {
  return t / spec.gamma0;
}

inline double si_length_to_lambda_units(double meters, const TransitionSpec& spec) {
  return meters / spec.lambda0;
}

inline double lambda_units_to_si_length(double x, const TransitionSpec& spec) {
  return x * spec.lambda0;
}

/// Intensity in W/m^2 to the saturation parameter s.
inline double intensity_to_saturation(double watts_per_m2, const TransitionSpec& spec) {
  return watts_per_m2 / spec.isat;
}

}  // namespace superrad
