#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "superrad/units.hpp"

using namespace superrad;

TEST(Units, SaturationToRabi) {
  EXPECT_EQ(saturation_to_rabi(0.0), 0.0);
  EXPECT_DOUBLE_EQ(saturation_to_rabi(2.0), 1.0);
  // s ~ 75 gives 6.12; the quoted 6.5 sits within the ~10% intensity jitter.
  const double rabi = saturation_to_rabi(75.0);
  EXPECT_NEAR(rabi, 6.1237243569579, 1e-12);
  EXPECT_LT(std::abs(rabi * rabi - 6.5 * 6.5) / (6.5 * 6.5), 0.12);
  EXPECT_THROW(saturation_to_rabi(-1e-9), InputError);
}

TEST(Units, InverseRelation) {
  for (double rabi : {0.0, 0.3, 1.0, 6.5, 42.0}) {
    EXPECT_NEAR(saturation_to_rabi(rabi_to_saturation(rabi)), rabi, 1e-14 * (1.0 + rabi));
  }
}

TEST(Units, TimeConversion) {
  const TransitionSpec spec;
  EXPECT_NEAR(si_time_to_gamma_units(26e-9, spec), 0.9801769079200154, 1e-12);
  EXPECT_NEAR(1.0 / spec.gamma0, 26.525823848649224e-9, 1e-20);
  EXPECT_EQ(si_time_to_gamma_units(0.0, spec), 0.0);
  // 5e-9 * 2 pi * 6e6 = 0.06 pi
  EXPECT_NEAR(si_time_to_gamma_units(5e-9, spec), 0.06 * std::numbers::pi, 1e-15);
  EXPECT_NEAR(si_time_to_gamma_units(5e-9, spec), 0.188, 5e-4);
}

TEST(Units, RoundTripIsIdentity) {
  TransitionSpec spec;
  spec.gamma0 = 2.0 * std::numbers::pi * 5.75e6;
  for (double t : {1e-12, 3.3e-9, 150e-9, 1e-3}) {
    EXPECT_NEAR(gamma_units_to_si_time(si_time_to_gamma_units(t, spec), spec), t, 1e-12 * t);
  }
  for (double x : {1e-9, 2.6e-7, 1.17e-5}) {
    EXPECT_NEAR(lambda_units_to_si_length(si_length_to_lambda_units(x, spec), spec), x, 1e-12 * x);
  }
}

TEST(Units, TransitionSpecValidation) {
  TransitionSpec spec;
  EXPECT_NO_THROW(spec.validate());
  EXPECT_NEAR(spec.k0(), 2.0 * std::numbers::pi / 780.2e-9, 1e-3);
  spec.isat = 0.0;
  EXPECT_THROW(spec.validate(), InputError);
  spec = {};
  spec.lambda0 = -1.0;
  EXPECT_THROW(spec.validate(), InputError);
}
