#pragma once

namespace omsense {

// CODATA 2018 exact/defined values.
inline constexpr double kHbar = 1.054571817e-34;      // J s
inline constexpr double kBoltzmann = 1.380649e-23;    // J/K

// Standard quantum limit of the added noise in these units.
inline constexpr double kSql = 0.5;

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kTwoPi = 2.0 * kPi;

}  // namespace omsense
