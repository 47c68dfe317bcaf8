#pragma once

namespace kitwpa {

inline constexpr double kPi = 3.14159265358979323846264338327950288;
inline constexpr double kSpeedOfLight = 299792458.0;        // m/s, exact
inline constexpr double kPlanck = 6.62607015e-34;           // J s, exact
inline constexpr double kBoltzmann = 1.380649e-23;          // J/K, exact
inline constexpr double kHbar = kPlanck / (2.0 * kPi);

// A supercell grid point counts as evanescent only when |cos(kD)| exceeds
// unity by more than this guard, so roundoff tangencies at zone boundaries
// do not spawn one-point stopbands. Real gaps overshoot by >= 1e-5.
inline constexpr double kStopbandGuard = 1e-10;

}  // namespace kitwpa
