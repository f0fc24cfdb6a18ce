#ifndef EKFLOC_ANGLES_HPP_
#define EKFLOC_ANGLES_HPP_

#include <cmath>

namespace ekfloc {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Wrap an angle to (-pi, pi].
inline double wrap_angle(double a) {
  a = std::remainder(a, kTwoPi);  // lands in [-pi, pi]
  if (a <= -kPi) a += kTwoPi;
  return a;
}

/// Wrapped difference a - b, in (-pi, pi].
inline double angle_diff(double a, double b) { return wrap_angle(a - b); }

inline constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }

}  // namespace ekfloc

#endif  // EKFLOC_ANGLES_HPP_
