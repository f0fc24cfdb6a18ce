#ifndef EKFLOC_WORLD_HPP_
#define EKFLOC_WORLD_HPP_

#include <array>
#include <vector>

#include "ekfloc/angles.hpp"
#include "ekfloc/line.hpp"
#include "ekfloc/rng.hpp"
#include "ekfloc/scan.hpp"

namespace ekfloc {

/// Flat-wall environment: line segments with their normal forms. The wall
/// list doubles as the global line map for the filter.
struct World {
  std::vector<LineNF> walls;

  void validate() const;
  /// Axis-aligned bounding box of all wall endpoints: xmin, ymin, xmax, ymax.
  std::array<double, 4> bounds() const;
  bool contains(const Eigen::Vector2d& p) const;
};

/// Axis-aligned rectangular room with one corner at the origin.
World make_rectangle_room(double width, double height);

/// Rectangular arrangement built from discrete wall plates: each side is a
/// run of plate_len segments separated by gap_len openings (beams through a
/// gap leave the room and return nothing). All plates on one side share the
/// side's line equation.
World make_plate_room(double width, double height, double plate_len,
                      double gap_len);

struct LrfConfig {
  double fov = kPi;                    // rad, at most 180 degrees
  double angular_step = kPi / 360.0;   // rad, 0.5 degrees
  double max_range = 80.0;             // m
};

/// Ideal geometric sweep: each beam reports the nearest wall-segment
/// intersection. With nonzero sigmas the beam direction picks up Gaussian
/// deflect-angle error (the sample is still reported at the nominal
/// bearing), the measured distance picks up Gaussian range noise, and the
/// result is quantized to 1 mm. At zero sigmas the geometric distance is
/// returned exactly. Beams with no hit within max_range come back invalid.
/// Throws std::invalid_argument when the pose is not strictly inside.
Scan raycast(const World& world, const Pose& pose, const LrfConfig& lrf,
             double range_sigma = 0.0, Rng* rng = nullptr,
             double bearing_sigma = 0.0);

}  // namespace ekfloc

#endif  // EKFLOC_WORLD_HPP_
