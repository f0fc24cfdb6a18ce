#ifndef EKFLOC_SCAN_HPP_
#define EKFLOC_SCAN_HPP_

#include <Eigen/Dense>
#include <vector>

namespace ekfloc {

/// One LRF sweep: ordered (bearing, range) samples over at most a 180 degree
/// field of view. Bearings are strictly increasing in [-pi/2, pi/2], measured
/// from the robot's forward axis, positive to the left. Out-of-range returns
/// are flagged invalid (range stored as NaN, never 0).
struct Scan {
  std::vector<double> bearings;
  std::vector<double> ranges;
  std::vector<bool> valid;
  double max_range = 80.0;

  std::size_t size() const { return bearings.size(); }

  /// Throws std::invalid_argument if any type invariant is violated.
  void validate() const;

  /// Robot-frame Cartesian point of sample i. The forward axis maps to +y_R
  /// so that fitted normal-form angles agree with the global-to-robot line
  /// transform (a wall straight ahead comes out as psi = pi/2).
  Eigen::Vector2d point(std::size_t i) const;
};

}  // namespace ekfloc

#endif  // EKFLOC_SCAN_HPP_
