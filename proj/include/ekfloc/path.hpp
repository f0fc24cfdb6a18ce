#ifndef EKFLOC_PATH_HPP_
#define EKFLOC_PATH_HPP_

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "ekfloc/kinematics.hpp"

namespace ekfloc {

using Waypoints = std::vector<Eigen::Vector2d>;

double path_length(std::span<const Eigen::Vector2d> path);

/// Arc-length parameter of the point on the polyline closest to p
/// (first-segment wins on ties).
double nearest_path_param(std::span<const Eigen::Vector2d> path,
                          const Eigen::Vector2d& p);

/// Position at arc length s, clamped to the path ends.
Eigen::Vector2d path_point_at(std::span<const Eigen::Vector2d> path, double s);

/// Closed rounded-rectangle loop (counter-clockwise), starting and ending at
/// the midpoint of the bottom edge.
Waypoints make_rounded_rect_path(double xmin, double ymin, double xmax,
                                 double ymax, double corner_radius,
                                 double spacing = 0.05);

/// Closed rounded-corner loop around a convex polygon (vertices CCW),
/// starting at the midpoint of the first edge.
Waypoints make_rounded_polygon_path(const std::vector<Eigen::Vector2d>& hull,
                                    double corner_radius,
                                    double spacing = 0.05);

struct ControllerParams {
  double lookahead = 0.3;   // m
  double goal_tol = 0.05;   // m
  double omega_max = 20.0;  // rad/s per wheel
};

/// Monotone progress tracking along a waypoint path with a bounded preview.
/// The preview hides a closed loop's end until the lap is nearly complete,
/// which keeps the controller's goal test unambiguous when the path starts
/// and ends at the same point.
class PathFollower {
 public:
  explicit PathFollower(const Waypoints& path, std::size_t search_window = 200,
                        std::size_t preview = 120)
      : path_(path), search_window_(search_window), preview_(preview) {}

  /// Advance progress to the waypoint nearest `position` (searched forward
  /// within the window) and return the visible slice of the path.
  std::span<const Eigen::Vector2d> advance(const Eigen::Vector2d& position);

  std::size_t progress() const { return progress_; }

 private:
  const Waypoints& path_;
  std::size_t progress_ = 0;
  std::size_t search_window_;
  std::size_t preview_;
};

/// Pure-pursuit tracking of a waypoint path: steer toward the point one
/// lookahead ahead of the nearest path point. Returns zero rates once the
/// final waypoint is reached within goal_tol. Wheel rates are scaled
/// (curvature-preserving) into [-omega_max, omega_max].
WheelRates path_controller(const Pose& pose,
                           std::span<const Eigen::Vector2d> path, double speed,
                           const RobotGeometry& geom,
                           const ControllerParams& params = {});

}  // namespace ekfloc

#endif  // EKFLOC_PATH_HPP_
