#ifndef EKFLOC_KINEMATICS_HPP_
#define EKFLOC_KINEMATICS_HPP_

#include <Eigen/Dense>

namespace ekfloc {

/// Planar robot state in the global frame. theta is kept in (-pi, pi].
struct Pose {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
};

struct RobotGeometry {
  double wheel_radius = 0.05;  // m
  double track = 0.6;          // m, distance between the drive wheels
};

/// Rotational speeds of the left and right drive wheels, rad/s.
struct WheelRates {
  double omega_l = 0.0;
  double omega_r = 0.0;
};

/// Incremental displacement of the robot center over one sampling period.
struct OdometryDelta {
  double ds = 0.0;      // m
  double dtheta = 0.0;  // rad
};

/// Wheel rates over dt to center displacement and heading increment.
OdometryDelta wheel_to_body(const WheelRates& rates, const RobotGeometry& geom,
                            double dt);

/// Dead-reckoning pose update; the heading of the result is wrapped.
Pose propagate_pose(const Pose& pose, const OdometryDelta& delta);

/// Jacobian of the motion update with respect to the state (x, y, theta).
Eigen::Matrix3d jacobian_state(const Pose& pose, const OdometryDelta& delta);

/// Jacobian of the motion update with respect to the wheel-rate noise,
/// columns ordered (right, left) to match the input-noise covariance.
Eigen::Matrix<double, 3, 2> jacobian_noise(const Pose& pose,
                                           const OdometryDelta& delta,
                                           const RobotGeometry& geom,
                                           double dt);

}  // namespace ekfloc

#endif  // EKFLOC_KINEMATICS_HPP_
