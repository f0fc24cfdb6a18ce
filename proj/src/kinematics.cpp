#include "ekfloc/kinematics.hpp"

#include <cmath>
#include <stdexcept>

#include "ekfloc/angles.hpp"

namespace ekfloc {

OdometryDelta wheel_to_body(const WheelRates& rates, const RobotGeometry& geom,
                            double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("wheel_to_body: dt must be > 0");
  const double ds_l = dt * geom.wheel_radius * rates.omega_l;
  const double ds_r = dt * geom.wheel_radius * rates.omega_r;
  return {0.5 * (ds_l + ds_r), (ds_r - ds_l) / geom.track};
}

Pose propagate_pose(const Pose& pose, const OdometryDelta& delta) {
  const double mu = pose.theta + 0.5 * delta.dtheta;
  return {pose.x + delta.ds * std::cos(mu), pose.y + delta.ds * std::sin(mu),
          wrap_angle(pose.theta + delta.dtheta)};
}

Eigen::Matrix3d jacobian_state(const Pose& pose, const OdometryDelta& delta) {
  const double mu = pose.theta + 0.5 * delta.dtheta;
  Eigen::Matrix3d a = Eigen::Matrix3d::Identity();
  a(0, 2) = -delta.ds * std::sin(mu);
  a(1, 2) = delta.ds * std::cos(mu);
  return a;
}

Eigen::Matrix<double, 3, 2> jacobian_noise(const Pose& pose,
                                           const OdometryDelta& delta,
                                           const RobotGeometry& geom,
                                           double dt) {
  const double mu = pose.theta + 0.5 * delta.dtheta;
  const double c = std::cos(mu);
  const double s = std::sin(mu);
  const double k = delta.ds / geom.track;
  const double f = dt * geom.wheel_radius / 2.0;
  Eigen::Matrix<double, 3, 2> w;
  w << f * (c - k * s), f * (c + k * s),  //
      f * (s + k * c), f * (s - k * c),   //
      f * 2.0 / geom.track, -f * 2.0 / geom.track;
  return w;
}

}  // namespace ekfloc
