#ifndef EKFLOC_LINE_HPP_
#define EKFLOC_LINE_HPP_

#include <Eigen/Dense>
#include <cstddef>
#include <utility>

#include "ekfloc/kinematics.hpp"

namespace ekfloc {

/// A wall in the global frame, in normal form
///   x*cos(beta) + y*sin(beta) = rho,   rho >= 0, beta in (-pi, pi].
/// seg_start / seg_end bound the physical extent for raycasting and display;
/// both must lie on the line itself.
struct LineNF {
  double rho = 0.0;
  double beta = 0.0;
  Eigen::Vector2d seg_start{0.0, 0.0};
  Eigen::Vector2d seg_end{0.0, 0.0};
};

/// A line fitted from one scan, in the robot frame:
///   x_R*cos(psi) + y_R*sin(psi) = r.
/// cov is the 2x2 covariance of (r, psi) from the weighted fit.
struct LocalLine {
  double r = 0.0;
  double psi = 0.0;
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  int support_count = 0;
  std::pair<std::size_t, std::size_t> point_span{0, 0};
};

/// Canonical normal form: rho >= 0, beta wrapped to (-pi, pi].
/// (rho, beta) and (-rho, beta + pi) describe the same point set.
std::pair<double, double> normalize_line(double rho, double beta);

/// Result of expressing a global line in the robot frame.
struct RobotFrameLine {
  double r_hat = 0.0;      // |C|
  double psi_hat = 0.0;    // wrapped
  double theta_hat = 0.0;  // the heading entering the compass row
  double c = 0.0;          // signed perpendicular offset
};

inline constexpr double kEpsilonOnLine = 1e-9;

/// Transform a global line into the robot-frame parameters (r_hat, psi_hat).
/// Throws DegenerateGeometryError when the robot lies on the line
/// (|C| < kEpsilonOnLine), where the sign convention breaks down.
/// compass_phi is carried through for signature parity with the measurement
/// prediction; it does not enter the line parameters.
RobotFrameLine line_to_robot_frame(const LineNF& line, const Pose& pose,
                                   double compass_phi = 0.0);

/// Inverse transform: robot-frame (r, psi) at a known pose back to a global
/// normal form. normalize_line is applied to the result, so both sign
/// branches of the forward transform invert correctly.
std::pair<double, double> line_to_global_frame(double r, double psi,
                                               const Pose& pose);

/// Parameter-space separation of two global lines, accounting for the
/// (rho, beta) ~ (-rho, beta + pi) ambiguity near rho = 0.
/// Returns (|d_rho|, |d_beta|) for the closer of the two representations.
std::pair<double, double> line_param_distance(double rho_a, double beta_a,
                                              double rho_b, double beta_b);

/// Build a LineNF through two points; endpoints become the segment extent.
LineNF line_through_points(const Eigen::Vector2d& a, const Eigen::Vector2d& b);

}  // namespace ekfloc

#endif  // EKFLOC_LINE_HPP_
