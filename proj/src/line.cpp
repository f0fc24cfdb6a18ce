#include "ekfloc/line.hpp"

#include <cmath>
#include <stdexcept>

#include "ekfloc/angles.hpp"
#include "ekfloc/errors.hpp"

namespace ekfloc {

std::pair<double, double> normalize_line(double rho, double beta) {
  if (!std::isfinite(rho) || !std::isfinite(beta)) {
    throw std::invalid_argument("normalize_line: non-finite input");
  }
  if (rho < 0.0) {
    rho = -rho;
    beta += kPi;
  }
  return {rho, wrap_angle(beta)};
}

RobotFrameLine line_to_robot_frame(const LineNF& line, const Pose& pose,
                                   double /*compass_phi*/) {
  const double c = line.rho - pose.x * std::cos(line.beta) -
                   pose.y * std::sin(line.beta);
  if (std::abs(c) < kEpsilonOnLine) {
    throw DegenerateGeometryError("robot lies on the line, sgn(C) undefined");
  }
  const double sgn = c > 0.0 ? 1.0 : -1.0;
  const double psi = line.beta - (pose.theta - kPi / 2.0) +
                     (-0.5 * sgn + 0.5) * kPi;
  return {std::abs(c), wrap_angle(psi), pose.theta, c};
}

std::pair<double, double> line_to_global_frame(double r, double psi,
                                               const Pose& pose) {
  const double beta = psi + pose.theta - kPi / 2.0;
  const double rho =
      r + pose.x * std::cos(beta) + pose.y * std::sin(beta);
  return normalize_line(rho, beta);
}

std::pair<double, double> line_param_distance(double rho_a, double beta_a,
                                              double rho_b, double beta_b) {
  const double d_rho_same = std::abs(rho_a - rho_b);
  const double d_beta_same = std::abs(angle_diff(beta_a, beta_b));
  const double d_rho_flip = std::abs(rho_a + rho_b);
  const double d_beta_flip = std::abs(angle_diff(beta_a, beta_b + kPi));
  if (d_beta_flip + d_rho_flip < d_beta_same + d_rho_same) {
    return {d_rho_flip, d_beta_flip};
  }
  return {d_rho_same, d_beta_same};
}

LineNF line_through_points(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  const Eigen::Vector2d d = b - a;
  const double len = d.norm();
  if (len <= 0.0) {
    throw std::invalid_argument("line_through_points: coincident points");
  }
  const Eigen::Vector2d n(-d.y() / len, d.x() / len);
  auto [rho, beta] = normalize_line(n.dot(a), std::atan2(n.y(), n.x()));
  return {rho, beta, a, b};
}

}  // namespace ekfloc
