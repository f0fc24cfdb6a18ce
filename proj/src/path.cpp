#include "ekfloc/path.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ekfloc/angles.hpp"

namespace ekfloc {

double path_length(std::span<const Eigen::Vector2d> path) {
  double total = 0.0;
  for (std::size_t i = 1; i < path.size(); ++i) {
    total += (path[i] - path[i - 1]).norm();
  }
  return total;
}

double nearest_path_param(std::span<const Eigen::Vector2d> path,
                          const Eigen::Vector2d& p) {
  double best_d2 = std::numeric_limits<double>::infinity();
  double best_s = 0.0;
  double s0 = 0.0;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const Eigen::Vector2d a = path[i];
    const Eigen::Vector2d d = path[i + 1] - a;
    const double len2 = d.squaredNorm();
    double u = len2 > 0.0 ? (p - a).dot(d) / len2 : 0.0;
    u = std::clamp(u, 0.0, 1.0);
    const Eigen::Vector2d q = a + u * d;
    const double d2 = (p - q).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best_s = s0 + u * std::sqrt(len2);
    }
    s0 += std::sqrt(len2);
  }
  return best_s;
}

Eigen::Vector2d path_point_at(std::span<const Eigen::Vector2d> path,
                              double s) {
  if (path.empty()) throw std::invalid_argument("path_point_at: empty path");
  if (s <= 0.0) return path.front();
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const double len = (path[i + 1] - path[i]).norm();
    if (s <= len) {
      return len > 0.0 ? Eigen::Vector2d(path[i] +
                                         (s / len) * (path[i + 1] - path[i]))
                       : path[i];
    }
    s -= len;
  }
  return path.back();
}

Waypoints make_rounded_polygon_path(const std::vector<Eigen::Vector2d>& hull,
                                    double corner_radius, double spacing) {
  if (hull.size() < 3) {
    throw std::invalid_argument("rounded polygon: need >= 3 vertices");
  }
  const std::size_t n = hull.size();
  Waypoints pts;

  // Each corner becomes an arc tangent to both adjacent edges; straights
  // connect the tangent points. Sampling starts at the midpoint of edge 0.
  struct Corner {
    Eigen::Vector2d in_tangent, out_tangent, center;
    double a0, a1;  // arc angles
  };
  std::vector<Corner> corners(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector2d prev = hull[(i + n - 1) % n];
    const Eigen::Vector2d cur = hull[i];
    const Eigen::Vector2d next = hull[(i + 1) % n];
    const Eigen::Vector2d din = (cur - prev).normalized();
    const Eigen::Vector2d dout = (next - cur).normalized();
    const double turn = wrap_angle(std::atan2(dout.y(), dout.x()) -
                                   std::atan2(din.y(), din.x()));
    const double setback =
        corner_radius * std::tan(std::abs(turn) / 2.0);
    Corner& c = corners[i];
    c.in_tangent = cur - setback * din;
    c.out_tangent = cur + setback * dout;
    const Eigen::Vector2d nin(-din.y(), din.x());  // left normal
    c.center = c.in_tangent + (turn > 0 ? 1.0 : -1.0) * corner_radius * nin;
    c.a0 = std::atan2(c.in_tangent.y() - c.center.y(),
                      c.in_tangent.x() - c.center.x());
    c.a1 = c.a0 + turn;
  }

  auto emit_straight = [&](const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    const double len = (b - a).norm();
    const int steps = std::max(1, static_cast<int>(std::ceil(len / spacing)));
    for (int k = 0; k < steps; ++k) {
      pts.push_back(a + (static_cast<double>(k) / steps) * (b - a));
    }
  };
  auto emit_arc = [&](const Corner& c) {
    const double sweep = c.a1 - c.a0;
    const double arc_len = std::abs(sweep) * corner_radius;
    const int steps = std::max(1, static_cast<int>(std::ceil(arc_len / spacing)));
    for (int k = 0; k < steps; ++k) {
      const double a = c.a0 + sweep * static_cast<double>(k) / steps;
      pts.push_back(c.center + corner_radius *
                                   Eigen::Vector2d(std::cos(a), std::sin(a)));
    }
  };

  const Eigen::Vector2d start =
      0.5 * (corners[0].out_tangent + corners[1].in_tangent);
  emit_straight(start, corners[1].in_tangent);
  for (std::size_t i = 1; i < n; ++i) {
    emit_arc(corners[i]);
    emit_straight(corners[i].out_tangent, corners[(i + 1) % n].in_tangent);
  }
  emit_arc(corners[0]);
  emit_straight(corners[0].out_tangent, start);
  pts.push_back(start);
  return pts;
}

Waypoints make_rounded_rect_path(double xmin, double ymin, double xmax,
                                 double ymax, double corner_radius,
                                 double spacing) {
  if (!(xmax > xmin) || !(ymax > ymin)) {
    throw std::invalid_argument("rounded rect: empty extent");
  }
  return make_rounded_polygon_path(
      {{xmin, ymin}, {xmax, ymin}, {xmax, ymax}, {xmin, ymax}}, corner_radius,
      spacing);
}

std::span<const Eigen::Vector2d> PathFollower::advance(
    const Eigen::Vector2d& position) {
  const std::size_t hi = std::min(path_.size(), progress_ + search_window_);
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_i = progress_;
  for (std::size_t i = progress_; i < hi; ++i) {
    const double d = (path_[i] - position).squaredNorm();
    if (d < best) {
      best = d;
      best_i = i;
    }
  }
  progress_ = best_i;
  const std::size_t end = std::min(path_.size(), progress_ + preview_);
  return {path_.data() + progress_, end - progress_};
}

WheelRates path_controller(const Pose& pose,
                           std::span<const Eigen::Vector2d> path, double speed,
                           const RobotGeometry& geom,
                           const ControllerParams& params) {
  if (path.size() < 2) {
    throw std::invalid_argument("path_controller: need >= 2 waypoints");
  }
  const Eigen::Vector2d p(pose.x, pose.y);
  const double total = path_length(path);
  const double s = nearest_path_param(path, p);

  if ((p - path.back()).norm() <= params.goal_tol &&
      total - s <= 2.0 * params.lookahead) {
    return {0.0, 0.0};
  }

  const Eigen::Vector2d target =
      path_point_at(path, std::min(s + params.lookahead, total));
  const Eigen::Vector2d to_target = target - p;
  const double dist = std::max(to_target.norm(), 1e-6);
  const double alpha =
      wrap_angle(std::atan2(to_target.y(), to_target.x()) - pose.theta);

  double v, omega;
  if (std::abs(alpha) <= kPi / 2.0) {
    v = speed;
    omega = 2.0 * v * std::sin(alpha) / dist;
  } else {
    v = 0.0;  // target behind: turn in place toward it
    omega = (alpha > 0 ? 1.0 : -1.0) * 2.0 * speed / params.lookahead;
  }

  double omega_r = (v + 0.5 * omega * geom.track) / geom.wheel_radius;
  double omega_l = (v - 0.5 * omega * geom.track) / geom.wheel_radius;
  const double peak = std::max(std::abs(omega_r), std::abs(omega_l));
  if (peak > params.omega_max) {
    const double scale = params.omega_max / peak;
    omega_r *= scale;
    omega_l *= scale;
  }
  return {omega_l, omega_r};
}

}  // namespace ekfloc
