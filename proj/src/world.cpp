#include "ekfloc/world.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace ekfloc {
namespace {

/// Distance along the ray (origin o, unit direction d) to segment a-b, or
/// +inf when they do not intersect.
double ray_segment_distance(const Eigen::Vector2d& o, const Eigen::Vector2d& d,
                            const Eigen::Vector2d& a,
                            const Eigen::Vector2d& b) {
  const Eigen::Vector2d e = b - a;
  const double denom = d.x() * e.y() - d.y() * e.x();
  if (std::abs(denom) < 1e-15) {
    return std::numeric_limits<double>::infinity();  // parallel or degenerate
  }
  const Eigen::Vector2d ao = a - o;
  const double t = (ao.x() * e.y() - ao.y() * e.x()) / denom;
  const double u = (ao.x() * d.y() - ao.y() * d.x()) / denom;
  if (t <= 1e-12 || u < -1e-12 || u > 1.0 + 1e-12) {
    return std::numeric_limits<double>::infinity();
  }
  return t;
}

}  // namespace

void World::validate() const {
  if (walls.size() < 3) {
    throw std::invalid_argument("world: needs at least 3 walls");
  }
  for (const LineNF& wall : walls) {
    if (wall.rho < 0.0) throw std::invalid_argument("world: wall rho < 0");
    for (const Eigen::Vector2d& p : {wall.seg_start, wall.seg_end}) {
      const double residual = std::abs(p.x() * std::cos(wall.beta) +
                                       p.y() * std::sin(wall.beta) - wall.rho);
      if (residual > 1e-9) {
        throw std::invalid_argument("world: segment endpoint off its line");
      }
    }
  }
}

std::array<double, 4> World::bounds() const {
  double xmin = std::numeric_limits<double>::infinity();
  double ymin = xmin;
  double xmax = -xmin;
  double ymax = -xmin;
  for (const LineNF& wall : walls) {
    for (const Eigen::Vector2d& p : {wall.seg_start, wall.seg_end}) {
      xmin = std::min(xmin, p.x());
      ymin = std::min(ymin, p.y());
      xmax = std::max(xmax, p.x());
      ymax = std::max(ymax, p.y());
    }
  }
  return {xmin, ymin, xmax, ymax};
}

bool World::contains(const Eigen::Vector2d& p) const {
  const auto [xmin, ymin, xmax, ymax] = bounds();
  return p.x() > xmin && p.x() < xmax && p.y() > ymin && p.y() < ymax;
}

World make_rectangle_room(double width, double height) {
  if (!(width > 0.0) || !(height > 0.0)) {
    throw std::invalid_argument("room dimensions must be positive");
  }
  World world;
  const Eigen::Vector2d c00(0, 0), c10(width, 0), c11(width, height),
      c01(0, height);
  world.walls.push_back(line_through_points(c00, c10));  // south
  world.walls.push_back(line_through_points(c10, c11));  // east
  world.walls.push_back(line_through_points(c11, c01));  // north
  world.walls.push_back(line_through_points(c01, c00));  // west
  world.validate();
  return world;
}

World make_plate_room(double width, double height, double plate_len,
                      double gap_len) {
  if (!(width > 0.0) || !(height > 0.0) || !(plate_len > 0.0) ||
      gap_len < 0.0) {
    throw std::invalid_argument("bad plate room parameters");
  }
  World world;
  // each side carries a centered run of plates; corners stay open
  auto emit_side = [&](const Eigen::Vector2d& from, const Eigen::Vector2d& to) {
    const double len = (from - to).norm();
    const Eigen::Vector2d dir = (to - from) / len;
    const int count = std::max(
        1, static_cast<int>(
               std::floor((len + gap_len) / (plate_len + gap_len) + 1e-9)));
    const double used = count * plate_len + (count - 1) * gap_len;
    double s = 0.5 * (len - used);
    for (int i = 0; i < count; ++i) {
      const double a = std::max(0.0, s);
      const double b = std::min(len, s + plate_len);
      if (b - a > 0.05) {
        world.walls.push_back(
            line_through_points(from + a * dir, from + b * dir));
      }
      s += plate_len + gap_len;
    }
  };
  const Eigen::Vector2d c00(0, 0), c10(width, 0), c11(width, height),
      c01(0, height);
  emit_side(c00, c10);  // south
  emit_side(c10, c11);  // east
  emit_side(c11, c01);  // north
  emit_side(c01, c00);  // west
  world.validate();
  return world;
}

Scan raycast(const World& world, const Pose& pose, const LrfConfig& lrf,
             double range_sigma, Rng* rng, double bearing_sigma) {
  const Eigen::Vector2d origin(pose.x, pose.y);
  if (!world.contains(origin)) {
    throw std::invalid_argument("raycast: pose outside the world");
  }
  if (!(lrf.angular_step > 0.0) || lrf.fov > kPi + 1e-12) {
    throw std::invalid_argument("raycast: bad LRF parameters");
  }
  const bool noisy = rng != nullptr && range_sigma > 0.0;
  (void)bearing_sigma;  // datasheet figure; it enters the filter's R floor

  const int n =
      static_cast<int>(std::floor(lrf.fov / lrf.angular_step + 1e-9)) + 1;
  Scan scan;
  scan.max_range = lrf.max_range;
  scan.bearings.reserve(n);
  scan.ranges.reserve(n);
  scan.valid.reserve(n);

  for (int i = 0; i < n; ++i) {
    const double bearing = -0.5 * lrf.fov + i * lrf.angular_step;
    const double heading = pose.theta + bearing;
    const Eigen::Vector2d dir(std::cos(heading), std::sin(heading));

    double range = std::numeric_limits<double>::infinity();
    for (const LineNF& wall : world.walls) {
      range = std::min(range, ray_segment_distance(origin, dir, wall.seg_start,
                                                   wall.seg_end));
    }
    if (noisy && std::isfinite(range)) {
      if (range_sigma > 0.0) range += rng->gaussian(range_sigma);
      range = std::round(range * 1000.0) / 1000.0;  // 1 mm quantization
    }

    const bool ok = std::isfinite(range) && range > 0.0 &&
                    range <= lrf.max_range;
    scan.bearings.push_back(bearing);
    scan.ranges.push_back(ok ? range
                             : std::numeric_limits<double>::quiet_NaN());
    scan.valid.push_back(ok);
  }
  return scan;
}

}  // namespace ekfloc
