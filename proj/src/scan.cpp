#include "ekfloc/scan.hpp"

#include <cmath>
#include <stdexcept>

#include "ekfloc/angles.hpp"

namespace ekfloc {

void Scan::validate() const {
  if (ranges.size() != bearings.size() || valid.size() != bearings.size()) {
    throw std::invalid_argument("scan: field lengths differ");
  }
  const double half = kPi / 2.0 + 1e-12;
  for (std::size_t i = 0; i < bearings.size(); ++i) {
    if (!std::isfinite(bearings[i]) || std::abs(bearings[i]) > half) {
      throw std::invalid_argument("scan: bearing outside [-pi/2, pi/2]");
    }
    if (i > 0 && !(bearings[i] > bearings[i - 1])) {
      throw std::invalid_argument("scan: bearings not strictly increasing");
    }
    if (valid[i]) {
      if (!std::isfinite(ranges[i]) || ranges[i] <= 0.0 ||
          ranges[i] > max_range) {
        throw std::invalid_argument("scan: valid range outside (0, max_range]");
      }
    }
  }
}

Eigen::Vector2d Scan::point(std::size_t i) const {
  // forward axis -> +y_R, so a sample at bearing b sits at angle b + pi/2
  // from the +x_R axis.
  return {-ranges[i] * std::sin(bearings[i]),
          ranges[i] * std::cos(bearings[i])};
}

}  // namespace ekfloc
