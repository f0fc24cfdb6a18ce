#ifndef EKFLOC_ASSOCIATION_HPP_
#define EKFLOC_ASSOCIATION_HPP_

#include <cstddef>
#include <vector>

#include "ekfloc/line.hpp"

namespace ekfloc {

/// Chi-square 99% quantile with 2 dof, the default association gate.
inline constexpr double kDefaultGate = 9.21;

/// A map line expressed in the robot frame at the prior state, with the
/// state-uncertainty part of its innovation covariance (H P- H^T).
struct PredictedLine {
  double r_hat = 0.0;
  double psi_hat = 0.0;
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
};

struct Association {
  struct Pair {
    std::size_t local_index;
    std::size_t global_index;
    double mahalanobis_sq;
  };
  std::vector<Pair> pairs;
};

/// Greedy one-to-one assignment by ascending Mahalanobis distance in the
/// (r, psi) innovation space; psi innovations are angle-wrapped. The pairwise
/// innovation covariance is prediction.cov + local.cov. Ties break toward the
/// lower local index, then lower global index.
Association match_lines(const std::vector<LocalLine>& locals,
                        const std::vector<PredictedLine>& predictions,
                        double gate = kDefaultGate);

}  // namespace ekfloc

#endif  // EKFLOC_ASSOCIATION_HPP_
