#ifndef EKFLOC_EXTRACTION_HPP_
#define EKFLOC_EXTRACTION_HPP_

#include <vector>

#include "ekfloc/line.hpp"
#include "ekfloc/scan.hpp"

namespace ekfloc {

struct ExtractionParams {
  int min_points = 6;
  /// Orthogonal deviation from the segment chord that forces a split. At
  /// nonzero sensor noise the effective threshold grows to 4 sigma so that
  /// noise alone does not shred straight walls.
  double split_threshold = 0.03;  // m
  /// Gate on the residual RMS in excess of what the range noise predicts;
  /// at zero noise this is a plain RMS gate.
  double max_residual = 0.02;  // m
  /// Chi-square acceptance (2 dof, 95%) for merging adjacent segments.
  double merge_chi2 = 5.991;
  /// 1-sigma per-point range noise; drives weights and the fit covariance.
  double range_sigma = 0.03;  // m
  /// Euclidean gap between neighboring returns that breaks a cluster.
  double max_point_gap = 0.5;  // m
};

/// Weighted total-least-squares line fit of scan points, with the (r, psi)
/// covariance from first-order propagation of the per-point range noise.
struct LineFit {
  double r = 0.0;
  double psi = 0.0;
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  double rms = 0.0;         // weighted orthogonal residual RMS
  double excess_rms = 0.0;  // residual RMS beyond the predicted noise level
  bool ok = false;
};

/// Fit one line to the scan samples with source indices [first, last]
/// (inclusive), skipping invalid samples. Exposed for tests and map building.
LineFit fit_line_segment(const Scan& scan, std::size_t first, std::size_t last,
                         const ExtractionParams& params);

/// Split-and-merge line extraction over one scan. Returns robot-frame lines;
/// fewer than min_points valid returns yields an empty list.
std::vector<LocalLine> extract_lines(const Scan& scan,
                                     const ExtractionParams& params);

}  // namespace ekfloc

#endif  // EKFLOC_EXTRACTION_HPP_
