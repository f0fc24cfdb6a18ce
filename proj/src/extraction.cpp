#include "ekfloc/extraction.hpp"

#include <cmath>

#include "ekfloc/angles.hpp"

namespace ekfloc {
namespace {

struct Sample {
  std::size_t src;  // index into the source scan
  Eigen::Vector2d p;
  Eigen::Vector2d beam;  // unit vector from the robot to the point
};

std::vector<std::vector<Sample>> cluster_samples(
    const Scan& scan, const ExtractionParams& params) {
  std::vector<std::vector<Sample>> clusters;
  std::vector<Sample> current;
  for (std::size_t i = 0; i < scan.size(); ++i) {
    if (!scan.valid[i]) {
      if (!current.empty()) clusters.push_back(std::move(current));
      current.clear();
      continue;
    }
    const Eigen::Vector2d p = scan.point(i);
    if (!current.empty() &&
        (p - current.back().p).norm() > params.max_point_gap) {
      clusters.push_back(std::move(current));
      current.clear();
    }
    current.push_back({i, p, p.normalized()});
  }
  if (!current.empty()) clusters.push_back(std::move(current));
  return clusters;
}

LineFit fit_samples(const Sample* s, std::size_t n,
                    const ExtractionParams& params) {
  LineFit fit;
  if (n < 2) return fit;

  const double sigma = params.range_sigma;
  const double w = 1.0;  // uniform sensor noise, weights cancel in the fit

  double sw = 0.0;
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    mean += w * s[i].p;
    sw += w;
  }
  mean /= sw;

  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector2d d = s[i].p - mean;
    sxx += w * d.x() * d.x();
    syy += w * d.y() * d.y();
    sxy += w * d.x() * d.y();
  }

  const double num = -2.0 * sxy;
  const double den = syy - sxx;
  if (num == 0.0 && den == 0.0) return fit;  // isotropic spread, no direction

  // psi0 minimizes the weighted orthogonal error; the canonical form flips
  // (r0, psi0) -> (-r0, psi0 + pi) when r0 comes out negative.
  const double psi0 = 0.5 * std::atan2(num, den);
  const double c0 = std::cos(psi0);
  const double s0 = std::sin(psi0);
  const double r0 = mean.x() * c0 + mean.y() * s0;
  const double flip = r0 < 0.0 ? -1.0 : 1.0;
  const double r = flip * r0;
  const double psi = flip > 0.0 ? psi0 : wrap_angle(psi0 + kPi);
  const double c = std::cos(psi);
  const double sn = std::sin(psi);

  // First-order propagation of range noise through the estimator:
  //   dpsi0/dp_i = w * (N*dx - D*dy, -(D*dx + N*dy)) / (N^2 + D^2)
  //   dr0/dp_i   = (w/W) * n(psi0) + t0 * dpsi0/dp_i,  t0 = dr0/dpsi0
  // chained onto dp_i/drho_i = beam direction. The flip negates dr0 and
  // leaves dpsi0 unchanged.
  const double t0 = mean.y() * c0 - mean.x() * s0;
  const double m2 = num * num + den * den;

  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  double ss_res = 0.0;
  double ss_pred = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector2d d = s[i].p - mean;
    const double dpsi_dx = w * (num * d.x() - den * d.y()) / m2;
    const double dpsi_dy = -w * (den * d.x() + num * d.y()) / m2;
    const double dr0_dx = (w / sw) * c0 + t0 * dpsi_dx;
    const double dr0_dy = (w / sw) * s0 + t0 * dpsi_dy;
    const double dr_drho =
        flip * (dr0_dx * s[i].beam.x() + dr0_dy * s[i].beam.y());
    const double dpsi_drho =
        dpsi_dx * s[i].beam.x() + dpsi_dy * s[i].beam.y();
    const Eigen::Vector2d j(dr_drho, dpsi_drho);
    cov += sigma * sigma * j * j.transpose();

    const double e = s[i].p.x() * c + s[i].p.y() * sn - r;
    ss_res += w * e * e;
    const double cos_inc = s[i].beam.x() * c + s[i].beam.y() * sn;
    ss_pred += w * sigma * sigma * cos_inc * cos_inc;
  }

  fit.r = r;
  fit.psi = psi;
  fit.cov = cov;
  fit.rms = std::sqrt(ss_res / sw);
  // the residual sum fluctuates like chi-square around its prediction, so
  // short segments get a sampling allowance before excess is declared
  const double dof = static_cast<double>(n > 2 ? n - 2 : 1);
  const double allowance = 1.0 + 3.0 * std::sqrt(2.0 / dof);
  fit.excess_rms =
      std::sqrt(std::max(0.0, (ss_res - ss_pred * allowance) / sw));
  fit.ok = true;
  return fit;
}

double point_chord_distance(const Eigen::Vector2d& p, const Eigen::Vector2d& a,
                            const Eigen::Vector2d& b) {
  const Eigen::Vector2d d = b - a;
  const double len = d.norm();
  if (len == 0.0) return (p - a).norm();
  return std::abs(d.x() * (a.y() - p.y()) - d.y() * (a.x() - p.x())) / len;
}

void split_recursive(const std::vector<Sample>& pts, std::size_t first,
                     std::size_t last, double threshold,
                     const ExtractionParams& params,
                     std::vector<std::pair<std::size_t, std::size_t>>& out) {
  const std::size_t n = last - first + 1;
  if (n < static_cast<std::size_t>(params.min_points)) return;

  double max_dev = 0.0;
  std::size_t split_at = first;
  for (std::size_t i = first + 1; i < last; ++i) {
    const double dev =
        point_chord_distance(pts[i].p, pts[first].p, pts[last].p);
    if (dev > max_dev) {
      max_dev = dev;
      split_at = i;
    }
  }
  if (max_dev > threshold) {
    split_recursive(pts, first, split_at, threshold, params, out);
    split_recursive(pts, split_at + 1, last, threshold, params, out);
    return;
  }
  out.emplace_back(first, last);
}

struct Segment {
  std::size_t first;  // positions within the cluster
  std::size_t last;
  LineFit fit;
};

double orthogonal_residual(const Sample& s, const LineFit& fit) {
  return std::abs(s.p.x() * std::cos(fit.psi) + s.p.y() * std::sin(fit.psi) -
                  fit.r);
}

/// Fit [first, last], then shave end points whose residual exceeds the trim
/// gate and refit until stable. Splitting alone leaves a few returns from
/// past a corner glued to the neighboring wall; those stubs sit at segment
/// ends and are what this removes.
bool fit_segment_trimmed(const std::vector<Sample>& pts, std::size_t first,
                         std::size_t last, const ExtractionParams& params,
                         Segment& out) {
  const double gate = std::max(3.0 * params.range_sigma, 1e-7);
  for (int pass = 0; pass < 16; ++pass) {
    if (last + 1 - first < static_cast<std::size_t>(params.min_points)) {
      return false;
    }
    const LineFit fit =
        fit_samples(pts.data() + first, last - first + 1, params);
    if (!fit.ok) return false;

    std::size_t new_first = first;
    std::size_t new_last = last;
    while (new_first <= new_last &&
           orthogonal_residual(pts[new_first], fit) > gate) {
      ++new_first;
    }
    while (new_last > new_first &&
           orthogonal_residual(pts[new_last], fit) > gate) {
      --new_last;
    }
    if (new_first == first && new_last == last) {
      out = {first, last, fit};
      return true;
    }
    first = new_first;
    last = new_last;
  }
  return false;
}

bool try_merge(const std::vector<Sample>& pts, const Segment& a,
               const Segment& b, const ExtractionParams& params,
               Segment& merged) {
  const Eigen::Vector2d diff(a.fit.r - b.fit.r,
                             angle_diff(a.fit.psi, b.fit.psi));
  const Eigen::Matrix2d s = a.fit.cov + b.fit.cov;
  bool compatible;
  if (s.determinant() > 1e-30) {
    compatible = diff.dot(s.inverse() * diff) <= params.merge_chi2;
  } else {
    // zero-noise fits carry zero covariance; merge only exact agreement
    compatible = std::abs(diff.x()) <= 1e-9 && std::abs(diff.y()) <= 1e-9;
  }
  if (!compatible) return false;

  Segment candidate;
  if (!fit_segment_trimmed(pts, a.first, b.last, params, candidate)) {
    return false;
  }
  if (candidate.fit.excess_rms > params.max_residual) return false;
  merged = candidate;
  return true;
}

}  // namespace

LineFit fit_line_segment(const Scan& scan, std::size_t first, std::size_t last,
                         const ExtractionParams& params) {
  std::vector<Sample> pts;
  for (std::size_t i = first; i <= last && i < scan.size(); ++i) {
    if (!scan.valid[i]) continue;
    const Eigen::Vector2d p = scan.point(i);
    pts.push_back({i, p, p.normalized()});
  }
  return fit_samples(pts.data(), pts.size(), params);
}

std::vector<LocalLine> extract_lines(const Scan& scan,
                                     const ExtractionParams& params) {
  scan.validate();
  std::vector<LocalLine> lines;
  const double threshold =
      std::max(params.split_threshold, 4.0 * params.range_sigma);

  for (const auto& cluster : cluster_samples(scan, params)) {
    if (cluster.size() < static_cast<std::size_t>(params.min_points)) continue;

    std::vector<std::pair<std::size_t, std::size_t>> spans;
    split_recursive(cluster, 0, cluster.size() - 1, threshold, params, spans);

    std::vector<Segment> segments;
    for (const auto& [first, last] : spans) {
      Segment seg;
      if (fit_segment_trimmed(cluster, first, last, params, seg)) {
        segments.push_back(seg);
      }
    }

    // merge adjacent statistically-compatible segments until stable
    bool changed = true;
    while (changed) {
      changed = false;
      for (std::size_t i = 0; i + 1 < segments.size(); ++i) {
        Segment merged;
        if (try_merge(cluster, segments[i], segments[i + 1], params, merged)) {
          segments[i] = merged;
          segments.erase(segments.begin() + i + 1);
          changed = true;
          break;
        }
      }
    }

    for (const auto& seg : segments) {
      const int support = static_cast<int>(seg.last - seg.first + 1);
      if (support < params.min_points) continue;
      if (seg.fit.excess_rms > params.max_residual) continue;
      LocalLine line;
      line.r = seg.fit.r;
      line.psi = seg.fit.psi;
      line.cov = seg.fit.cov;
      line.support_count = support;
      line.point_span = {cluster[seg.first].src, cluster[seg.last].src};
      lines.push_back(line);
    }
  }
  return lines;
}

}  // namespace ekfloc
