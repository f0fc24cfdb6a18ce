#include "ekfloc/association.hpp"

#include <algorithm>
#include <cmath>

#include "ekfloc/angles.hpp"

namespace ekfloc {

Association match_lines(const std::vector<LocalLine>& locals,
                        const std::vector<PredictedLine>& predictions,
                        double gate) {
  struct Candidate {
    double d2;
    std::size_t local;
    std::size_t global;
  };
  std::vector<Candidate> candidates;

  for (std::size_t i = 0; i < locals.size(); ++i) {
    for (std::size_t j = 0; j < predictions.size(); ++j) {
      const Eigen::Vector2d innov(
          locals[i].r - predictions[j].r_hat,
          angle_diff(locals[i].psi, predictions[j].psi_hat));
      const Eigen::Matrix2d s = predictions[j].cov + locals[i].cov;
      if (!(s.determinant() > 0.0)) continue;
      const double d2 = innov.dot(s.inverse() * innov);
      if (d2 <= gate) candidates.push_back({d2, i, j});
    }
  }

  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate& a, const Candidate& b) {
              if (a.d2 != b.d2) return a.d2 < b.d2;
              if (a.local != b.local) return a.local < b.local;
              return a.global < b.global;
            });

  Association assoc;
  std::vector<bool> local_used(locals.size(), false);
  std::vector<bool> global_used(predictions.size(), false);
  for (const Candidate& c : candidates) {
    if (local_used[c.local] || global_used[c.global]) continue;
    local_used[c.local] = true;
    global_used[c.global] = true;
    assoc.pairs.push_back({c.local, c.global, c.d2});
  }
  return assoc;
}

}  // namespace ekfloc
