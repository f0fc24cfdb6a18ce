#include <doctest.h>

#include <algorithm>
#include <random>

#include "ekfloc/angles.hpp"
#include "ekfloc/association.hpp"
#include "ekfloc/errors.hpp"
#include "ekfloc/extraction.hpp"
#include "ekfloc/line.hpp"
#include "ekfloc/world.hpp"
#include "oracles.hpp"

using namespace ekfloc;
using namespace ekfloc::testing;

TEST_CASE("normalize_line canonicalizes sign and wraps the angle") {
  auto [r1, b1] = normalize_line(3.0, 0.0);
  CHECK(r1 == 3.0);
  CHECK(b1 == 0.0);

  auto [r2, b2] = normalize_line(-3.0, 0.0);
  CHECK(r2 == 3.0);
  CHECK(b2 == doctest::Approx(kPi));

  auto [r3, b3] = normalize_line(2.0, 3.0 * kPi);
  CHECK(r3 == 2.0);
  CHECK(b3 == doctest::Approx(kPi));

  CHECK_THROWS_AS(normalize_line(std::nan(""), 0.0), std::invalid_argument);

  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  for (int i = 0; i < 500; ++i) {
    auto once = normalize_line(u(rng), u(rng));
    auto twice = normalize_line(once.first, once.second);
    CHECK(once.first == twice.first);
    CHECK(once.second == twice.second);
  }
}

TEST_CASE("line_to_robot_frame evaluates the normal-form transform") {
  const LineNF wall{5.0, 0.0, {5, -10}, {5, 10}};
  SUBCASE("robot on the origin side") {
    const RobotFrameLine rf = line_to_robot_frame(wall, {2, 0, 0});
    CHECK(rf.c == doctest::Approx(3.0));
    CHECK(rf.r_hat == doctest::Approx(3.0));
    CHECK(rf.psi_hat == doctest::Approx(kPi / 2));
    CHECK(rf.theta_hat == doctest::Approx(0.0));
  }
  SUBCASE("robot past the line wraps psi") {
    const RobotFrameLine rf = line_to_robot_frame(wall, {6, 0, 0});
    CHECK(rf.c == doctest::Approx(-1.0));
    CHECK(rf.r_hat == doctest::Approx(1.0));
    CHECK(rf.psi_hat == doctest::Approx(-kPi / 2));
  }
  SUBCASE("heading rotates psi") {
    const RobotFrameLine rf = line_to_robot_frame(wall, {0, 0, kPi / 2});
    CHECK(rf.c == doctest::Approx(5.0));
    CHECK(rf.r_hat == doctest::Approx(5.0));
    CHECK(rf.psi_hat == doctest::Approx(0.0));
  }
  SUBCASE("robot on the line is degenerate") {
    CHECK_THROWS_AS(line_to_robot_frame(wall, {5, 1, 0}),
                    DegenerateGeometryError);
  }
}

TEST_CASE("robot-frame parameters round-trip back to the global frame") {
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> u(-8.0, 8.0);
  std::uniform_real_distribution<double> rho_d(0.1, 10.0);
  int tested = 0;
  while (tested < 1000) {
    const LineNF line{rho_d(rng), wrap_angle(u(rng)), {0, 0}, {0, 0}};
    const Pose pose{u(rng), u(rng), wrap_angle(u(rng))};
    RobotFrameLine rf;
    try {
      rf = line_to_robot_frame(line, pose);
    } catch (const DegenerateGeometryError&) {
      continue;
    }
    auto [rho, beta] = line_to_global_frame(rf.r_hat, rf.psi_hat, pose);
    CHECK(std::abs(rho - line.rho) < 1e-9);
    CHECK(std::abs(angle_diff(beta, line.beta)) < 1e-9);
    ++tested;
  }
}

TEST_CASE("scan points put the forward axis on +y") {
  Scan scan;
  scan.bearings = {0.0};
  scan.ranges = {3.0};
  scan.valid = {true};
  const Eigen::Vector2d p = scan.point(0);
  CHECK(p.x() == doctest::Approx(0.0));
  CHECK(p.y() == doctest::Approx(3.0));
}

TEST_CASE("scan validation rejects malformed sweeps") {
  Scan scan;
  scan.max_range = 10.0;
  scan.bearings = {0.0, 0.1};
  scan.ranges = {1.0, 2.0};
  scan.valid = {true, true};
  CHECK_NOTHROW(scan.validate());

  Scan reversed = scan;
  std::swap(reversed.bearings[0], reversed.bearings[1]);
  CHECK_THROWS_AS(reversed.validate(), std::invalid_argument);

  Scan zero_range = scan;
  zero_range.ranges[0] = 0.0;
  CHECK_THROWS_AS(zero_range.validate(), std::invalid_argument);

  Scan far = scan;
  far.ranges[1] = 11.0;
  CHECK_THROWS_AS(far.validate(), std::invalid_argument);

  Scan bad_len = scan;
  bad_len.ranges.pop_back();
  CHECK_THROWS_AS(bad_len.validate(), std::invalid_argument);
}

namespace {

ExtractionParams noiseless_params() {
  ExtractionParams params;
  params.range_sigma = 0.0;
  return params;
}

/// Synthetic noiseless scan of the wall y_R = 2 over x_R in [0, 1].
Scan wall_ahead_scan(int n = 40) {
  Scan scan;
  scan.max_range = 20.0;
  for (int i = 0; i < n; ++i) {
    // x_R = -2 tan(b) covers [0, 1] for b in [-atan(1/2), 0]
    const double b = -std::atan(0.5) + i * (std::atan(0.5) / (n - 1));
    scan.bearings.push_back(b);
    scan.ranges.push_back(2.0 / std::cos(b));
    scan.valid.push_back(true);
  }
  return scan;
}

}  // namespace

TEST_CASE("extract_lines fits exact collinear points") {
  const std::vector<LocalLine> lines =
      extract_lines(wall_ahead_scan(), noiseless_params());
  REQUIRE(lines.size() == 1);
  CHECK(lines[0].r == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(lines[0].psi == doctest::Approx(kPi / 2).epsilon(1e-9));
  CHECK(lines[0].cov.norm() == doctest::Approx(0.0));
  CHECK(lines[0].support_count >= 40);
}

TEST_CASE("extract_lines on an empty or sparse scan returns nothing") {
  CHECK(extract_lines(Scan{}, noiseless_params()).empty());

  Scan sparse;
  sparse.max_range = 20.0;
  for (int i = 0; i < 4; ++i) {
    sparse.bearings.push_back(-0.1 + 0.05 * i);
    sparse.ranges.push_back(2.0);
    sparse.valid.push_back(true);
  }
  CHECK(extract_lines(sparse, noiseless_params()).empty());
}

TEST_CASE("extraction from a raycast room matches the analytic walls") {
  const World room = make_rectangle_room(8.0, 6.0);
  const Pose center{4.0, 3.0, 0.0};
  const Scan scan = raycast(room, center, LrfConfig{});
  const std::vector<LocalLine> lines =
      extract_lines(scan, noiseless_params());

  REQUIRE(lines.size() >= 2);
  REQUIRE(lines.size() <= 4);
  for (const LocalLine& line : lines) {
    bool matched = false;
    for (const LineNF& wall : room.walls) {
      const RobotFrameLine rf = line_to_robot_frame(wall, center);
      if (std::abs(rf.r_hat - line.r) < 1e-6 &&
          std::abs(angle_diff(rf.psi_hat, line.psi)) < 1e-6) {
        matched = true;
        break;
      }
    }
    CHECK(matched);
  }
}

TEST_CASE("noiseless extraction matches walls of a convex polygon room") {
  World room;
  const std::vector<Eigen::Vector2d> hull = {
      {0, 0}, {7, 0}, {9, 4}, {4, 7}, {-1, 3}};
  for (std::size_t i = 0; i < hull.size(); ++i) {
    room.walls.push_back(
        line_through_points(hull[i], hull[(i + 1) % hull.size()]));
  }
  room.validate();

  std::mt19937 rng(23);
  std::uniform_real_distribution<double> ux(1.0, 6.0);
  std::uniform_real_distribution<double> uy(1.0, 3.0);
  std::uniform_real_distribution<double> ut(-kPi, kPi);
  for (int trial = 0; trial < 20; ++trial) {
    const Pose pose{ux(rng), uy(rng), wrap_angle(ut(rng))};
    const Scan scan = raycast(room, pose, LrfConfig{});
    for (const LocalLine& line : extract_lines(scan, noiseless_params())) {
      bool matched = false;
      for (const LineNF& wall : room.walls) {
        const RobotFrameLine rf = line_to_robot_frame(wall, pose);
        if (std::abs(rf.r_hat - line.r) < 1e-6 &&
            std::abs(angle_diff(rf.psi_hat, line.psi)) < 1e-6) {
          matched = true;
          break;
        }
      }
      CHECK(matched);
    }
  }
}

TEST_CASE("fit covariance agrees with finite differences of the fit") {
  // perturb one range at a time and refit; the analytic jacobian inside the
  // covariance must match the numerical one
  ExtractionParams params;
  params.range_sigma = 0.02;

  Scan scan;
  scan.max_range = 30.0;
  const int n = 25;
  for (int i = 0; i < n; ++i) {
    const double b = -0.5 + i * (1.0 / (n - 1));
    scan.bearings.push_back(b);
    // a slanted wall, not axis aligned
    const Eigen::Vector2d dir(-std::sin(b), std::cos(b));
    // line: x cos(0.7) + y sin(0.7) = 2.4 in the robot frame
    const Eigen::Vector2d normal(std::cos(0.7), std::sin(0.7));
    scan.ranges.push_back(2.4 / dir.dot(normal));
    scan.valid.push_back(true);
  }

  const LineFit base = fit_line_segment(scan, 0, n - 1, params);
  REQUIRE(base.ok);

  Eigen::Matrix2d cov_fd = Eigen::Matrix2d::Zero();
  const double h = 1e-7;
  for (int i = 0; i < n; ++i) {
    Scan plus = scan;
    Scan minus = scan;
    plus.ranges[i] += h;
    minus.ranges[i] -= h;
    const LineFit fp = fit_line_segment(plus, 0, n - 1, params);
    const LineFit fm = fit_line_segment(minus, 0, n - 1, params);
    const Eigen::Vector2d j((fp.r - fm.r) / (2 * h),
                            angle_diff(fp.psi, fm.psi) / (2 * h));
    cov_fd += params.range_sigma * params.range_sigma * j * j.transpose();
  }
  CHECK((base.cov - cov_fd).norm() < 1e-6 * std::max(1.0, cov_fd.norm()));
}

TEST_CASE("match_lines gates and assigns one-to-one") {
  SUBCASE("close pair matches with the hand-computed distance") {
    LocalLine local;
    local.r = 3.01;
    local.psi = 1.573;
    const PredictedLine pred{
        3.0, kPi / 2,
        Eigen::Vector2d(1e-4, 2.5e-5).asDiagonal().toDenseMatrix()};
    const Association assoc = match_lines({local}, {pred}, 9.0);
    REQUIRE(assoc.pairs.size() == 1);
    CHECK(assoc.pairs[0].mahalanobis_sq ==
          doctest::Approx(1.1942470237743758).epsilon(1e-9));
  }
  SUBCASE("distant pair stays unmatched") {
    LocalLine local;
    local.r = 3.0;
    local.psi = kPi / 2;
    const PredictedLine pred{
        7.0, kPi / 2,
        Eigen::Vector2d(1e-4, 2.5e-5).asDiagonal().toDenseMatrix()};
    CHECK(match_lines({local}, {pred}, 9.0).pairs.empty());
  }
  SUBCASE("empty locals give an empty association") {
    const PredictedLine pred{3.0, 0.0, Eigen::Matrix2d::Identity()};
    CHECK(match_lines({}, {pred}, 9.0).pairs.empty());
  }
}

TEST_CASE("match_lines is invariant under permutations of the locals") {
  std::mt19937 rng(31);
  std::uniform_real_distribution<double> ur(1.0, 9.0);
  std::uniform_real_distribution<double> up(-kPi, kPi);

  for (int trial = 0; trial < 50; ++trial) {
    std::vector<PredictedLine> preds;
    for (int j = 0; j < 5; ++j) {
      preds.push_back({ur(rng), wrap_angle(up(rng)),
                       Eigen::Vector2d(4e-4, 1e-4).asDiagonal().toDenseMatrix()});
    }
    std::vector<LocalLine> locals;
    for (int i = 0; i < 5; ++i) {
      LocalLine l;
      l.r = preds[static_cast<std::size_t>(i)].r_hat + 0.01 * up(rng);
      l.psi = wrap_angle(preds[static_cast<std::size_t>(i)].psi_hat +
                         0.002 * up(rng));
      l.cov = Eigen::Vector2d(1e-4, 2.5e-5).asDiagonal();
      locals.push_back(l);
    }

    const Association base = match_lines(locals, preds);

    std::vector<std::size_t> perm(locals.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<LocalLine> shuffled;
    for (std::size_t i : perm) shuffled.push_back(locals[i]);

    const Association permuted = match_lines(shuffled, preds);
    REQUIRE(permuted.pairs.size() == base.pairs.size());

    // compare as sets of (original local, global) pairs
    auto as_pairs = [&](const Association& a, bool mapped) {
      std::vector<std::pair<std::size_t, std::size_t>> out;
      for (const auto& p : a.pairs) {
        out.emplace_back(mapped ? perm[p.local_index] : p.local_index,
                         p.global_index);
      }
      std::sort(out.begin(), out.end());
      return out;
    };
    CHECK(as_pairs(base, false) == as_pairs(permuted, true));
  }
}

TEST_CASE("line_param_distance treats the rho=0 flip as identical") {
  auto [dr, db] = line_param_distance(0.001, 0.002, 0.0015, kPi - 0.001);
  CHECK(dr < 0.003);
  CHECK(db < 0.004);
}
