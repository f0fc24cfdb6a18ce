#include <doctest.h>

#include <random>

#include "ekfloc/angles.hpp"
#include "ekfloc/ekf.hpp"
#include "ekfloc/errors.hpp"
#include "ekfloc/world.hpp"
#include "oracles.hpp"

using namespace ekfloc;
using namespace ekfloc::testing;

namespace {

const RobotGeometry kGeom{0.05, 0.6};
constexpr double kDt = 0.1;

Eigen::Matrix3d random_psd(std::mt19937& rng, double scale) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::Matrix3d a;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) a(r, c) = u(rng);
  }
  return scale * a * a.transpose();
}

MeasurementBundle random_bundle(std::mt19937& rng) {
  std::uniform_int_distribution<int> nlines(0, 2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int lines = nlines(rng);
  const Eigen::Index rows = 2 * lines + 1;

  MeasurementBundle b;
  b.h = Eigen::MatrixXd::Zero(rows, 3);
  b.r = Eigen::MatrixXd::Zero(rows, rows);
  b.z_hat = Eigen::VectorXd::Zero(rows);
  b.z = Eigen::VectorXd::Zero(rows);
  b.angular.assign(static_cast<std::size_t>(rows), false);
  for (Eigen::Index row = 0; row < rows; ++row) {
    for (int c = 0; c < 3; ++c) b.h(row, c) = u(rng);
    b.r(row, row) = 1e-4 + std::abs(u(rng)) * 1e-2;
    b.z_hat(row) = u(rng);
    b.z(row) = b.z_hat(row) + 0.05 * u(rng);
  }
  return b;
}

}  // namespace

TEST_CASE("input noise covariance scales with squared wheel rates") {
  CHECK(input_noise_cov({0, 0}, 0.01).norm() == doctest::Approx(0.0));

  const Eigen::Matrix2d q1 = input_noise_cov({2, 2}, 0.01);
  CHECK(q1(0, 0) == doctest::Approx(0.04));
  CHECK(q1(1, 1) == doctest::Approx(0.04));
  CHECK(q1(0, 1) == 0.0);

  // ordered (right, left)
  const Eigen::Matrix2d q2 = input_noise_cov({3, 1}, 0.01);
  CHECK(q2(0, 0) == doctest::Approx(0.01));
  CHECK(q2(1, 1) == doctest::Approx(0.09));

  CHECK_THROWS_AS(input_noise_cov({1, 1}, -0.1), std::invalid_argument);
}

TEST_CASE("predict propagates mean and covariance") {
  NoiseConfig noise;
  noise.delta = 0.01;

  SUBCASE("zero rates leave the state untouched") {
    StateEstimate s;
    s.mean = {1.0, -2.0, 0.5};
    std::mt19937 rng(2);
    s.cov = random_psd(rng, 0.1);
    const StateEstimate out = predict(s, {0, 0}, kGeom, kDt, noise);
    CHECK(out.mean.x == s.mean.x);
    CHECK(out.mean.y == s.mean.y);
    CHECK(out.mean.theta == s.mean.theta);
    CHECK((out.cov - s.cov).norm() < 1e-15);
  }

  SUBCASE("straight motion from certainty leaves W Q W^T") {
    StateEstimate s;  // exact state at the origin
    const StateEstimate out = predict(s, {2, 2}, kGeom, kDt, noise);
    CHECK(out.mean.x == doctest::Approx(0.01));
    CHECK(out.mean.y == doctest::Approx(0.0));
    CHECK(out.mean.theta == doctest::Approx(0.0));

    // hand-multiplied W diag(0.04, 0.04) W^T
    CHECK(out.cov(0, 0) == doctest::Approx(5.0e-7).epsilon(1e-9));
    CHECK(out.cov(1, 1) == doctest::Approx(1.38889e-10).epsilon(1e-5));
    CHECK(out.cov(2, 2) == doctest::Approx(5.55556e-6).epsilon(1e-5));
    CHECK(out.cov(1, 2) == doctest::Approx(2.77778e-8).epsilon(1e-5));
    CHECK(out.cov(0, 1) == doctest::Approx(0.0));
    CHECK(out.cov(0, 2) == doctest::Approx(0.0));

    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(out.cov);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-12);  // PSD, rank <= 2
    CHECK(eig.eigenvalues()(0) == doctest::Approx(0.0));
  }

  SUBCASE("random steps keep P symmetric PSD") {
    std::mt19937 rng(9);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    StateEstimate s;
    s.cov = random_psd(rng, 0.01);
    for (int i = 0; i < 10000; ++i) {
      const WheelRates rates{10.0 * u(rng), 10.0 * u(rng)};
      s = predict(s, rates, kGeom, kDt, noise);
      REQUIRE((s.cov - s.cov.transpose()).lpNorm<Eigen::Infinity>() <= 1e-9);
      const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(s.cov);
      REQUIRE(eig.eigenvalues().minCoeff() >= -1e-12);
    }
  }
}

TEST_CASE("predict_measurements stacks line rows plus the compass row") {
  SUBCASE("no matches leaves only the compass row") {
    StateEstimate s;
    s.mean = {0, 0, 0.3};
    auto [z_hat, h] = predict_measurements(s, {}, {});
    REQUIRE(z_hat.size() == 1);
    CHECK(z_hat(0) == doctest::Approx(0.3));
    CHECK(h(0, 0) == 0.0);
    CHECK(h(0, 1) == 0.0);
    CHECK(h(0, 2) == 1.0);
  }

  SUBCASE("one matched line gives the hand-computed rows") {
    StateEstimate s;
    s.mean = {2, 0, 0};
    const std::vector<LineNF> map = {{5.0, 0.0, {5, -10}, {5, 10}}};
    Association assoc;
    assoc.pairs.push_back({0, 0, 0.0});
    auto [z_hat, h] = predict_measurements(s, map, assoc);
    REQUIRE(z_hat.size() == 3);
    CHECK(z_hat(0) == doctest::Approx(3.0));
    CHECK(z_hat(1) == doctest::Approx(kPi / 2));
    CHECK(z_hat(2) == doctest::Approx(0.0));
    Eigen::MatrixXd want(3, 3);
    want << -1, 0, 0, 0, 0, -1, 0, 0, 1;
    CHECK((h - want).norm() < 1e-12);
  }
}

TEST_CASE("measurement jacobian matches finite differences") {
  std::mt19937 rng(77);
  std::uniform_real_distribution<double> u(-8.0, 8.0);
  std::uniform_real_distribution<double> rho_d(0.1, 10.0);

  int tested = 0;
  while (tested < 1000) {
    const LineNF line{rho_d(rng), wrap_angle(u(rng)), {0, 0}, {0, 0}};
    const Pose pose{u(rng), u(rng), wrap_angle(u(rng))};
    const double c = line.rho - pose.x * std::cos(line.beta) -
                     pose.y * std::sin(line.beta);
    if (std::abs(c) < 0.05) continue;  // keep away from the sign flip

    StateEstimate s;
    s.mean = pose;
    Association assoc;
    assoc.pairs.push_back({0, 0, 0.0});
    auto [z_hat, h] = predict_measurements(s, {line}, assoc);
    const Eigen::Matrix3d fd = fd_measurement_jacobian(line, pose);

    for (int r = 0; r < 3; ++r) {
      for (int col = 0; col < 3; ++col) {
        REQUIRE(close_rel(fd(r, col), h(r, col)));
      }
    }
    ++tested;
  }
}

TEST_CASE("build_measurement_cov assembles the diagonal R") {
  LocalLine good;
  good.cov << 1e-4, 0, 0, 1e-5;

  SUBCASE("no lines: compass only") {
    auto [r, kept] = build_measurement_cov({}, {}, 3.0462e-6);
    REQUIRE(r.rows() == 1);
    CHECK(r(0, 0) == doctest::Approx(3.0462e-6));
    CHECK(kept.pairs.empty());
  }

  SUBCASE("one line plus compass") {
    Association assoc;
    assoc.pairs.push_back({0, 0, 1.0});
    auto [r, kept] = build_measurement_cov({good}, assoc, 3.046e-6);
    REQUIRE(r.rows() == 3);
    CHECK(r(0, 0) == doctest::Approx(1e-4));
    CHECK(r(1, 1) == doctest::Approx(1e-5));
    CHECK(r(2, 2) == doctest::Approx(3.046e-6));
    CHECK(r.diagonal().asDiagonal().toDenseMatrix() == r);
    CHECK(kept.pairs.size() == 1);
  }

  SUBCASE("two lines in ascending global order") {
    LocalLine second = good;
    second.cov *= 2.0;
    Association assoc;  // deliberately out of order
    assoc.pairs.push_back({0, 5, 1.0});
    assoc.pairs.push_back({1, 2, 1.0});
    auto [r, kept] = build_measurement_cov({good, second}, assoc, 1e-6);
    REQUIRE(r.rows() == 5);
    CHECK(r(0, 0) == doctest::Approx(2e-4));  // line with global index 2
    CHECK(r(2, 2) == doctest::Approx(1e-4));  // line with global index 5
    CHECK(r(4, 4) == doctest::Approx(1e-6));  // compass last
    CHECK(r.diagonal().asDiagonal().toDenseMatrix() == r);
    CHECK(kept.pairs[0].global_index == 2);
    CHECK(kept.pairs[1].global_index == 5);
  }

  SUBCASE("nonpositive variance drops the line and rebuilds R") {
    LocalLine bad;
    bad.cov.setZero();
    Association assoc;
    assoc.pairs.push_back({0, 0, 1.0});
    assoc.pairs.push_back({1, 1, 1.0});
    auto [r, kept] = build_measurement_cov({good, bad}, assoc, 1e-6);
    REQUIRE(kept.pairs.size() == 1);
    CHECK(kept.pairs[0].local_index == 0);
    CHECK(r.rows() == 3);
  }

  SUBCASE("compass variance must be positive") {
    CHECK_THROWS_AS(build_measurement_cov({}, {}, 0.0),
                    InvalidMeasurementError);
  }
}

TEST_CASE("update implements the correction step") {
  SUBCASE("scalar compass update, hand-computed gain") {
    StateEstimate s;
    s.cov = Eigen::Matrix3d::Identity();
    MeasurementBundle b;
    b.z = Eigen::VectorXd::Constant(1, 0.1);
    b.z_hat = Eigen::VectorXd::Zero(1);
    b.h = Eigen::MatrixXd::Zero(1, 3);
    b.h(0, 2) = 1.0;
    b.r = Eigen::MatrixXd::Constant(1, 1, 0.01);
    b.angular = {true};

    const StateEstimate out = update(s, b);
    CHECK(out.mean.x == doctest::Approx(0.0));
    CHECK(out.mean.y == doctest::Approx(0.0));
    CHECK(out.mean.theta ==
          doctest::Approx(0.0990099009900990).epsilon(1e-12));
    CHECK(out.cov(2, 2) == doctest::Approx(0.0099009900990099).epsilon(1e-12));
    CHECK(out.cov(0, 0) == doctest::Approx(1.0));
  }

  SUBCASE("uninformative measurements leave the prior") {
    std::mt19937 rng(4);
    StateEstimate s;
    s.mean = {0.3, -0.7, 0.2};
    s.cov = random_psd(rng, 0.1);
    MeasurementBundle b;
    b.z = Eigen::VectorXd::Constant(1, 5.0);
    b.z_hat = Eigen::VectorXd::Zero(1);
    b.h = Eigen::MatrixXd::Zero(1, 3);
    b.h(0, 2) = 1.0;
    b.r = Eigen::MatrixXd::Constant(1, 1, 1e12);
    b.angular = {false};

    const StateEstimate out = update(s, b);
    CHECK(std::abs(out.mean.x - s.mean.x) < 1e-9);
    CHECK(std::abs(out.mean.y - s.mean.y) < 1e-9);
    CHECK(std::abs(out.mean.theta - s.mean.theta) < 1e-9);
    CHECK((out.cov - s.cov).norm() < 1e-9);
  }

  SUBCASE("zero innovation keeps the mean and shrinks P") {
    std::mt19937 rng(6);
    StateEstimate s;
    s.cov = random_psd(rng, 0.5);
    MeasurementBundle b = random_bundle(rng);
    b.z = b.z_hat;
    const StateEstimate out = update(s, b);
    CHECK(out.mean.x == doctest::Approx(s.mean.x));
    CHECK(out.mean.y == doctest::Approx(s.mean.y));
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(out.cov);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-12);
    CHECK(out.cov.trace() <= s.cov.trace() + 1e-12);
  }

  SUBCASE("ill-conditioned innovation covariance is rejected") {
    StateEstimate s;
    s.cov = Eigen::Matrix3d::Identity();
    MeasurementBundle b;
    b.z = Eigen::VectorXd::Zero(2);
    b.z_hat = Eigen::VectorXd::Zero(2);
    b.h = Eigen::MatrixXd::Zero(2, 3);
    b.h(0, 2) = 1.0;
    b.h(1, 2) = 1.0;  // duplicated row
    b.r = 1e-16 * Eigen::MatrixXd::Identity(2, 2);
    b.angular = {true, true};
    CHECK_THROWS_AS(update(s, b), SingularUpdateError);
  }

  SUBCASE("bundle validation catches bad dimensions") {
    StateEstimate s;
    MeasurementBundle b;
    b.z = Eigen::VectorXd::Zero(2);
    b.z_hat = Eigen::VectorXd::Zero(1);
    b.h = Eigen::MatrixXd::Zero(1, 3);
    b.r = Eigen::MatrixXd::Identity(1, 1);
    b.angular = {false};
    CHECK_THROWS_AS(update(s, b), std::invalid_argument);
  }
}

TEST_CASE("Joseph-form covariance identity holds for the optimal gain") {
  std::mt19937 rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    const StateEstimate s{{0, 0, 0}, random_psd(rng, 1.0)};
    const MeasurementBundle b = random_bundle(rng);

    const Eigen::MatrixXd sm = b.h * s.cov * b.h.transpose() + b.r;
    const Eigen::MatrixXd k = sm.ldlt().solve(b.h * s.cov).transpose();
    const Eigen::Matrix3d ikh = Eigen::Matrix3d::Identity() - k * b.h;
    const Eigen::Matrix3d joseph =
        ikh * s.cov * ikh.transpose() + k * b.r * k.transpose();
    const Eigen::Matrix3d simple = ikh * s.cov;
    CHECK((joseph - simple).lpNorm<Eigen::Infinity>() < 1e-9);
  }
}

TEST_CASE("randomized predict/update cycles keep P healthy") {
  std::mt19937 rng(21);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  NoiseConfig noise;

  StateEstimate s;
  s.cov = random_psd(rng, 0.01);
  int updates = 0;
  for (int i = 0; i < 2000; ++i) {
    s = predict(s, {8.0 * u(rng), 8.0 * u(rng)}, kGeom, kDt, noise);
    MeasurementBundle b = random_bundle(rng);
    const double prior_trace = s.cov.trace();
    try {
      s = update(s, b);
      ++updates;
      REQUIRE(s.cov.trace() <= prior_trace + 1e-12);
    } catch (const SingularUpdateError&) {
    }
    REQUIRE((s.cov - s.cov.transpose()).lpNorm<Eigen::Infinity>() <= 1e-9);
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(s.cov);
    REQUIRE(eig.eigenvalues().minCoeff() >= -1e-12);
  }
  CHECK(updates > 1500);  // the guard should fire rarely here
}

TEST_CASE("step runs the full cycle") {
  const World room = make_rectangle_room(8.0, 6.0);
  StepConfig cfg;
  cfg.geom = kGeom;
  cfg.dt = kDt;
  cfg.noise.delta = 0.0;
  cfg.noise.compass_var = 3.0462e-6;
  cfg.noise.lrf_range_sigma = 0.0;
  cfg.extraction.range_sigma = 0.0;

  SUBCASE("zero-noise tracking stays exact") {
    Pose truth{3.0, 2.0, 0.2};
    StateEstimate est;
    est.mean = truth;
    est.cov = Eigen::Matrix3d::Zero();

    for (int k = 0; k < 100; ++k) {
      const WheelRates rates{4.0 + 0.5 * std::sin(0.05 * k), 4.0};
      truth = propagate_pose(truth, wheel_to_body(rates, kGeom, kDt));
      const Scan scan = raycast(room, truth, LrfConfig{});
      auto [next, report] =
          step(est, rates, scan, truth.theta, room.walls, cfg);
      est = next;
      REQUIRE(std::abs(est.mean.x - truth.x) <= 1e-9);
      REQUIRE(std::abs(est.mean.y - truth.y) <= 1e-9);
      REQUIRE(std::abs(angle_diff(est.mean.theta, truth.theta)) <= 1e-9);
    }
  }

  SUBCASE("a scan with no extractable lines degrades to compass") {
    StateEstimate est;
    est.mean = {4, 3, 0};
    est.cov = 1e-4 * Eigen::Matrix3d::Identity();
    Scan empty;
    empty.max_range = 80.0;
    auto [next, report] = step(est, {0, 0}, empty, 0.0, room.walls, cfg);
    CHECK(report.mode == "compass");
    CHECK(report.n_matched == 0);
  }

  SUBCASE("disabling both sensors reproduces dead reckoning bitwise") {
    StepConfig off = cfg;
    off.use_lrf = false;
    off.use_compass = false;

    StateEstimate est;
    est.mean = {4, 3, 0.1};
    Pose reference = est.mean;
    const Scan scan = raycast(room, est.mean, LrfConfig{});
    for (int k = 0; k < 50; ++k) {
      const WheelRates rates{3.0, 2.5};
      auto [next, report] = step(est, rates, scan, 0.0, room.walls, off);
      est = next;
      reference = propagate_pose(reference, wheel_to_body(rates, kGeom, kDt));
      REQUIRE(est.mean.x == reference.x);
      REQUIRE(est.mean.y == reference.y);
      REQUIRE(est.mean.theta == reference.theta);
      CHECK(report.mode == "predict");
    }
  }

  SUBCASE("matched lines report the lines+compass mode") {
    StateEstimate est;
    est.mean = {4, 3, 0};
    est.cov = 1e-4 * Eigen::Matrix3d::Identity();
    const Scan scan = raycast(room, est.mean, LrfConfig{});
    StepConfig noisy = cfg;
    noisy.noise.lrf_range_sigma = 0.03;  // nonzero fit covariance for R
    noisy.extraction.range_sigma = 0.03;
    auto [next, report] = step(est, {0, 0}, scan, 0.0, room.walls, noisy);
    CHECK(report.mode == "lines+compass");
    CHECK(report.n_matched >= 2);
  }
}
