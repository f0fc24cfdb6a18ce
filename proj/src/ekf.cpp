#include "ekfloc/ekf.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ekfloc/angles.hpp"
#include "ekfloc/errors.hpp"

namespace ekfloc {
namespace {

Eigen::Matrix3d symmetrized(const Eigen::Matrix3d& m) {
  return 0.5 * (m + m.transpose());
}

std::vector<Association::Pair> pairs_by_global_index(const Association& assoc) {
  std::vector<Association::Pair> pairs = assoc.pairs;
  std::sort(pairs.begin(), pairs.end(),
            [](const Association::Pair& a, const Association::Pair& b) {
              return a.global_index < b.global_index;
            });
  return pairs;
}

/// The two H rows of one matched line at the prior mean.
Eigen::Matrix<double, 2, 3> line_h_block(const LineNF& line, double c) {
  const double sgn = c > 0.0 ? 1.0 : -1.0;
  Eigen::Matrix<double, 2, 3> h;
  h << -sgn * std::cos(line.beta), -sgn * std::sin(line.beta), 0.0,  //
      0.0, 0.0, -1.0;
  return h;
}

}  // namespace

void MeasurementBundle::validate() const {
  const Eigen::Index n = z.size();
  if (z_hat.size() != n || h.rows() != n || h.cols() != 3 || r.rows() != n ||
      r.cols() != n || static_cast<Eigen::Index>(angular.size()) != n) {
    throw std::invalid_argument("measurement bundle: inconsistent dimensions");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(r(i, i) > 0.0)) {
      throw std::invalid_argument("measurement bundle: R diagonal must be > 0");
    }
  }
}

Eigen::Matrix2d input_noise_cov(const WheelRates& rates, double delta) {
  if (delta < 0.0) throw std::invalid_argument("input_noise_cov: delta < 0");
  Eigen::Matrix2d q = Eigen::Matrix2d::Zero();
  q(0, 0) = delta * rates.omega_r * rates.omega_r;
  q(1, 1) = delta * rates.omega_l * rates.omega_l;
  return q;
}

StateEstimate predict(const StateEstimate& state, const WheelRates& rates,
                      const RobotGeometry& geom, double dt,
                      const NoiseConfig& noise) {
  const OdometryDelta delta = wheel_to_body(rates, geom, dt);
  const Eigen::Matrix3d a = jacobian_state(state.mean, delta);
  const Eigen::Matrix<double, 3, 2> w =
      jacobian_noise(state.mean, delta, geom, dt);
  const Eigen::Matrix2d q = input_noise_cov(rates, noise.delta);

  StateEstimate out;
  out.mean = propagate_pose(state.mean, delta);
  out.cov = symmetrized(a * state.cov * a.transpose() +
                        w * q * w.transpose());
  return out;
}

std::pair<Eigen::VectorXd, Eigen::MatrixXd> predict_measurements(
    const StateEstimate& state, const std::vector<LineNF>& map,
    const Association& assoc) {
  const auto pairs = pairs_by_global_index(assoc);
  const Eigen::Index rows = 2 * static_cast<Eigen::Index>(pairs.size()) + 1;
  Eigen::VectorXd z_hat(rows);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(rows, 3);

  Eigen::Index row = 0;
  for (const auto& pair : pairs) {
    const LineNF& line = map.at(pair.global_index);
    const RobotFrameLine rf = line_to_robot_frame(line, state.mean);
    z_hat(row) = rf.r_hat;
    z_hat(row + 1) = rf.psi_hat;
    h.block<2, 3>(row, 0) = line_h_block(line, rf.c);
    row += 2;
  }
  z_hat(row) = state.mean.theta;  // compass row
  h(row, 2) = 1.0;
  return {z_hat, h};
}

std::pair<Eigen::MatrixXd, Association> build_measurement_cov(
    const std::vector<LocalLine>& locals, const Association& assoc,
    double compass_var) {
  if (!(compass_var > 0.0)) {
    throw InvalidMeasurementError("compass variance must be > 0");
  }
  Association kept;
  for (const auto& pair : pairs_by_global_index(assoc)) {
    const LocalLine& line = locals.at(pair.local_index);
    if (line.cov(0, 0) > 0.0 && line.cov(1, 1) > 0.0) {
      kept.pairs.push_back(pair);
    }
  }
  const Eigen::Index rows = 2 * static_cast<Eigen::Index>(kept.pairs.size()) + 1;
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(rows, rows);
  Eigen::Index row = 0;
  for (const auto& pair : kept.pairs) {
    const LocalLine& line = locals[pair.local_index];
    r(row, row) = line.cov(0, 0);
    r(row + 1, row + 1) = line.cov(1, 1);
    row += 2;
  }
  r(row, row) = compass_var;
  return {r, kept};
}

StateEstimate update(const StateEstimate& state,
                     const MeasurementBundle& bundle) {
  bundle.validate();
  const Eigen::MatrixXd s =
      bundle.h * state.cov * bundle.h.transpose() + bundle.r;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(
      0.5 * (s + s.transpose()));
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > kMaxConditionNumber) {
    throw SingularUpdateError("innovation covariance not safely invertible");
  }

  // K = P H^T S^-1 via a symmetric positive-definite solve
  const Eigen::MatrixXd k =
      s.ldlt().solve(bundle.h * state.cov).transpose();

  Eigen::VectorXd innov = bundle.z - bundle.z_hat;
  for (Eigen::Index i = 0; i < innov.size(); ++i) {
    if (bundle.angular[i]) innov(i) = wrap_angle(innov(i));
  }

  const Eigen::Vector3d correction = k * innov;
  StateEstimate out;
  out.mean = {state.mean.x + correction(0), state.mean.y + correction(1),
              wrap_angle(state.mean.theta + correction(2))};
  out.cov = symmetrized(
      (Eigen::Matrix3d::Identity() - k * bundle.h) * state.cov);
  return out;
}

std::pair<StateEstimate, StepReport> step(const StateEstimate& state,
                                          const WheelRates& rates,
                                          const Scan& scan, double compass_phi,
                                          const std::vector<LineNF>& map,
                                          const StepConfig& cfg) {
  StepReport report;
  StateEstimate prior = predict(state, rates, cfg.geom, cfg.dt, cfg.noise);

  std::vector<LocalLine> locals;
  Association assoc;
  if (cfg.use_lrf) {
    try {
      locals = extract_lines(scan, cfg.extraction);
    } catch (const std::exception&) {
      locals.clear();
    }
    if (!locals.empty()) {
      std::vector<PredictedLine> predictions;
      std::vector<std::size_t> prediction_to_map;
      for (std::size_t j = 0; j < map.size(); ++j) {
        try {
          const RobotFrameLine rf = line_to_robot_frame(map[j], prior.mean);
          const Eigen::Matrix<double, 2, 3> h = line_h_block(map[j], rf.c);
          predictions.push_back(
              {rf.r_hat, rf.psi_hat, h * prior.cov * h.transpose()});
          prediction_to_map.push_back(j);
        } catch (const DegenerateGeometryError&) {
          // robot on this line; it cannot be predicted this step
        }
      }
      assoc = match_lines(locals, predictions, cfg.gate);
      for (auto& pair : assoc.pairs) {
        pair.global_index = prediction_to_map[pair.global_index];
      }
    }
  }

  StateEstimate posterior = prior;
  try {
    auto [r_full, kept] =
        cfg.use_compass || !assoc.pairs.empty()
            ? build_measurement_cov(locals, assoc,
                                    cfg.use_compass ? cfg.noise.compass_var
                                                    : 1.0)
            : std::pair<Eigen::MatrixXd, Association>{
                  Eigen::MatrixXd::Zero(1, 1), {}};
    const Eigen::Index n_lines = 2 * static_cast<Eigen::Index>(kept.pairs.size());
    const Eigen::Index rows = n_lines + (cfg.use_compass ? 1 : 0);
    report.n_matched = static_cast<int>(kept.pairs.size());

    if (rows > 0) {
      auto [z_hat_full, h_full] = predict_measurements(prior, map, kept);
      MeasurementBundle bundle;
      bundle.z.resize(rows);
      bundle.z_hat = z_hat_full.head(rows);
      bundle.h = h_full.topRows(rows);
      bundle.r = r_full.topLeftCorner(rows, rows);
      bundle.angular.assign(static_cast<std::size_t>(rows), false);

      Eigen::Index row = 0;
      for (const auto& pair : kept.pairs) {
        bundle.z(row) = locals[pair.local_index].r;
        bundle.z(row + 1) = locals[pair.local_index].psi;
        bundle.angular[static_cast<std::size_t>(row + 1)] = true;
        row += 2;
      }
      if (cfg.use_compass) {
        bundle.z(row) = compass_phi;
        bundle.angular[static_cast<std::size_t>(row)] = true;
      }

      posterior = update(prior, bundle);

      Eigen::VectorXd innov = bundle.z - bundle.z_hat;
      for (Eigen::Index i = 0; i < innov.size(); ++i) {
        if (bundle.angular[static_cast<std::size_t>(i)]) {
          innov(i) = wrap_angle(innov(i));
        }
      }
      report.innov_norm = innov.norm();
      report.mode = n_lines > 0
                        ? (cfg.use_compass ? "lines+compass" : "lines")
                        : "compass";
    } else {
      report.mode = "predict";
    }
  } catch (const SingularUpdateError&) {
    posterior = prior;
    report.singular_update = true;
    report.mode = "predict";
  } catch (const std::exception&) {
    posterior = prior;
    report.mode = "predict";
  }
  return {posterior, report};
}

}  // namespace ekfloc
