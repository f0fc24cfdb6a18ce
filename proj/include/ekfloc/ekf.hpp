#ifndef EKFLOC_EKF_HPP_
#define EKFLOC_EKF_HPP_

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "ekfloc/association.hpp"
#include "ekfloc/extraction.hpp"
#include "ekfloc/kinematics.hpp"
#include "ekfloc/line.hpp"
#include "ekfloc/scan.hpp"

namespace ekfloc {

/// Filter state: pose mean and 3x3 covariance.
struct StateEstimate {
  Pose mean;
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
};

/// Sensor and input noise levels. compass_var is in rad^2 (the heading
/// module's 0.1 degree accuracy corresponds to 3.0462e-6 rad^2).
struct NoiseConfig {
  double delta = 0.01;              // wheel-rate variance factor, var = delta*omega^2
  double compass_var = 3.0462e-6;   // rad^2
  double lrf_range_sigma = 0.03;    // m, 1 sigma
  double lrf_bearing_sigma = 4.3633e-3;  // rad, 1 sigma (sensor datum; the
                                         // idealized raycast applies range
                                         // noise only)
};

/// Stacked measurement for one correction step: matched line pairs in
/// ascending global-line order, compass heading last.
struct MeasurementBundle {
  Eigen::VectorXd z;
  Eigen::VectorXd z_hat;
  Eigen::MatrixXd h;
  Eigen::MatrixXd r;
  std::vector<bool> angular;  // rows whose innovation must be angle-wrapped

  Eigen::Index rows() const { return z.size(); }
  void validate() const;
};

/// Input-noise covariance Q = diag(delta*omega_r^2, delta*omega_l^2),
/// ordered (right, left) to match the noise Jacobian's columns.
Eigen::Matrix2d input_noise_cov(const WheelRates& rates, double delta);

/// Time update: mean through the motion model, covariance through
/// A P A^T + W Q W^T, result symmetrized.
StateEstimate predict(const StateEstimate& state, const WheelRates& rates,
                      const RobotGeometry& geom, double dt,
                      const NoiseConfig& noise);

/// Predicted measurement vector and its Jacobian for the matched map lines
/// (ascending global index), with the compass row appended last.
/// H rows per line: [-sgn(C)cos(beta), -sgn(C)sin(beta), 0] for r and
/// [0, 0, -1] for psi; compass row [0, 0, 1].
std::pair<Eigen::VectorXd, Eigen::MatrixXd> predict_measurements(
    const StateEstimate& state, const std::vector<LineNF>& map,
    const Association& assoc);

/// Diagonal measurement covariance in the same row order. Lines whose fit
/// variance is not strictly positive cannot enter R; they are dropped and
/// the surviving association is returned alongside.
std::pair<Eigen::MatrixXd, Association> build_measurement_cov(
    const std::vector<LocalLine>& locals, const Association& assoc,
    double compass_var);

/// Condition-number guard for the innovation covariance solve.
inline constexpr double kMaxConditionNumber = 1e12;

/// Measurement update (Kalman gain, mean correction with wrapped angular
/// innovations, covariance (I-KH)P). Throws SingularUpdateError when the
/// innovation covariance is not safely invertible.
StateEstimate update(const StateEstimate& state,
                     const MeasurementBundle& bundle);

/// Everything one filter step needs beyond the raw sensor inputs.
struct StepConfig {
  RobotGeometry geom;
  double dt = 0.1;
  NoiseConfig noise;
  ExtractionParams extraction;
  double gate = kDefaultGate;
  bool use_lrf = true;
  bool use_compass = true;
};

struct StepReport {
  long k = 0;
  std::string mode;  // "predict", "compass", "lines", or "lines+compass"
  int n_matched = 0;
  double innov_norm = 0.0;
  bool singular_update = false;
};

/// One full filter cycle: predict, extract, match, assemble, update.
/// Component failures downgrade the step (at worst to prediction only) and
/// are recorded in the report; they never propagate.
std::pair<StateEstimate, StepReport> step(const StateEstimate& state,
                                          const WheelRates& rates,
                                          const Scan& scan, double compass_phi,
                                          const std::vector<LineNF>& map,
                                          const StepConfig& cfg);

}  // namespace ekfloc

#endif  // EKFLOC_EKF_HPP_
