#ifndef EKFLOC_SIMULATOR_HPP_
#define EKFLOC_SIMULATOR_HPP_

#include <cstdint>
#include <vector>

#include "ekfloc/ekf.hpp"
#include "ekfloc/path.hpp"
#include "ekfloc/rng.hpp"
#include "ekfloc/world.hpp"

namespace ekfloc {

struct SimConfig {
  RobotGeometry geom;
  double dt = 0.1;  // s, the filter's sampling time
  NoiseConfig noise;
  LrfConfig lrf;
  std::uint64_t seed = 1;
  long duration = 600;  // steps

  void validate() const;
};

/// One logged step: the control applied during the step, the resulting true
/// pose, and the sensor readings taken there. Step 0 is the initial snapshot
/// (zero command, sensors at the start pose).
struct SimStep {
  long k = 0;
  Pose true_pose;
  WheelRates cmd;
  WheelRates meas;  // the wheel-rate signal the estimator consumes
  double compass_phi = 0.0;
  Scan scan;
};

struct SimLog {
  std::vector<SimStep> steps;
  bool truncated = false;  // robot left the world before `duration` steps
};

/// Wheel rates with the input-noise draw applied: each wheel picks up
/// Gaussian noise of variance delta * omega^2 (left wheel drawn first).
/// This one draw is both the actuation error and the encoder error: the
/// true motion integrates the perturbed rates while the estimator sees the
/// clean command, which is exactly the discrepancy the filter's Q models.
WheelRates simulate_encoders(const WheelRates& rates, double delta, Rng& rng);

/// Wrapped heading measurement with Gaussian noise of the given variance.
double simulate_compass(double true_theta, double compass_var, Rng& rng);

/// Drive the robot along the waypoint path with pure pursuit on the true
/// pose, logging commands, true poses and sensor outputs. Deterministic for
/// a fixed config (seed included). If the robot exits the world the log is
/// truncated and flagged.
SimLog run_scenario(const SimConfig& config, const World& world,
                    const Waypoints& path, double speed, const Pose& start,
                    const ControllerParams& ctl = {});

}  // namespace ekfloc

#endif  // EKFLOC_SIMULATOR_HPP_
