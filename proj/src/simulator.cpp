#include "ekfloc/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ekfloc/angles.hpp"
#include "ekfloc/errors.hpp"

namespace ekfloc {

void SimConfig::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("sim config: dt must be > 0");
  if (!(lrf.angular_step > 0.0)) {
    throw std::invalid_argument("sim config: angular_step must be > 0");
  }
  if (lrf.fov > kPi + 1e-12) {
    throw std::invalid_argument("sim config: fov exceeds 180 degrees");
  }
  if (duration < 1) throw std::invalid_argument("sim config: duration < 1");
  if (noise.delta < 0.0 || noise.compass_var < 0.0 ||
      noise.lrf_range_sigma < 0.0) {
    throw std::invalid_argument("sim config: negative noise entry");
  }
}

WheelRates simulate_encoders(const WheelRates& rates, double delta, Rng& rng) {
  const double sqrt_delta = std::sqrt(std::max(delta, 0.0));
  const double nl = rng.gaussian(sqrt_delta * std::abs(rates.omega_l));
  const double nr = rng.gaussian(sqrt_delta * std::abs(rates.omega_r));
  return {rates.omega_l + nl, rates.omega_r + nr};
}

double simulate_compass(double true_theta, double compass_var, Rng& rng) {
  return wrap_angle(true_theta + rng.gaussian(std::sqrt(compass_var)));
}

SimLog run_scenario(const SimConfig& config, const World& world,
                    const Waypoints& path, double speed, const Pose& start,
                    const ControllerParams& ctl) {
  config.validate();
  world.validate();
  if (path.size() < 2) {
    throw std::invalid_argument("run_scenario: need >= 2 waypoints");
  }

  Rng rng(config.seed);
  SimLog log;
  log.steps.reserve(config.duration);

  Pose pose = start;
  auto snapshot = [&](long k, const WheelRates& cmd) {
    SimStep step;
    step.k = k;
    step.true_pose = pose;
    step.cmd = cmd;
    step.meas = cmd;
    step.compass_phi = simulate_compass(pose.theta, config.noise.compass_var,
                                        rng);
    step.scan = raycast(world, pose, config.lrf, config.noise.lrf_range_sigma,
                        &rng, config.noise.lrf_bearing_sigma);
    log.steps.push_back(std::move(step));
  };

  snapshot(0, {0.0, 0.0});

  PathFollower follower(path);
  for (long k = 1; k < config.duration; ++k) {
    const auto visible = follower.advance({pose.x, pose.y});
    const WheelRates cmd =
        visible.size() >= 2
            ? path_controller(pose, visible, speed, config.geom, ctl)
            : WheelRates{0.0, 0.0};

    const WheelRates actual = simulate_encoders(cmd, config.noise.delta, rng);
    pose = propagate_pose(pose, wheel_to_body(actual, config.geom, config.dt));

    if (!world.contains({pose.x, pose.y})) {
      log.truncated = true;
      break;
    }
    snapshot(k, cmd);
  }
  return log;
}

}  // namespace ekfloc
