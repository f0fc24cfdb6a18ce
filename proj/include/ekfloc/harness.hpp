#ifndef EKFLOC_HARNESS_HPP_
#define EKFLOC_HARNESS_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "ekfloc/ekf.hpp"
#include "ekfloc/io.hpp"
#include "ekfloc/simulator.hpp"

namespace ekfloc {

enum class EstimatorMode { kOdometry, kEkfCompass, kEkfLrf, kEkfFull };

/// CLI names: odom, ekf-compass, ekf-lrf, ekf-full.
EstimatorMode estimator_mode_from_string(const std::string& name);
std::string to_string(EstimatorMode mode);

/// Everything configurable from one JSON document. Field names mirror the
/// structs; missing fields keep their defaults.
struct AppConfig {
  SimConfig sim;
  ExtractionParams extraction;  // range_sigma follows sim.noise unless set
  double gate = kDefaultGate;
  ControllerParams controller;
  double speed = 0.4;  // m/s commanded along paths

  // default scenario: rounded rectangle inside a rectangular room built
  // from wall plates. Presets: sparse-plates (default), solid,
  // uniform-plates (plate_len/gap_len runs on every side).
  std::string world_preset = "sparse-plates";
  double room_width = 8.0;
  double room_height = 6.0;
  double plate_len = 1.5;
  double gap_len = 1.0;
  double path_inset = 1.1;
  double corner_radius = 0.5;
  double waypoint_spacing = 0.05;

  // wall-follow scenario
  double wall_offset = 0.5;
  long wallfollow_duration = 1200;

  std::string mode = "ekf-full";
  int runs = 1;
};

AppConfig load_config_file(const std::string& path);
AppConfig parse_config_json(const std::string& text);

World default_world(const AppConfig& cfg);
Waypoints default_path(const AppConfig& cfg);
Pose default_start(const AppConfig& cfg);
StepConfig make_step_config(const AppConfig& cfg, EstimatorMode mode);

struct ExperimentSpec {
  std::string scenario = "rounded_rect";
  std::vector<EstimatorMode> modes;
  int runs = 1;
  std::uint64_t base_seed = 1;
  std::string out_dir;
};

struct DeviationReport {
  std::vector<double> dx, dy, dtheta;  // estimate - truth, theta wrapped
  double rmse_pos = 0.0;               // m
  double rmse_heading = 0.0;           // rad
  double final_pos_error = 0.0;        // m
};

/// Element-wise deviation between equal-length trajectories.
DeviationReport compute_deviation(const std::vector<Pose>& estimated,
                                  const std::vector<Pose>& truth);

struct EstimationResult {
  std::vector<Pose> trajectory;
  std::vector<StateEstimate> states;
  std::vector<StepReport> reports;
  int singular_updates = 0;
};

/// Replay one estimator over a stored log. The estimate is initialized from
/// the first logged pose with zero covariance.
EstimationResult run_estimator(const SimLog& log,
                               const std::vector<LineNF>& map,
                               EstimatorMode mode, const StepConfig& base);

struct RunResult {
  int run = 0;
  std::uint64_t seed = 0;
  EstimatorMode mode = EstimatorMode::kEkfFull;
  DeviationReport deviation;
  int singular_updates = 0;
};

/// Simulate `runs` seeded scenarios and replay each requested estimator over
/// the shared per-run log. Writes per-run trajectory CSVs and step JSONL
/// plus cross-run summary CSVs under spec.out_dir (unless it is empty).
std::vector<RunResult> run_experiment(const AppConfig& cfg,
                                      const ExperimentSpec& spec,
                                      const World& world,
                                      const Waypoints& path,
                                      const Pose& start);

/// A global-frame line recovered from scans, with its parameter covariance.
struct MappedLine {
  LineNF line;
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  int support_count = 0;
};

/// Express a robot-frame extracted line in the global frame at a known pose
/// (covariance transformed to (rho, beta); segment extent from the scan).
MappedLine local_line_to_global(const LocalLine& local, const Scan& scan,
                                const Pose& pose);

/// Merge near-duplicate global lines (inverse-variance weighted), extending
/// segment extents.
std::vector<MappedLine> merge_mapped_lines(std::vector<MappedLine> lines,
                                           double tol_rho = 0.2,
                                           double tol_beta = 0.1);

/// Build the global map from an in-place sweep at the start pose: one scan
/// per heading, lines extracted and merged in the global frame. Consumes
/// noise draws from rng.
std::vector<MappedLine> build_map_from_sweep(
    const World& world, const Pose& pose, const std::vector<double>& headings,
    const SimConfig& cfg, const ExtractionParams& extraction, Rng& rng);

struct WallFollowResult {
  std::vector<MappedLine> map;
  std::vector<Pose> truth;
  std::vector<Pose> estimate;
  std::vector<StepReport> reports;
  double final_to_start_distance = 0.0;
};

/// Map the room from the first scans, then drive a loop offset inward from
/// the walls using the full filter's estimate as controller feedback.
/// Throws ScenarioAbortError when fewer than 3 lines can be mapped.
WallFollowResult wall_follow_scenario(const AppConfig& cfg, const World& world,
                                      const std::string& out_dir);

}  // namespace ekfloc

#endif  // EKFLOC_HARNESS_HPP_
