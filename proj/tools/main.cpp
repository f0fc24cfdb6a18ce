#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ekfloc/errors.hpp"
#include "ekfloc/harness.hpp"

namespace {

using namespace ekfloc;

struct CommonArgs {
  std::string config_file;
  std::string world_file;
  std::string out_dir;
  std::string mode = "ekf-full";
  int runs = 0;
  std::int64_t seed = -1;
  long steps = 0;
};

AppConfig resolve_config(const CommonArgs& args) {
  AppConfig cfg =
      args.config_file.empty() ? AppConfig{} : load_config_file(args.config_file);
  if (args.seed >= 0) cfg.sim.seed = static_cast<std::uint64_t>(args.seed);
  if (args.steps > 0) cfg.sim.duration = args.steps;
  if (args.runs > 0) cfg.runs = args.runs;
  if (!args.mode.empty()) cfg.mode = args.mode;
  return cfg;
}

World resolve_world(const CommonArgs& args, const AppConfig& cfg) {
  if (args.world_file.empty()) return default_world(cfg);
  World world;
  world.walls = load_map_file(args.world_file);
  world.validate();
  return world;
}

std::vector<EstimatorMode> resolve_modes(const std::string& mode) {
  if (mode == "all") {
    return {EstimatorMode::kOdometry, EstimatorMode::kEkfCompass,
            EstimatorMode::kEkfLrf, EstimatorMode::kEkfFull};
  }
  return {estimator_mode_from_string(mode)};
}

int cmd_simulate(const CommonArgs& args) {
  const AppConfig cfg = resolve_config(args);
  const World world = resolve_world(args, cfg);
  const Waypoints path = default_path(cfg);
  const Pose start = default_start(cfg);

  const SimLog log =
      run_scenario(cfg.sim, world, path, cfg.speed, start, cfg.controller);

  std::filesystem::create_directories(args.out_dir);
  save_simlog(args.out_dir + "/sim.jsonl", log);
  std::vector<Pose> truth;
  for (const SimStep& s : log.steps) truth.push_back(s.true_pose);
  save_trajectory_csv(args.out_dir + "/truth.csv", truth);
  save_map_file(args.out_dir + "/world.txt", world.walls);

  std::printf("simulated %zu steps (seed %llu)%s -> %s\n", log.steps.size(),
              static_cast<unsigned long long>(cfg.sim.seed),
              log.truncated ? " [truncated: left world]" : "",
              args.out_dir.c_str());
  return log.truncated ? 3 : 0;
}

int cmd_estimate(const CommonArgs& args, const std::string& log_file) {
  const AppConfig cfg = resolve_config(args);
  const World world = resolve_world(args, cfg);
  const SimLog log = load_simlog(log_file, cfg.sim.lrf.max_range);
  const EstimatorMode mode = estimator_mode_from_string(cfg.mode);

  const EstimationResult est =
      run_estimator(log, world.walls, mode, make_step_config(cfg, mode));
  std::vector<Pose> truth;
  for (const SimStep& s : log.steps) truth.push_back(s.true_pose);
  const DeviationReport dev = compute_deviation(est.trajectory, truth);

  std::filesystem::create_directories(args.out_dir);
  const std::string tag = to_string(mode);
  save_trajectory_csv(args.out_dir + "/truth.csv", truth);
  save_trajectory_csv(args.out_dir + "/est_" + tag + ".csv", est.trajectory);
  save_step_reports(args.out_dir + "/steps_" + tag + ".jsonl", est.reports,
                    est.states);

  std::printf("%s: rmse_pos=%.6f m rmse_heading=%.6f rad final=%.6f m "
              "(singular updates: %d)\n",
              tag.c_str(), dev.rmse_pos, dev.rmse_heading,
              dev.final_pos_error, est.singular_updates);
  return 0;
}

int cmd_experiment(const CommonArgs& args) {
  const AppConfig cfg = resolve_config(args);
  const World world = resolve_world(args, cfg);

  ExperimentSpec spec;
  spec.modes = resolve_modes(cfg.mode);
  spec.runs = cfg.runs;
  spec.base_seed = cfg.sim.seed;
  spec.out_dir = args.out_dir;

  const Waypoints path = default_path(cfg);
  const Pose start = default_start(cfg);
  const std::vector<RunResult> results =
      run_experiment(cfg, spec, world, path, start);

  for (const EstimatorMode mode : spec.modes) {
    double sum = 0.0;
    int n = 0;
    for (const RunResult& r : results) {
      if (r.mode != mode) continue;
      sum += r.deviation.final_pos_error;
      ++n;
    }
    std::printf("%-12s mean final position error over %d runs: %.4f m\n",
                to_string(mode).c_str(), n, sum / std::max(n, 1));
  }
  std::printf("wrote %s/summary.csv\n", args.out_dir.c_str());
  return 0;
}

int cmd_wallfollow(const CommonArgs& args) {
  const AppConfig cfg = resolve_config(args);
  const World world = resolve_world(args, cfg);
  const WallFollowResult result =
      wall_follow_scenario(cfg, world, args.out_dir);
  std::printf("mapped %zu lines; loop closed %.3f m from the start -> %s\n",
              result.map.size(), result.final_to_start_distance,
              args.out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EKF localization toolkit: differential-drive odometry fused "
               "with compass heading and LRF line features, plus a "
               "deterministic simulator and experiment harness"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string log_file;

  auto add_common = [&](CLI::App* sub, bool with_mode) {
    sub->add_option("--config", args.config_file, "JSON config file");
    sub->add_option("--world", args.world_file,
                    "world/map file (default: built-in room)");
    sub->add_option("--out", args.out_dir, "output directory")->required();
    sub->add_option("--seed", args.seed, "override base seed");
    if (with_mode) {
      sub->add_option("--mode", args.mode,
                      "odom | ekf-compass | ekf-lrf | ekf-full | all");
    }
  };

  CLI::App* simulate = app.add_subcommand("simulate", "run one seeded scenario");
  add_common(simulate, false);
  simulate->add_option("--steps", args.steps, "override duration");

  CLI::App* estimate =
      app.add_subcommand("estimate", "replay an estimator over a stored log");
  add_common(estimate, true);
  estimate->add_option("--log", log_file, "sim.jsonl to replay")->required();

  CLI::App* experiment = app.add_subcommand(
      "experiment", "Monte Carlo comparison of estimator configurations");
  add_common(experiment, true);
  experiment->add_option("--runs", args.runs, "number of Monte Carlo runs");

  CLI::App* wallfollow = app.add_subcommand(
      "wallfollow", "map from the first scans, then loop the room on the "
                    "filtered estimate");
  add_common(wallfollow, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(args);
    if (estimate->parsed()) return cmd_estimate(args, log_file);
    if (experiment->parsed()) return cmd_experiment(args);
    if (wallfollow->parsed()) return cmd_wallfollow(args);
  } catch (const ekfloc::ScenarioAbortError& e) {
    std::fprintf(stderr, "scenario abort: %s\n", e.what());
    return 3;
  } catch (const ekfloc::IoError& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 1;
}
