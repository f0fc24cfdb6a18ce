#include "ekfloc/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "ekfloc/angles.hpp"
#include "ekfloc/errors.hpp"

namespace ekfloc {
namespace {

using nlohmann::json;

double get_or(const json& j, const char* key, double fallback) {
  return j.contains(key) ? j.at(key).get<double>() : fallback;
}

long get_or(const json& j, const char* key, long fallback) {
  return j.contains(key) ? j.at(key).get<long>() : fallback;
}

std::string run_dir_name(int run) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "run_%03d", run);
  return buf;
}

Eigen::Vector2d to_global(const Eigen::Vector2d& robot_point,
                          const Pose& pose) {
  const double a = pose.theta - kPi / 2.0;  // robot frame carries +y forward
  const Eigen::Rotation2D<double> rot(a);
  return Eigen::Vector2d(pose.x, pose.y) + rot * robot_point;
}

}  // namespace

EstimatorMode estimator_mode_from_string(const std::string& name) {
  if (name == "odom") return EstimatorMode::kOdometry;
  if (name == "ekf-compass") return EstimatorMode::kEkfCompass;
  if (name == "ekf-lrf") return EstimatorMode::kEkfLrf;
  if (name == "ekf-full") return EstimatorMode::kEkfFull;
  throw std::invalid_argument("unknown estimator mode: " + name);
}

std::string to_string(EstimatorMode mode) {
  switch (mode) {
    case EstimatorMode::kOdometry:
      return "odom";
    case EstimatorMode::kEkfCompass:
      return "ekf-compass";
    case EstimatorMode::kEkfLrf:
      return "ekf-lrf";
    case EstimatorMode::kEkfFull:
      return "ekf-full";
  }
  return "?";
}

AppConfig parse_config_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw IoError(std::string("config: parse error: ") + e.what());
  }

  AppConfig cfg;
  if (j.contains("geom")) {
    cfg.sim.geom.wheel_radius =
        get_or(j["geom"], "wheel_radius", cfg.sim.geom.wheel_radius);
    cfg.sim.geom.track = get_or(j["geom"], "track", cfg.sim.geom.track);
  }
  cfg.sim.dt = get_or(j, "dt", cfg.sim.dt);
  if (j.contains("noise")) {
    const json& n = j["noise"];
    cfg.sim.noise.delta = get_or(n, "delta", cfg.sim.noise.delta);
    cfg.sim.noise.compass_var =
        get_or(n, "compass_var", cfg.sim.noise.compass_var);
    cfg.sim.noise.lrf_range_sigma =
        get_or(n, "lrf_range_sigma", cfg.sim.noise.lrf_range_sigma);
    cfg.sim.noise.lrf_bearing_sigma =
        get_or(n, "lrf_bearing_sigma", cfg.sim.noise.lrf_bearing_sigma);
  }
  if (j.contains("lrf")) {
    const json& l = j["lrf"];
    cfg.sim.lrf.fov = get_or(l, "fov", cfg.sim.lrf.fov);
    cfg.sim.lrf.angular_step =
        get_or(l, "angular_step", cfg.sim.lrf.angular_step);
    cfg.sim.lrf.max_range = get_or(l, "max_range", cfg.sim.lrf.max_range);
  }
  cfg.sim.seed = static_cast<std::uint64_t>(
      get_or(j, "seed", static_cast<long>(cfg.sim.seed)));
  cfg.sim.duration = get_or(j, "duration", cfg.sim.duration);

  cfg.extraction.range_sigma = cfg.sim.noise.lrf_range_sigma;
  if (j.contains("extraction")) {
    const json& e = j["extraction"];
    cfg.extraction.min_points = static_cast<int>(
        get_or(e, "min_points", static_cast<long>(cfg.extraction.min_points)));
    cfg.extraction.split_threshold =
        get_or(e, "split_threshold", cfg.extraction.split_threshold);
    cfg.extraction.max_residual =
        get_or(e, "max_residual", cfg.extraction.max_residual);
    cfg.extraction.merge_chi2 =
        get_or(e, "merge_chi2", cfg.extraction.merge_chi2);
    cfg.extraction.range_sigma =
        get_or(e, "range_sigma", cfg.extraction.range_sigma);
    cfg.extraction.max_point_gap =
        get_or(e, "max_point_gap", cfg.extraction.max_point_gap);
  }
  cfg.gate = get_or(j, "gate", cfg.gate);
  if (j.contains("controller")) {
    const json& c = j["controller"];
    cfg.controller.lookahead = get_or(c, "lookahead", cfg.controller.lookahead);
    cfg.controller.goal_tol = get_or(c, "goal_tol", cfg.controller.goal_tol);
    cfg.controller.omega_max = get_or(c, "omega_max", cfg.controller.omega_max);
  }
  cfg.speed = get_or(j, "speed", cfg.speed);
  if (j.contains("scenario")) {
    const json& s = j["scenario"];
    if (s.contains("world_preset")) {
      cfg.world_preset = s.at("world_preset").get<std::string>();
    }
    cfg.room_width = get_or(s, "room_width", cfg.room_width);
    cfg.room_height = get_or(s, "room_height", cfg.room_height);
    cfg.plate_len = get_or(s, "plate_len", cfg.plate_len);
    cfg.gap_len = get_or(s, "gap_len", cfg.gap_len);
    cfg.path_inset = get_or(s, "path_inset", cfg.path_inset);
    cfg.corner_radius = get_or(s, "corner_radius", cfg.corner_radius);
    cfg.waypoint_spacing = get_or(s, "waypoint_spacing", cfg.waypoint_spacing);
    cfg.wall_offset = get_or(s, "wall_offset", cfg.wall_offset);
    cfg.wallfollow_duration =
        get_or(s, "wallfollow_duration", cfg.wallfollow_duration);
  }
  if (j.contains("experiment")) {
    const json& e = j["experiment"];
    if (e.contains("mode")) cfg.mode = e.at("mode").get<std::string>();
    cfg.runs = static_cast<int>(get_or(e, "runs", static_cast<long>(cfg.runs)));
  }
  return cfg;
}

AppConfig load_config_file(const std::string& path) {
  return parse_config_json(read_text_file(path));
}

World default_world(const AppConfig& cfg) {
  if (cfg.world_preset == "solid") {
    return make_rectangle_room(cfg.room_width, cfg.room_height);
  }
  if (cfg.world_preset == "uniform-plates") {
    return make_plate_room(cfg.room_width, cfg.room_height, cfg.plate_len,
                           cfg.gap_len);
  }
  if (cfg.world_preset != "sparse-plates") {
    throw std::invalid_argument("unknown world preset: " + cfg.world_preset);
  }
  // A handful of wall plates, heaviest along the west side; driving the
  // loop's east half crosses a stretch with no forward returns at all.
  const double w = cfg.room_width;
  const double h = cfg.room_height;
  World world;
  auto plate = [&](double x1, double y1, double x2, double y2) {
    world.walls.push_back(line_through_points(
        {x1 * w / 8.0, y1 * h / 6.0}, {x2 * w / 8.0, y2 * h / 6.0}));
  };
  plate(0.5, 0.0, 2.5, 0.0);  // south, west end
  plate(0.0, 4.0, 0.0, 2.0);  // west, centered
  plate(2.5, 6.0, 0.5, 6.0);  // north, west end
  plate(8.0, 2.6, 8.0, 3.4);  // east, a short board
  world.validate();
  return world;
}

Waypoints default_path(const AppConfig& cfg) {
  return make_rounded_rect_path(
      cfg.path_inset, cfg.path_inset, cfg.room_width - cfg.path_inset,
      cfg.room_height - cfg.path_inset, cfg.corner_radius,
      cfg.waypoint_spacing);
}

Pose default_start(const AppConfig& cfg) {
  const Waypoints path = default_path(cfg);
  const Eigen::Vector2d p0 = path.front();
  const Eigen::Vector2d p1 = path[1];
  return {p0.x(), p0.y(), std::atan2(p1.y() - p0.y(), p1.x() - p0.x())};
}

StepConfig make_step_config(const AppConfig& cfg, EstimatorMode mode) {
  StepConfig sc;
  sc.geom = cfg.sim.geom;
  sc.dt = cfg.sim.dt;
  sc.noise = cfg.sim.noise;
  sc.extraction = cfg.extraction;
  sc.gate = cfg.gate;
  sc.use_lrf = mode == EstimatorMode::kEkfLrf || mode == EstimatorMode::kEkfFull;
  sc.use_compass =
      mode == EstimatorMode::kEkfCompass || mode == EstimatorMode::kEkfFull;
  return sc;
}

DeviationReport compute_deviation(const std::vector<Pose>& estimated,
                                  const std::vector<Pose>& truth) {
  if (estimated.size() != truth.size()) {
    throw std::invalid_argument("compute_deviation: trajectory length mismatch");
  }
  DeviationReport report;
  const std::size_t n = estimated.size();
  report.dx.resize(n);
  report.dy.resize(n);
  report.dtheta.resize(n);
  double sum_pos = 0.0;
  double sum_heading = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    report.dx[i] = estimated[i].x - truth[i].x;
    report.dy[i] = estimated[i].y - truth[i].y;
    report.dtheta[i] = angle_diff(estimated[i].theta, truth[i].theta);
    sum_pos += report.dx[i] * report.dx[i] + report.dy[i] * report.dy[i];
    sum_heading += report.dtheta[i] * report.dtheta[i];
  }
  if (n > 0) {
    report.rmse_pos = std::sqrt(sum_pos / static_cast<double>(n));
    report.rmse_heading = std::sqrt(sum_heading / static_cast<double>(n));
    report.final_pos_error = std::hypot(report.dx.back(), report.dy.back());
  }
  return report;
}

EstimationResult run_estimator(const SimLog& log,
                               const std::vector<LineNF>& map,
                               EstimatorMode mode, const StepConfig& base) {
  if (log.steps.empty()) {
    throw std::invalid_argument("run_estimator: empty log");
  }
  StepConfig cfg = base;
  cfg.use_lrf = mode == EstimatorMode::kEkfLrf || mode == EstimatorMode::kEkfFull;
  cfg.use_compass =
      mode == EstimatorMode::kEkfCompass || mode == EstimatorMode::kEkfFull;

  EstimationResult result;
  StateEstimate state;
  state.mean = log.steps.front().true_pose;
  state.cov = Eigen::Matrix3d::Zero();

  StepReport init;
  init.k = 0;
  init.mode = "init";
  result.trajectory.push_back(state.mean);
  result.states.push_back(state);
  result.reports.push_back(init);

  for (std::size_t i = 1; i < log.steps.size(); ++i) {
    const SimStep& s = log.steps[i];
    auto [next, report] =
        step(state, s.meas, s.scan, s.compass_phi, map, cfg);
    report.k = s.k;
    state = next;
    if (report.singular_update) ++result.singular_updates;
    result.trajectory.push_back(state.mean);
    result.states.push_back(state);
    result.reports.push_back(report);
  }
  return result;
}

std::vector<RunResult> run_experiment(const AppConfig& cfg,
                                      const ExperimentSpec& spec,
                                      const World& world,
                                      const Waypoints& path,
                                      const Pose& start) {
  if (spec.runs < 1) throw std::invalid_argument("experiment: runs < 1");
  if (spec.modes.empty()) throw std::invalid_argument("experiment: no modes");

  const bool write_files = !spec.out_dir.empty();
  if (write_files) {
    std::error_code ec;
    std::filesystem::create_directories(spec.out_dir, ec);
    if (ec) throw IoError("cannot create output dir: " + spec.out_dir);
  }

  std::vector<RunResult> results;
  for (int run = 0; run < spec.runs; ++run) {
    SimConfig sim = cfg.sim;
    sim.seed = spec.base_seed + static_cast<std::uint64_t>(run);
    const SimLog log =
        run_scenario(sim, world, path, cfg.speed, start, cfg.controller);

    std::vector<Pose> truth;
    truth.reserve(log.steps.size());
    for (const SimStep& s : log.steps) truth.push_back(s.true_pose);

    std::string dir;
    if (write_files) {
      dir = spec.out_dir + "/" + run_dir_name(run);
      std::filesystem::create_directories(dir);
      save_trajectory_csv(dir + "/truth.csv", truth);
      save_simlog(dir + "/sim.jsonl", log);
    }

    for (const EstimatorMode mode : spec.modes) {
      const EstimationResult est =
          run_estimator(log, world.walls, mode, make_step_config(cfg, mode));
      RunResult rr;
      rr.run = run;
      rr.seed = sim.seed;
      rr.mode = mode;
      rr.deviation = compute_deviation(est.trajectory, truth);
      rr.singular_updates = est.singular_updates;
      results.push_back(std::move(rr));

      if (write_files) {
        const std::string tag = to_string(mode);
        save_trajectory_csv(dir + "/est_" + tag + ".csv", est.trajectory);
        save_step_reports(dir + "/steps_" + tag + ".jsonl", est.reports,
                          est.states);
      }
    }
  }

  if (write_files) {
    std::ostringstream summary;
    summary << "run,seed,mode,rmse_pos_m,rmse_heading_rad,final_pos_err_m,"
               "singular_updates\n";
    for (const RunResult& r : results) {
      summary << r.run << ',' << r.seed << ',' << to_string(r.mode) << ','
              << format_double(r.deviation.rmse_pos) << ','
              << format_double(r.deviation.rmse_heading) << ','
              << format_double(r.deviation.final_pos_error) << ','
              << r.singular_updates << '\n';
    }
    write_text_file(spec.out_dir + "/summary.csv", summary.str());

    std::ostringstream stats;
    stats << "mode,mean_rmse_pos_m,std_rmse_pos_m,mean_final_pos_err_m,"
             "std_final_pos_err_m\n";
    for (const EstimatorMode mode : spec.modes) {
      std::vector<double> rmse, fin;
      for (const RunResult& r : results) {
        if (r.mode != mode) continue;
        rmse.push_back(r.deviation.rmse_pos);
        fin.push_back(r.deviation.final_pos_error);
      }
      auto mean_std = [](const std::vector<double>& v) {
        const double mean =
            std::accumulate(v.begin(), v.end(), 0.0) / v.size();
        double var = 0.0;
        for (double x : v) var += (x - mean) * (x - mean);
        var = v.size() > 1 ? var / (v.size() - 1) : 0.0;
        return std::pair<double, double>(mean, std::sqrt(var));
      };
      const auto [rm, rs] = mean_std(rmse);
      const auto [fm, fs] = mean_std(fin);
      stats << to_string(mode) << ',' << format_double(rm) << ','
            << format_double(rs) << ',' << format_double(fm) << ','
            << format_double(fs) << '\n';
    }
    write_text_file(spec.out_dir + "/summary_stats.csv", stats.str());
  }
  return results;
}

MappedLine local_line_to_global(const LocalLine& local, const Scan& scan,
                                const Pose& pose) {
  const double beta_raw = local.psi + pose.theta - kPi / 2.0;
  const double rho_raw = local.r + pose.x * std::cos(beta_raw) +
                         pose.y * std::sin(beta_raw);
  const double flip = rho_raw < 0.0 ? -1.0 : 1.0;
  auto [rho, beta] = normalize_line(rho_raw, beta_raw);

  // (r, psi) -> (rho, beta): d(beta)/d(psi) = 1, d(rho)/d(r) = 1,
  // d(rho)/d(beta) = -x sin(beta) + y cos(beta); the canonical flip negates
  // the rho row.
  Eigen::Matrix2d jac;
  jac << flip * 1.0,
      flip * (-pose.x * std::sin(beta_raw) + pose.y * std::cos(beta_raw)),  //
      0.0, 1.0;

  MappedLine mapped;
  mapped.line.rho = rho;
  mapped.line.beta = beta;
  mapped.cov = jac * local.cov * jac.transpose();
  mapped.support_count = local.support_count;

  // segment extent: span endpoints projected onto the line
  const Eigen::Vector2d n(std::cos(beta), std::sin(beta));
  auto project = [&](const Eigen::Vector2d& p) {
    return Eigen::Vector2d(p - (p.dot(n) - rho) * n);
  };
  mapped.line.seg_start =
      project(to_global(scan.point(local.point_span.first), pose));
  mapped.line.seg_end =
      project(to_global(scan.point(local.point_span.second), pose));
  return mapped;
}

std::vector<MappedLine> merge_mapped_lines(std::vector<MappedLine> lines,
                                           double tol_rho, double tol_beta) {
  std::vector<MappedLine> merged;
  for (const MappedLine& candidate : lines) {
    bool absorbed = false;
    for (MappedLine& existing : merged) {
      const auto [d_rho, d_beta] =
          line_param_distance(existing.line.rho, existing.line.beta,
                              candidate.line.rho, candidate.line.beta);
      if (d_rho > tol_rho || d_beta > tol_beta) continue;

      // align the candidate to the existing branch
      double rho_b = candidate.line.rho;
      double beta_b = candidate.line.beta;
      Eigen::Matrix2d cov_b = candidate.cov;
      if (std::abs(angle_diff(beta_b, existing.line.beta)) > kPi / 2.0) {
        rho_b = -rho_b;
        beta_b = wrap_angle(beta_b + kPi);
        Eigen::Matrix2d f;
        f << -1.0, 0.0, 0.0, 1.0;
        cov_b = f * cov_b * f.transpose();
      }
      const Eigen::Vector2d diff(rho_b - existing.line.rho,
                                 angle_diff(beta_b, existing.line.beta));

      Eigen::Vector2d fused(existing.line.rho, existing.line.beta);
      Eigen::Matrix2d fused_cov = existing.cov;
      const double det_a = existing.cov.determinant();
      const double det_b = cov_b.determinant();
      if (det_a > 1e-30 && det_b > 1e-30) {
        const Eigen::Matrix2d info =
            existing.cov.inverse() + cov_b.inverse();
        fused_cov = info.inverse();
        fused += fused_cov * (cov_b.inverse() * diff);
      } else {
        fused += 0.5 * diff;  // zero-noise fits: plain average
        fused_cov = 0.5 * (existing.cov + cov_b);
      }
      auto [rho_m, beta_m] = normalize_line(fused(0), wrap_angle(fused(1)));
      existing.line.rho = rho_m;
      existing.line.beta = beta_m;
      existing.cov = fused_cov;
      existing.support_count += candidate.support_count;

      // widest extent among the four projected endpoints
      const Eigen::Vector2d n(std::cos(beta_m), std::sin(beta_m));
      const Eigen::Vector2d dir(-n.y(), n.x());
      std::vector<Eigen::Vector2d> ends = {
          existing.line.seg_start, existing.line.seg_end,
          candidate.line.seg_start, candidate.line.seg_end};
      double lo = std::numeric_limits<double>::infinity();
      double hi = -lo;
      for (Eigen::Vector2d& e : ends) {
        e = e - (e.dot(n) - rho_m) * n;
        const double t = e.dot(dir);
        if (t < lo) {
          lo = t;
          existing.line.seg_start = e;
        }
        if (t > hi) {
          hi = t;
          existing.line.seg_end = e;
        }
      }
      absorbed = true;
      break;
    }
    if (!absorbed) merged.push_back(candidate);
  }
  return merged;
}

std::vector<MappedLine> build_map_from_sweep(
    const World& world, const Pose& pose, const std::vector<double>& headings,
    const SimConfig& cfg, const ExtractionParams& extraction, Rng& rng) {
  // map lines serve as the localization reference, so grazing-incidence
  // fragments with sloppy parameters are excluded up front; short plates
  // far from the origin's foot point carry a sizeable rho-beta lever, which
  // these bounds must admit
  constexpr double kMaxSigmaRho = 0.15;   // m
  constexpr double kMaxSigmaBeta = 0.05;  // rad

  std::vector<MappedLine> mapped;
  for (const double heading : headings) {
    Pose sweep_pose = pose;
    sweep_pose.theta = wrap_angle(heading);
    const Scan scan = raycast(world, sweep_pose, cfg.lrf,
                              cfg.noise.lrf_range_sigma, &rng,
                              cfg.noise.lrf_bearing_sigma);
    for (const LocalLine& local : extract_lines(scan, extraction)) {
      MappedLine m = local_line_to_global(local, scan, sweep_pose);
      if (std::sqrt(m.cov(0, 0)) > kMaxSigmaRho ||
          std::sqrt(m.cov(1, 1)) > kMaxSigmaBeta) {
        continue;
      }
      mapped.push_back(std::move(m));
    }
  }
  return merge_mapped_lines(std::move(mapped));
}

WallFollowResult wall_follow_scenario(const AppConfig& cfg, const World& world,
                                      const std::string& out_dir) {
  world.validate();
  const auto [xmin, ymin, xmax, ymax] = world.bounds();
  // start on the loop's west leg, mid-height: the mapping sweep views every
  // side of the default room from there, and the leg's own position is
  // anchored by the long west plate
  const Pose start{xmin + cfg.wall_offset, 0.5 * (ymin + ymax), -kPi / 2.0};

  Rng rng(cfg.sim.seed);
  WallFollowResult result;
  result.map = build_map_from_sweep(world, start, {0.0, kPi}, cfg.sim,
                                    cfg.extraction, rng);
  if (result.map.size() < 3) {
    throw ScenarioAbortError(
        "wall follow: mapped only " + std::to_string(result.map.size()) +
        " lines; need at least 3 to enclose a loop");
  }

  // interior reference: mean of mapped segment midpoints
  Eigen::Vector2d interior = Eigen::Vector2d::Zero();
  for (const MappedLine& m : result.map) {
    interior += 0.5 * (m.line.seg_start + m.line.seg_end);
  }
  interior /= static_cast<double>(result.map.size());

  // inward offset of every mapped wall, as half planes
  struct HalfPlane {
    Eigen::Vector2d n;
    double d;    // interior satisfies n.p <= d
  };
  std::vector<HalfPlane> planes;
  for (const MappedLine& m : result.map) {
    Eigen::Vector2d n(std::cos(m.line.beta), std::sin(m.line.beta));
    double d = m.line.rho;
    if (n.dot(interior) > d) {  // flip so the interior is below the plane
      n = -n;
      d = -d;
    }
    planes.push_back({n, d - cfg.wall_offset});
  }

  // vertices of the offset polygon: pairwise intersections inside all planes
  std::vector<Eigen::Vector2d> vertices;
  for (std::size_t i = 0; i < planes.size(); ++i) {
    for (std::size_t j = i + 1; j < planes.size(); ++j) {
      Eigen::Matrix2d a;
      a << planes[i].n.transpose(), planes[j].n.transpose();
      if (std::abs(a.determinant()) < 1e-9) continue;
      const Eigen::Vector2d p =
          a.inverse() * Eigen::Vector2d(planes[i].d, planes[j].d);
      if (p.x() < xmin || p.x() > xmax || p.y() < ymin || p.y() > ymax) {
        continue;  // near-parallel planes intersect far outside the room
      }
      bool inside = true;
      for (const HalfPlane& hp : planes) {
        if (hp.n.dot(p) > hp.d + 1e-6) {
          inside = false;
          break;
        }
      }
      if (inside) vertices.push_back(p);
    }
  }
  if (vertices.size() < 3) {
    throw ScenarioAbortError("wall follow: offset polygon is degenerate");
  }
  Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
  for (const auto& v : vertices) centroid += v;
  centroid /= static_cast<double>(vertices.size());
  std::sort(vertices.begin(), vertices.end(),
            [&](const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
              return std::atan2(a.y() - centroid.y(), a.x() - centroid.x()) <
                     std::atan2(b.y() - centroid.y(), b.x() - centroid.x());
            });

  Waypoints loop = make_rounded_polygon_path(vertices, cfg.corner_radius,
                                             cfg.waypoint_spacing);

  // rotate the loop so it starts at the waypoint nearest the robot
  std::size_t nearest = 0;
  double best = std::numeric_limits<double>::infinity();
  const std::size_t unique = loop.size() - 1;  // last == first
  for (std::size_t i = 0; i < unique; ++i) {
    const double d =
        (loop[i] - Eigen::Vector2d(start.x, start.y)).squaredNorm();
    if (d < best) {
      best = d;
      nearest = i;
    }
  }
  Waypoints path;
  path.reserve(loop.size());
  for (std::size_t i = 0; i < unique; ++i) {
    path.push_back(loop[(nearest + i) % unique]);
  }
  path.push_back(path.front());

  // drive the loop on the filtered estimate
  const std::vector<LineNF> map_lines = [&] {
    std::vector<LineNF> lines;
    for (const MappedLine& m : result.map) lines.push_back(m.line);
    return lines;
  }();
  StepConfig sc = make_step_config(cfg, EstimatorMode::kEkfFull);

  Pose truth = start;
  StateEstimate state;
  state.mean = start;
  state.cov = Eigen::Matrix3d::Zero();

  std::vector<StateEstimate> states;
  result.truth.push_back(truth);
  result.estimate.push_back(state.mean);
  states.push_back(state);
  StepReport init;
  init.k = 0;
  init.mode = "init";
  result.reports.push_back(init);

  PathFollower follower(path);
  for (long k = 1; k < cfg.wallfollow_duration; ++k) {
    const auto visible = follower.advance({state.mean.x, state.mean.y});
    const WheelRates cmd =
        visible.size() >= 2
            ? path_controller(state.mean, visible, cfg.speed, cfg.sim.geom,
                              cfg.controller)
            : WheelRates{0.0, 0.0};

    const WheelRates actual =
        simulate_encoders(cmd, cfg.sim.noise.delta, rng);
    truth = propagate_pose(truth,
                           wheel_to_body(actual, cfg.sim.geom, cfg.sim.dt));
    if (!world.contains({truth.x, truth.y})) {
      throw ScenarioAbortError("wall follow: robot left the world");
    }
    const double phi =
        simulate_compass(truth.theta, cfg.sim.noise.compass_var, rng);
    const Scan scan =
        raycast(world, truth, cfg.sim.lrf, cfg.sim.noise.lrf_range_sigma, &rng,
                cfg.sim.noise.lrf_bearing_sigma);

    auto [next, report] = step(state, cmd, scan, phi, map_lines, sc);
    report.k = k;
    state = next;
    result.truth.push_back(truth);
    result.estimate.push_back(state.mean);
    states.push_back(state);
    result.reports.push_back(report);
  }

  result.final_to_start_distance =
      std::hypot(result.truth.back().x - start.x,
                 result.truth.back().y - start.y);

  if (!out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output dir: " + out_dir);
    save_map_file(out_dir + "/extracted_map.txt", map_lines);
    save_trajectory_csv(out_dir + "/truth.csv", result.truth);
    save_trajectory_csv(out_dir + "/est_ekf-full.csv", result.estimate);
    save_step_reports(out_dir + "/steps_ekf-full.jsonl", result.reports,
                      states);
  }
  return result;
}

}  // namespace ekfloc
