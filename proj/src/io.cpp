#include "ekfloc/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "ekfloc/errors.hpp"

namespace ekfloc {
namespace {

using ordered_json = nlohmann::ordered_json;

double parse_double(const std::string& token) {
  try {
    return std::stod(token);
  } catch (const std::exception&) {
    throw IoError("cannot parse number: '" + token + "'");
  }
}

ordered_json pose_to_json(const Pose& p) {
  return ordered_json::array({p.x, p.y, p.theta});
}

double json_range(const ordered_json& v) {
  return v.is_null() ? std::numeric_limits<double>::quiet_NaN()
                     : v.get<double>();
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::vector<LineNF> load_map_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open map file: " + path);
  std::vector<LineNF> walls;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    double rho, beta, x1, y1, x2, y2;
    if (!(ss >> rho)) continue;  // blank or comment-only line
    if (!(ss >> beta >> x1 >> y1 >> x2 >> y2)) {
      throw IoError("map file: malformed wall line: '" + line + "'");
    }
    walls.push_back({rho, beta, {x1, y1}, {x2, y2}});
  }
  return walls;
}

void save_map_file(const std::string& path, const std::vector<LineNF>& walls) {
  std::ostringstream out;
  out << "# rho beta x1 y1 x2 y2\n";
  for (const LineNF& w : walls) {
    out << format_double(w.rho) << ' ' << format_double(w.beta) << ' '
        << format_double(w.seg_start.x()) << ' '
        << format_double(w.seg_start.y()) << ' '
        << format_double(w.seg_end.x()) << ' ' << format_double(w.seg_end.y())
        << '\n';
  }
  write_text_file(path, out.str());
}

void save_scan_csv(const std::string& path, const Scan& scan) {
  std::ostringstream out;
  out << "bearing_rad,range_m,valid\n";
  for (std::size_t i = 0; i < scan.size(); ++i) {
    out << format_double(scan.bearings[i]) << ','
        << format_double(scan.ranges[i]) << ',' << (scan.valid[i] ? 1 : 0)
        << '\n';
  }
  write_text_file(path, out.str());
}

Scan load_scan_csv(const std::string& path, double max_range) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scan file: " + path);
  Scan scan;
  scan.max_range = max_range;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    std::istringstream ss(line);
    std::string bearing, range, valid;
    if (!std::getline(ss, bearing, ',') || !std::getline(ss, range, ',') ||
        !std::getline(ss, valid)) {
      throw IoError("scan csv: malformed row: '" + line + "'");
    }
    scan.bearings.push_back(parse_double(bearing));
    scan.ranges.push_back(parse_double(range));
    scan.valid.push_back(valid == "1");
  }
  return scan;
}

std::string simlog_to_jsonl(const SimLog& log) {
  std::ostringstream out;
  for (const SimStep& s : log.steps) {
    ordered_json j;
    j["k"] = s.k;
    j["true"] = pose_to_json(s.true_pose);
    j["cmd"] = ordered_json::array({s.cmd.omega_l, s.cmd.omega_r});
    j["meas"] = ordered_json::array({s.meas.omega_l, s.meas.omega_r});
    j["phi"] = s.compass_phi;
    ordered_json scan;
    scan["bearings"] = s.scan.bearings;
    scan["ranges"] = ordered_json::array();
    for (std::size_t i = 0; i < s.scan.size(); ++i) {
      if (s.scan.valid[i]) {
        scan["ranges"].push_back(s.scan.ranges[i]);
      } else {
        scan["ranges"].push_back(nullptr);
      }
    }
    scan["valid"] = ordered_json::array();
    for (std::size_t i = 0; i < s.scan.size(); ++i) {
      scan["valid"].push_back(s.scan.valid[i] ? 1 : 0);
    }
    j["scan"] = scan;
    out << j.dump() << '\n';
  }
  return out.str();
}

void save_simlog(const std::string& path, const SimLog& log) {
  write_text_file(path, simlog_to_jsonl(log));
}

SimLog load_simlog(const std::string& path, double max_range) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open log file: " + path);
  SimLog log;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const std::exception& e) {
      throw IoError(std::string("log jsonl: parse error: ") + e.what());
    }
    SimStep s;
    s.k = j.at("k").get<long>();
    const auto& t = j.at("true");
    s.true_pose = {t.at(0).get<double>(), t.at(1).get<double>(),
                   t.at(2).get<double>()};
    s.cmd = {j.at("cmd").at(0).get<double>(), j.at("cmd").at(1).get<double>()};
    s.meas = {j.at("meas").at(0).get<double>(),
              j.at("meas").at(1).get<double>()};
    s.compass_phi = j.at("phi").get<double>();
    const auto& scan = j.at("scan");
    s.scan.max_range = max_range;
    for (const auto& b : scan.at("bearings")) {
      s.scan.bearings.push_back(b.get<double>());
    }
    for (const auto& r : scan.at("ranges")) {
      s.scan.ranges.push_back(json_range(r));
    }
    for (const auto& v : scan.at("valid")) {
      s.scan.valid.push_back(v.get<int>() != 0);
    }
    log.steps.push_back(std::move(s));
  }
  return log;
}

std::string step_reports_to_jsonl(const std::vector<StepReport>& reports,
                                  const std::vector<StateEstimate>& estimates) {
  if (reports.size() != estimates.size()) {
    throw std::invalid_argument("step reports and estimates differ in length");
  }
  std::ostringstream out;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const StepReport& rep = reports[i];
    const StateEstimate& est = estimates[i];
    ordered_json j;
    j["k"] = rep.k;
    j["mode"] = rep.mode;
    j["n_matched"] = rep.n_matched;
    j["mean"] = pose_to_json(est.mean);
    ordered_json cov = ordered_json::array();
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) cov.push_back(est.cov(r, c));
    }
    j["cov"] = cov;
    j["innov_norm"] = rep.innov_norm;
    out << j.dump() << '\n';
  }
  return out.str();
}

void save_step_reports(const std::string& path,
                       const std::vector<StepReport>& reports,
                       const std::vector<StateEstimate>& estimates) {
  write_text_file(path, step_reports_to_jsonl(reports, estimates));
}

std::string trajectory_to_csv(const std::vector<Pose>& poses) {
  std::ostringstream out;
  out << "k,x,y,theta\n";
  for (std::size_t k = 0; k < poses.size(); ++k) {
    out << k << ',' << format_double(poses[k].x) << ','
        << format_double(poses[k].y) << ',' << format_double(poses[k].theta)
        << '\n';
  }
  return out.str();
}

void save_trajectory_csv(const std::string& path,
                         const std::vector<Pose>& poses) {
  write_text_file(path, trajectory_to_csv(poses));
}

std::vector<Pose> load_trajectory_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open trajectory file: " + path);
  std::vector<Pose> poses;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    std::istringstream ss(line);
    std::string k, x, y, theta;
    if (!std::getline(ss, k, ',') || !std::getline(ss, x, ',') ||
        !std::getline(ss, y, ',') || !std::getline(ss, theta)) {
      throw IoError("trajectory csv: malformed row: '" + line + "'");
    }
    poses.push_back({parse_double(x), parse_double(y), parse_double(theta)});
  }
  return poses;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << content;
  if (!out) throw IoError("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace ekfloc
