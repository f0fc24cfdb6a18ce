#ifndef EKFLOC_IO_HPP_
#define EKFLOC_IO_HPP_

#include <string>
#include <vector>

#include "ekfloc/ekf.hpp"
#include "ekfloc/simulator.hpp"
#include "ekfloc/world.hpp"

namespace ekfloc {

/// Shortest round-trip decimal representation (deterministic).
std::string format_double(double v);

/// Map / world files: one wall per line, `rho beta x1 y1 x2 y2` in SI units
/// and radians, `#` starts a comment.
std::vector<LineNF> load_map_file(const std::string& path);
void save_map_file(const std::string& path, const std::vector<LineNF>& walls);

/// Scan CSV with header `bearing_rad,range_m,valid`; invalid ranges are
/// written as nan.
void save_scan_csv(const std::string& path, const Scan& scan);
Scan load_scan_csv(const std::string& path, double max_range);

/// Simulation logs as JSON Lines, one step per line:
/// {"k":..,"true":[x,y,th],"cmd":[wl,wr],"meas":[wl,wr],"phi":..,
///  "scan":{"bearings":[..],"ranges":[..],"valid":[..]}}
std::string simlog_to_jsonl(const SimLog& log);
void save_simlog(const std::string& path, const SimLog& log);
SimLog load_simlog(const std::string& path, double max_range);

/// Filter diagnostics as JSON Lines, one step per line:
/// {"k":..,"mode":..,"n_matched":..,"mean":[x,y,theta],
///  "cov":[9 row-major],"innov_norm":..}
std::string step_reports_to_jsonl(const std::vector<StepReport>& reports,
                                  const std::vector<StateEstimate>& estimates);
void save_step_reports(const std::string& path,
                       const std::vector<StepReport>& reports,
                       const std::vector<StateEstimate>& estimates);

/// Trajectory CSV with header `k,x,y,theta`.
std::string trajectory_to_csv(const std::vector<Pose>& poses);
void save_trajectory_csv(const std::string& path,
                         const std::vector<Pose>& poses);
std::vector<Pose> load_trajectory_csv(const std::string& path);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace ekfloc

#endif  // EKFLOC_IO_HPP_
