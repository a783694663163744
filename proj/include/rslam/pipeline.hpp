#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rslam/channel.hpp"
#include "rslam/config.hpp"
#include "rslam/lsm.hpp"
#include "rslam/map.hpp"
#include "rslam/matrix_io.hpp"
#include "rslam/pose.hpp"
#include "rslam/preprocess.hpp"
#include "rslam/track.hpp"

namespace rslam {

inline constexpr const char* kScanExtension = ".adm";

struct StepLog {
  std::size_t k = 0;
  RelativePose relative;  // zero for k = 0
  Pose raw;               // composed measurement fed to the tracker
};

struct TrajectoryRow {
  std::size_t k = 0;
  Pose pose;
  double q = 0.0;
  double cov_xx = 0.0, cov_yy = 0.0, cov_tt = 0.0;
};

struct TruthMetrics {
  double rmse = 0.0;               // m, position only
  double heading_rmse_deg = 0.0;
  double final_error = 0.0;        // m
  std::vector<double> errors;      // per scan, m
};

struct PipelineResult {
  std::vector<TrajectoryRow> trajectory;
  std::vector<StepLog> steps;
  map::OccupancyGrid grid;
  channel::SpreadReport spreads;
  std::optional<TruthMetrics> truth;
};

namespace detail {

/// Runs `fn`, re-raising any failure with the stage and scan index attached.
template <typename F>
auto at_scan(const char* stage, std::size_t k, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const std::exception& e) {
    throw Error(stage, "scan " + std::to_string(k) + ": " + e.what());
  }
}

inline RegistrationOptions registration_options(const PipelineConfig& cfg) {
  RegistrationOptions o;
  o.cell_size = cfg.cell_size;
  o.image_size = cfg.image_size;
  o.hann_window = cfg.hann_window;
  o.subpixel = cfg.subpixel;
  return o;
}

inline LsmOptions lsm_options(const PipelineConfig& cfg, double angle_step_deg) {
  LsmOptions o;
  o.cell_size = cfg.cell_size;
  o.search_x = cfg.search_x;
  o.search_y = cfg.search_y;
  o.search_theta = cfg.search_theta;
  o.angle_step_deg = angle_step_deg;
  o.sigma = cfg.lsm_sigma;
  return o;
}

}  // namespace detail

/// Position RMSE of `est` against `truth`, with the truth re-expressed in the
/// frame of its first pose (the tracker starts at the origin).
inline TruthMetrics trajectory_error(const std::vector<Pose>& est, const std::vector<Pose>& truth) {
  require(!est.empty() && truth.size() >= est.size(), "metrics", "ground truth has fewer poses than the run");
  TruthMetrics m;
  double se = 0.0, sh = 0.0;
  for (std::size_t k = 0; k < est.size(); ++k) {
    const Pose t = relative_to(truth[0], truth[k]);
    const double e = std::hypot(est[k].x - t.x, est[k].y - t.y);
    const double h = rad2deg(wrap_angle(est[k].theta - t.theta));
    m.errors.push_back(e);
    se += e * e;
    sh += h * h;
  }
  m.rmse = std::sqrt(se / double(est.size()));
  m.heading_rmse_deg = std::sqrt(sh / double(est.size()));
  m.final_error = m.errors.back();
  return m;
}

/// The full chain over in-memory angle-delay matrices in scan order.
inline PipelineResult run_pipeline(const std::vector<AngleDelayMatrix>& scans, const PipelineConfig& cfg,
                                   const std::vector<Pose>* truth = nullptr) {
  cfg.validate();
  require(!scans.empty(), "run", "no scans");
  const auto model = track::build_motion_model(cfg.t_f, cfg.w0, cfg.w_theta);
  const track::ObservationModel obs{cfg.sigma_x, cfg.sigma_y, cfg.sigma_theta, cfg.q_min};
  const auto reg = detail::registration_options(cfg);
  const map::UpdateOptions upd{cfg.p_hit, cfg.log_odds_clamp,
                               cfg.free_evidence ? map::EvidencePolicy::free_and_hit : map::EvidencePolicy::hit_only};

  PipelineResult out;
  out.grid = map::init_grid({{cfg.map_origin_x, cfg.map_origin_y}, cfg.map_cell_size, cfg.map_width, cfg.map_height});
  std::vector<Frame> frames;
  std::vector<Pose> estimates;
  frames.reserve(scans.size());
  track::KinematicState state = track::initial_state();
  Pose raw;
  ScanVector prev_scan;

  for (std::size_t k = 0; k < scans.size(); ++k) {
    frames.push_back(detail::at_scan("preprocess", k, [&] { return make_frame(scans[k], cfg.eta_cl, cfg.eta_cf, k); }));
    const Frame& f = frames.back();
    ScanVector scan = detail::at_scan("scan-vector", k, [&] { return extract_scan_vector(f, cfg.eta_sv); });

    StepLog step{k, {}, raw};
    double q = 1.0;
    if (k > 0) {
      const Frame& prev = frames[k - 1];
      step.relative = detail::at_scan("pose", k, [&] {
        require(f.same_axes(prev), "pose", "frame axes differ from the previous scan");
        switch (cfg.pose) {
          case PoseMethod::fm: return estimate_relative_pose_fm(f, prev, reg);
          case PoseMethod::sfm: return estimate_relative_pose_sfm(f, prev, reg);
          case PoseMethod::lsm: return estimate_relative_pose_lsm(scan, prev_scan, detail::lsm_options(cfg, f.angle_step_deg));
        }
        return RelativePose{};
      });
      q = step.relative.q;
      raw = step.raw = track::compose_pose(raw, step.relative);
      state = detail::at_scan("track", k, [&] { return track::kf_step(state, step.raw, model, obs, q); });
    }
    const Pose est = state.pose();
    detail::at_scan("map", k, [&] {
      map::update_grid(out.grid, scan, est, upd);
      return 0;
    });
    estimates.push_back(est);
    out.steps.push_back(step);
    out.trajectory.push_back({k, est, q, state.cov(track::kX, track::kX), state.cov(track::kY, track::kY),
                              state.cov(track::kTheta, track::kTheta)});
    prev_scan = std::move(scan);
  }
  out.spreads = channel::scenario_spread_report(frames);
  if (truth) out.truth = trajectory_error(estimates, *truth);
  return out;
}

// ---- files ------------------------------------------------------------------

inline std::string scan_filename(std::size_t k) {
  std::ostringstream os;
  os << "scan_" << std::setw(4) << std::setfill('0') << k << kScanExtension;
  return os.str();
}

/// All scan files in a directory, in file-name order.
inline std::vector<std::filesystem::path> list_scans(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw Error("ingest", "input directory '" + dir + "' does not exist");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == kScanExtension) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error("ingest", "no " + std::string(kScanExtension) + " files in '" + dir + "'");
  return files;
}

inline std::vector<AngleDelayMatrix> load_scans(const std::string& dir) {
  std::vector<AngleDelayMatrix> scans;
  const auto files = list_scans(dir);
  for (std::size_t k = 0; k < files.size(); ++k)
    scans.push_back(detail::at_scan("ingest", k, [&] { return io::load_matrix(files[k].string()); }));
  return scans;
}

/// Poses from a ground-truth CSV whose first four columns are k,x,y,theta.
/// Rows repeating a k (one per steering angle) are skipped.
inline std::vector<Pose> read_truth_poses(std::istream& is) {
  std::vector<Pose> poses;
  std::string line;
  std::getline(is, line);  // header
  std::size_t lineno = 1;
  long last = -1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string cell[4];
    for (auto& c : cell)
      if (!std::getline(ss, c, ',')) throw Error("ground-truth", "line " + std::to_string(lineno) + ": expected k,x,y,theta");
    try {
      const long k = std::stol(cell[0]);
      if (k == last) continue;
      if (k != last + 1) throw Error("ground-truth", "line " + std::to_string(lineno) + ": scan indices must be consecutive");
      last = k;
      poses.push_back({std::stod(cell[1]), std::stod(cell[2]), std::stod(cell[3])});
    } catch (const std::logic_error&) {
      throw Error("ground-truth", "line " + std::to_string(lineno) + ": bad number");
    }
  }
  return poses;
}

inline std::vector<Pose> load_truth_poses(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("ground-truth", "cannot open " + path);
  return read_truth_poses(is);
}

inline void write_trajectory_csv(std::ostream& os, const std::vector<TrajectoryRow>& rows) {
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  os << "k,x,y,theta,q,cov_xx,cov_yy,cov_tt\n";
  for (const auto& r : rows)
    os << r.k << ',' << r.pose.x << ',' << r.pose.y << ',' << r.pose.theta << ',' << r.q << ',' << r.cov_xx << ','
       << r.cov_yy << ',' << r.cov_tt << '\n';
}

inline void write_pose_log(std::ostream& os, const std::vector<StepLog>& steps) {
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  os << "k,dx,dy,dtheta_deg,q,raw_x,raw_y,raw_theta\n";
  for (const auto& s : steps)
    os << s.k << ',' << s.relative.dx << ',' << s.relative.dy << ',' << s.relative.dtheta_deg << ',' << s.relative.q
       << ',' << s.raw.x << ',' << s.raw.y << ',' << s.raw.theta << '\n';
}

inline void write_spread_csv(std::ostream& os, const channel::SpreadReport& r) {
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  os << "k,paths,tau_mean_s,tau_rms_s,phi_mean_re,phi_mean_im,phi_spread,phi_spread_deg\n";
  for (const auto& p : r.positions) {
    os << p.index << ',';
    if (!p.stats) {
      os << "0,,,,,,\n";
      continue;
    }
    const auto& s = *p.stats;
    os << s.num_paths << ',' << s.delay.tau_mean << ',' << s.delay.tau_rms << ',' << s.angle.phi_mean.real() << ','
       << s.angle.phi_mean.imag() << ',' << s.angle.phi_spread << ',' << s.angle.spread_deg_equivalent() << '\n';
  }
}

inline void write_metrics(std::ostream& os, const PipelineResult& r, const PipelineConfig& cfg) {
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  os << "pose=" << to_string(cfg.pose) << "\nscans=" << r.trajectory.size() << '\n';
  double qmin = 1.0;
  for (std::size_t i = 1; i < r.trajectory.size(); ++i) qmin = std::min(qmin, r.trajectory[i].q);
  os << "q_min_observed=" << qmin << '\n';
  os << "tau_rms_aggregate_s=" << r.spreads.tau_rms_aggregate << "\nphi_spread_aggregate=" << r.spreads.phi_spread_aggregate
     << "\nphi_spread_aggregate_deg=" << r.spreads.phi_spread_aggregate_deg() << "\nspread_positions=" << r.spreads.used
     << '\n';
  if (r.truth) {
    os << "rmse_m=" << r.truth->rmse << "\nheading_rmse_deg=" << r.truth->heading_rmse_deg
       << "\nfinal_error_m=" << r.truth->final_error << '\n';
  }
}

namespace detail {
inline std::ofstream open_out(const std::filesystem::path& p, std::ios::openmode mode = std::ios::out) {
  std::ofstream os(p, mode);
  if (!os) throw Error("export", "cannot open " + p.string() + " for writing");
  return os;
}
}  // namespace detail

/// Writes trajectory.csv, poses.csv, metrics.txt, spreads.csv, config.txt
/// and map.{pgm,csv,txt} into cfg.output_dir.
inline void write_outputs(const PipelineResult& r, const PipelineConfig& cfg) {
  namespace fs = std::filesystem;
  const fs::path dir(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("export", "cannot create " + dir.string() + ": " + ec.message());
  {
    auto os = detail::open_out(dir / "trajectory.csv");
    write_trajectory_csv(os, r.trajectory);
  }
  {
    auto os = detail::open_out(dir / "poses.csv");
    write_pose_log(os, r.steps);
  }
  {
    auto os = detail::open_out(dir / "metrics.txt");
    write_metrics(os, r, cfg);
  }
  {
    auto os = detail::open_out(dir / "spreads.csv");
    write_spread_csv(os, r.spreads);
  }
  {
    auto os = detail::open_out(dir / "config.txt");
    write_config(os, cfg);
  }
  map::save_map((dir / "map").string(), r.grid, {cfg.threshold_occupied, cfg.threshold_free});
}

/// Loads scans (and ground truth when present), runs, writes outputs.
inline PipelineResult run_pipeline_files(const PipelineConfig& cfg) {
  require(!cfg.input_dir.empty(), "config", "input_dir is not set");
  const auto scans = load_scans(cfg.input_dir);
  std::optional<std::vector<Pose>> truth;
  std::string gt = cfg.ground_truth;
  if (gt.empty() && std::filesystem::exists(std::filesystem::path(cfg.input_dir) / "ground_truth.csv"))
    gt = (std::filesystem::path(cfg.input_dir) / "ground_truth.csv").string();
  if (!gt.empty()) truth = load_truth_poses(gt);
  PipelineResult r = run_pipeline(scans, cfg, truth ? &*truth : nullptr);
  write_outputs(r, cfg);
  return r;
}

}  // namespace rslam
