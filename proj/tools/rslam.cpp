// rslam command line: simulate, ingest, run, metrics, map-export.

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "rslam/rslam.hpp"

namespace fs = std::filesystem;
using namespace rslam;

namespace {

struct SimulateArgs {
  std::string scene_file;
  std::string trajectory = "line-boresight";
  std::string out = "dataset";
  double hpbw = 18.0;
  double sidelobe_db = -15.0;
  double noise = 0.0;
  std::uint64_t seed = 1;
  std::size_t num_delays = 1000;
  double range_bin = 0.01;  // m
  double range_min = 0.1;   // m
};

sim::TrajectoryKind parse_trajectory(const std::string& s) {
  if (s == "line-boresight") return sim::TrajectoryKind::line_boresight;
  if (s == "line-broadside") return sim::TrajectoryKind::line_broadside;
  if (s == "oval") return sim::TrajectoryKind::oval;
  throw Error("simulate", "unknown trajectory '" + s + "'");
}

std::ofstream open_out(const fs::path& p, std::ios::openmode mode = std::ios::out) {
  std::ofstream os(p, mode);
  if (!os) throw Error("export", "cannot open " + p.string() + " for writing");
  return os;
}

int simulate(const SimulateArgs& a) {
  sim::SceneMap scene = sim::lab_scene();
  if (!a.scene_file.empty()) {
    std::ifstream is(a.scene_file);
    if (!is) throw Error("simulate", "cannot open scene " + a.scene_file);
    scene = sim::parse_scene(is);
  }
  sim::SimConfig cfg;
  cfg.num_delays = a.num_delays;
  cfg.t_s = 2.0 * a.range_bin / kSpeedOfLight;
  cfg.t_min = 2.0 * a.range_min / kSpeedOfLight;
  cfg.noise_floor = a.noise;
  cfg.seed = a.seed;
  sim::AntennaPattern pattern;
  pattern.hpbw_deg = a.hpbw;
  pattern.sidelobe_floor_db = a.sidelobe_db;

  const auto poses = sim::generate_trajectory(parse_trajectory(a.trajectory));
  fs::create_directories(a.out);
  std::vector<std::vector<double>> truth;
  for (std::size_t k = 0; k < poses.size(); ++k) {
    sim::SimConfig c = cfg;
    c.seed = cfg.seed + k;
    const auto scan = sim::synthesize_scan(scene, poses[k], pattern, c);
    io::save_matrix((fs::path(a.out) / scan_filename(k)).string(), scan.matrix);
    truth.push_back(scan.truth_ranges);
  }
  {
    auto os = open_out(fs::path(a.out) / "ground_truth.csv");
    sim::write_ground_truth(os, poses, truth, cfg);
  }
  auto os = open_out(fs::path(a.out) / "scene.txt");
  sim::write_scene(os, scene);
  std::cout << "simulate: wrote " << poses.size() << " scans to " << a.out << '\n';
  return 0;
}

struct IngestArgs {
  std::string cfr;
  std::string out = "scan_0000.adm";
  std::string window = "hann";
  std::size_t fft_size = 0;
  double angle_start = -90.0;
  double angle_stop = 90.0;
  double angle_step = 1.0;
  std::size_t keep = 0;  // delay samples kept, 0 = all
};

// CFR file: CSV with header, columns angle_deg,freq_hz,re,im; rows grouped
// by angle, frequencies increasing within a group.
int ingest_cfr(const IngestArgs& a) {
  std::ifstream is(a.cfr);
  if (!is) throw Error("ingest", "cannot open " + a.cfr);
  std::map<double, std::pair<std::vector<double>, std::vector<Complex>>> by_angle;
  std::string line;
  std::getline(is, line);
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    double ang, f, re, im;
    if (!(ss >> ang >> f >> re >> im)) throw Error("ingest", "line " + std::to_string(lineno) + ": expected angle_deg,freq_hz,re,im");
    auto& slot = by_angle[ang];
    slot.first.push_back(f);
    slot.second.emplace_back(re, im);
  }
  if (by_angle.empty()) throw Error("ingest", "no CFR samples in " + a.cfr);
  const auto window = a.window == "none" ? ingest::Window::none : ingest::Window::hann;
  if (a.window != "none" && a.window != "hann") throw Error("ingest", "window must be none or hann");

  std::vector<double> coarse;
  std::vector<std::vector<Complex>> cirs;
  double t_s = 0.0;
  for (const auto& [ang, fr] : by_angle) {
    const double step = ingest::uniform_step(fr.first);
    auto cir = ingest::cfr_to_cir(fr.second, window, step, a.fft_size);
    if (t_s == 0.0) t_s = cir.t_s;
    if (std::abs(cir.t_s - t_s) > 1e-9 * t_s) throw Error("ingest", "angles have different frequency grids");
    if (a.keep && a.keep < cir.samples.size()) cir.samples.resize(a.keep);
    coarse.push_back(ang);
    cirs.push_back(std::move(cir.samples));
  }
  const auto target = ingest::angle_grid(a.angle_start, a.angle_stop, a.angle_step);
  const auto interp = ingest::interpolate_angles(cirs, coarse, target);
  if (interp.clamped) std::cerr << "ingest: warning: " << interp.clamped << " target angles outside the measured span were clamped\n";
  const auto h = build_angle_delay_matrix(interp.cirs, 0.0, t_s, target);
  io::save_matrix(a.out, h);
  std::cout << "ingest: " << h.num_angles() << "x" << h.num_delays() << " matrix, t_s=" << t_s << " s -> " << a.out << '\n';
  return 0;
}

int metrics(const std::string& trajectory, const std::string& truth, const std::string& input,
            const PipelineConfig& cfg) {
  std::cout << std::setprecision(std::numeric_limits<double>::max_digits10);
  if (!trajectory.empty()) {
    std::ifstream is(trajectory);
    if (!is) throw Error("metrics", "cannot open " + trajectory);
    const auto est = read_truth_poses(is);  // same leading k,x,y,theta columns
    if (truth.empty()) throw Error("metrics", "--ground-truth is required with --trajectory");
    const auto m = trajectory_error(est, load_truth_poses(truth));
    std::cout << "rmse_m=" << m.rmse << "\nheading_rmse_deg=" << m.heading_rmse_deg << "\nfinal_error_m=" << m.final_error
              << '\n';
  }
  if (!input.empty()) {
    std::vector<Frame> frames;
    const auto scans = load_scans(input);
    for (std::size_t k = 0; k < scans.size(); ++k) frames.push_back(make_frame(scans[k], cfg.eta_cl, cfg.eta_cf, k));
    const auto r = channel::scenario_spread_report(frames);
    write_spread_csv(std::cout, r);
    std::cout << "tau_rms_aggregate_s=" << r.tau_rms_aggregate << "\nphi_spread_aggregate=" << r.phi_spread_aggregate
              << "\nphi_spread_aggregate_deg=" << r.phi_spread_aggregate_deg() << '\n';
  }
  return 0;
}

int map_export(const std::string& in, const std::string& out, double occupied, double free) {
  const auto grid = map::load_map(in);
  map::save_map(out, grid, {occupied, free});
  std::cout << "map-export: " << grid.geometry().width << "x" << grid.geometry().height << " -> " << out << ".pgm\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Radar SLAM toolkit"};
  app.require_subcommand(1);

  SimulateArgs sa;
  auto* sim_cmd = app.add_subcommand("simulate", "Synthesize a dataset from a 2D scene");
  sim_cmd->add_option("--scene", sa.scene_file, "Scene file (x1 y1 x2 y2 reflectivity); default: built-in lab");
  sim_cmd->add_option("--trajectory", sa.trajectory, "line-boresight | line-broadside | oval")->capture_default_str();
  sim_cmd->add_option("--out", sa.out, "Output directory")->capture_default_str();
  sim_cmd->add_option("--hpbw", sa.hpbw, "Half-power beamwidth, degrees")->capture_default_str();
  sim_cmd->add_option("--sidelobe-db", sa.sidelobe_db, "Sidelobe floor, dB")->capture_default_str();
  sim_cmd->add_option("--noise", sa.noise, "Noise std relative to the strongest echo")->capture_default_str();
  sim_cmd->add_option("--seed", sa.seed)->capture_default_str();
  sim_cmd->add_option("--num-delays", sa.num_delays)->capture_default_str();
  sim_cmd->add_option("--range-bin", sa.range_bin, "Range resolution, m")->capture_default_str();
  sim_cmd->add_option("--range-min", sa.range_min, "Range of the first delay bin, m")->capture_default_str();

  IngestArgs ia;
  auto* ingest_cmd = app.add_subcommand("ingest", "Convert a measured CFR sweep to an angle-delay matrix");
  ingest_cmd->add_option("--cfr", ia.cfr, "CSV angle_deg,freq_hz,re,im")->required();
  ingest_cmd->add_option("--out", ia.out)->capture_default_str();
  ingest_cmd->add_option("--window", ia.window, "none | hann")->capture_default_str();
  ingest_cmd->add_option("--fft-size", ia.fft_size, "Zero-padded transform length (0 = number of points)");
  ingest_cmd->add_option("--angle-start", ia.angle_start)->capture_default_str();
  ingest_cmd->add_option("--angle-stop", ia.angle_stop)->capture_default_str();
  ingest_cmd->add_option("--angle-step", ia.angle_step)->capture_default_str();
  ingest_cmd->add_option("--keep", ia.keep, "Delay samples to keep (0 = all)");

  PipelineConfig cfg;
  std::string config_file, pose = "sfm";
  std::vector<std::string> overrides;
  auto* run_cmd = app.add_subcommand("run", "Run the SLAM chain on a directory of scans");
  auto add_pipeline_flags = [&](CLI::App* c) {
    c->add_option("--config", config_file, "key=value configuration file");
    c->add_option("--set", overrides, "Override one key, key=value (repeatable)");
  };
  add_pipeline_flags(run_cmd);
  run_cmd->add_option("--input", cfg.input_dir, "Directory of scan_*.adm files");
  run_cmd->add_option("--output", cfg.output_dir, "Output directory");
  run_cmd->add_option("--ground-truth", cfg.ground_truth, "Ground-truth CSV");
  auto* pose_opt = run_cmd->add_option("--pose", pose, "fm | sfm | lsm")->check(CLI::IsMember({"fm", "sfm", "lsm"}));
  auto* cell_opt = run_cmd->add_option("--cell-size", cfg.cell_size, "Cartesian cell size, m");
  auto* img_opt = run_cmd->add_option("--image-size", cfg.image_size, "Cartesian image width, cells");
  auto* sx_opt = run_cmd->add_option("--search-x", cfg.search_x, "LSM window, +- cells");
  auto* sy_opt = run_cmd->add_option("--search-y", cfg.search_y, "LSM window, +- cells");
  auto* st_opt = run_cmd->add_option("--search-theta", cfg.search_theta, "LSM window, +- angular bins");
  bool subpixel = false;
  auto* sub_opt = run_cmd->add_flag("--subpixel", subpixel, "Parabolic peak refinement");

  std::string traj_file, truth_file, metrics_input;
  auto* metrics_cmd = app.add_subcommand("metrics", "Trajectory error and channel spread statistics");
  metrics_cmd->add_option("--trajectory", traj_file, "Estimated trajectory CSV");
  metrics_cmd->add_option("--ground-truth", truth_file, "Ground-truth CSV");
  metrics_cmd->add_option("--input", metrics_input, "Directory of scans for spread statistics");
  add_pipeline_flags(metrics_cmd);

  std::string map_in, map_out;
  double occ = 2.0, fre = -2.0;
  auto* map_cmd = app.add_subcommand("map-export", "Re-threshold a saved map");
  map_cmd->add_option("--map", map_in, "Prefix of map.{csv,txt}")->required();
  map_cmd->add_option("--out", map_out, "Output prefix")->required();
  map_cmd->add_option("--occupied", occ, "Occupied log-odds threshold")->capture_default_str();
  map_cmd->add_option("--free", fre, "Free log-odds threshold")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  // Config file first, then --set, then dedicated flags.
  const auto resolve_config = [&] {
    PipelineConfig base;
    if (!config_file.empty()) base = load_config(config_file);
    for (const auto& o : overrides) {
      const auto eq = o.find('=');
      if (eq == std::string::npos) throw Error("config", "--set expects key=value, got '" + o + "'");
      set_config_value(base, o.substr(0, eq), o.substr(eq + 1));
    }
    if (!cfg.input_dir.empty()) base.input_dir = cfg.input_dir;
    if (run_cmd->count("--output")) base.output_dir = cfg.output_dir;
    if (!cfg.ground_truth.empty()) base.ground_truth = cfg.ground_truth;
    if (pose_opt->count()) base.pose = parse_pose_method(pose);
    if (cell_opt->count()) base.cell_size = cfg.cell_size;
    if (img_opt->count()) base.image_size = cfg.image_size;
    if (sx_opt->count()) base.search_x = cfg.search_x;
    if (sy_opt->count()) base.search_y = cfg.search_y;
    if (st_opt->count()) base.search_theta = cfg.search_theta;
    if (sub_opt->count()) base.subpixel = subpixel;
    base.validate();
    return base;
  };

  try {
    if (*sim_cmd) return simulate(sa);
    if (*ingest_cmd) return ingest_cfr(ia);
    if (*run_cmd) {
      const PipelineConfig c = resolve_config();
      const auto t0 = std::chrono::steady_clock::now();
      const auto r = run_pipeline_files(c);
      const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      std::cout << "run: " << r.trajectory.size() << " scans, pose=" << to_string(c.pose) << ", " << dt << " s";
      if (r.truth) std::cout << ", rmse " << r.truth->rmse << " m";
      std::cout << " -> " << c.output_dir << '\n';
      return 0;
    }
    if (*metrics_cmd) return metrics(traj_file, truth_file, metrics_input, resolve_config());
    if (*map_cmd) return map_export(map_in, map_out, occ, fre);
  } catch (const Error& e) {
    std::cerr << "error [" << e.stage() << "]: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
