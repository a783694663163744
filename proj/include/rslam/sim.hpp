#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "rslam/angle_delay.hpp"
#include "rslam/geometry.hpp"

namespace rslam::sim {

struct Segment {
  Vec2 a;
  Vec2 b;
  double reflectivity = 1.0;
};

struct SceneMap {
  std::vector<Segment> segments;

  void validate() const {
    for (const auto& s : segments) {
      require((s.b - s.a).norm() > 0.0, "scene", "degenerate wall segment");
      require(s.reflectivity > 0.0 && s.reflectivity <= 1.0, "scene", "reflectivity must lie in (0, 1]");
    }
  }

  struct Extent {
    Vec2 lo, hi;
    bool contains(Vec2 p) const { return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y; }
  };

  // Explicit bounds for open scenes; when empty the extent is the bounding
  // box of the segments.
  std::optional<Extent> bounds;

  Extent extent() const {
    if (bounds) return *bounds;
    Extent e{{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()},
             {-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()}};
    for (const auto& s : segments)
      for (Vec2 p : {s.a, s.b}) {
        e.lo = {std::min(e.lo.x, p.x), std::min(e.lo.y, p.y)};
        e.hi = {std::max(e.hi.x, p.x), std::max(e.hi.y, p.y)};
      }
    return e;
  }
};

/// Gaussian main lobe over a constant sidelobe floor.
struct AntennaPattern {
  double hpbw_deg = 18.0;
  double sidelobe_floor_db = -15.0;  // -infinity disables sidelobes
  double boresight_gain_dbi = 20.0;  // informational; gains are normalised to the peak

  double floor_linear() const { return std::isfinite(sidelobe_floor_db) ? std::pow(10.0, sidelobe_floor_db / 10.0) : 0.0; }

  /// One-way normalised power gain at an angular offset from boresight.
  double main_lobe(double offset_deg) const {
    const double psi = wrap_degrees(offset_deg);
    return std::exp(-4.0 * std::log(2.0) * psi * psi / (hpbw_deg * hpbw_deg));
  }

  double gain(double offset_deg) const { return std::max(main_lobe(offset_deg), floor_linear()); }

  /// Co-located TX and RX: the two-way weighting is gain squared.
  double two_way(double offset_deg) const {
    const double g = gain(offset_deg);
    return g * g;
  }
};

inline double pattern_gain(const AntennaPattern& p, double offset_deg) { return p.gain(offset_deg); }

struct SimConfig {
  double t_s = 1.56e-12;
  double t_min = 0.0;
  std::size_t num_delays = 8501;   // M
  std::size_t num_angles = 181;    // N
  double angle_start_deg = -90.0;
  double angle_step_deg = 1.0;
  double noise_floor = 0.0;        // noise std relative to the strongest echo
  double azimuth_step_deg = 0.25;  // integration step over the pattern
  double reference_distance = 1.0;
  std::uint64_t seed = 1;
};

struct Hit {
  double distance = 0.0;
  double reflectivity = 0.0;
};

/// Nearest wall hit along a unit direction, strictly in front of the origin.
inline std::optional<Hit> raycast(const SceneMap& scene, Vec2 origin, Vec2 direction) {
  std::optional<Hit> best;
  for (const auto& s : scene.segments) {
    const Vec2 e = s.b - s.a;
    const double denom = cross(direction, e);
    if (std::abs(denom) < 1e-15) continue;  // parallel
    const Vec2 w = s.a - origin;
    const double t = cross(w, e) / denom;
    const double u = cross(w, direction) / denom;
    if (t <= 1e-12 || u < 0.0 || u > 1.0) continue;
    if (!best || t < best->distance) best = Hit{t, s.reflectivity};
  }
  return best;
}

/// Per-cell provenance of synthesized energy, used to label ghosts.
enum class CellSource : std::uint8_t { none = 0, main_lobe = 1, sidelobe_only = 2 };

struct SimScan {
  AngleDelayMatrix matrix;
  std::vector<double> truth_ranges;  // first hit along each steering angle, NaN on miss
  Grid<CellSource> sources;
};

namespace detail {
inline std::size_t azimuth_samples(const SimConfig& cfg) {
  require(cfg.azimuth_step_deg > 0.0, "simulate", "azimuth step must be positive");
  return std::size_t(std::lround(360.0 / cfg.azimuth_step_deg));
}
}  // namespace detail

/// Synthesize the angle-delay matrix seen from `pose`. For each steering
/// angle the two-way pattern weights every azimuth sample's first-bounce
/// return (reflectivity * (d_ref / d)^2) into its delay bin.
inline SimScan synthesize_scan(const SceneMap& scene, const Pose& pose, const AntennaPattern& pattern,
                               const SimConfig& cfg) {
  constexpr const char* stage = "simulate";
  require(cfg.num_angles >= 1 && cfg.num_delays >= 2, stage, "invalid matrix shape");
  require(cfg.t_s > 0.0 && cfg.t_min >= 0.0, stage, "invalid delay axis");
  require(scene.extent().contains(pose.position()), stage, "pose outside scene extent");

  const std::size_t n_az = detail::azimuth_samples(cfg);
  const std::size_t n_ang = cfg.num_angles, n_del = cfg.num_delays;

  // Returns for every azimuth sample psi_j = -180 + j * step (local frame).
  struct AzReturn {
    long bin = -1;
    double amplitude = 0.0;
  };
  std::vector<AzReturn> returns(n_az);
  for (std::size_t j = 0; j < n_az; ++j) {
    const double psi = -180.0 + cfg.azimuth_step_deg * double(j);
    const auto hit = raycast(scene, pose.position(), steering_direction(pose, deg2rad(psi)));
    if (!hit) continue;
    const double delay = 2.0 * hit->distance / kSpeedOfLight;
    const long bin = std::lround((delay - cfg.t_min) / cfg.t_s);
    if (bin < 0 || bin >= long(n_del)) continue;
    const double r = cfg.reference_distance / hit->distance;
    returns[j] = {bin, hit->reflectivity * r * r};
  }

  SimScan out;
  out.matrix.values = RealGrid(n_ang, n_del);
  out.matrix.angle_start_deg = cfg.angle_start_deg;
  out.matrix.angle_step_deg = cfg.angle_step_deg;
  out.matrix.t_min = cfg.t_min;
  out.matrix.t_s = cfg.t_s;
  out.sources = Grid<CellSource>(n_ang, n_del, CellSource::none);
  out.truth_ranges.assign(n_ang, std::numeric_limits<double>::quiet_NaN());

  const double floor = pattern.floor_linear();
  for (std::size_t n = 0; n < n_ang; ++n) {
    const double phi = cfg.angle_start_deg + cfg.angle_step_deg * double(n);
    double* row = out.matrix.values.row(n);
    for (std::size_t j = 0; j < n_az; ++j) {
      if (returns[j].bin < 0) continue;
      const double offset = -180.0 + cfg.azimuth_step_deg * double(j) - phi;
      const double main = pattern.main_lobe(offset);
      const double g = std::max(main, floor);
      const double contribution = g * g * returns[j].amplitude * cfg.azimuth_step_deg;
      if (!(contribution > 0.0)) continue;
      const auto m = std::size_t(returns[j].bin);
      row[m] += contribution;
      auto& src = out.sources(n, m);
      if (main >= floor) src = CellSource::main_lobe;
      else if (src == CellSource::none) src = CellSource::sidelobe_only;
    }
    if (const auto hit = raycast(scene, pose.position(), steering_direction(pose, deg2rad(phi))))
      out.truth_ranges[n] = hit->distance;
  }

  if (cfg.noise_floor > 0.0) {
    // Complex Gaussian noise; the seed is mixed with the pose so every scan of
    // a trajectory draws an independent but reproducible sequence.
    std::seed_seq seq{cfg.seed, std::uint64_t(std::llround(pose.x * 1e6)), std::uint64_t(std::llround(pose.y * 1e6)),
                      std::uint64_t(std::llround(pose.theta * 1e9))};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double sigma = cfg.noise_floor * out.matrix.max_value() / std::sqrt(2.0);
    for (double& v : out.matrix.values.data()) v = std::abs(std::complex<double>(v + sigma * normal(rng), sigma * normal(rng)));
  }
  return out;
}

enum class TrajectoryKind { line_boresight, line_broadside, oval };

struct TrajectoryParams {
  Vec2 start{0.0, 0.0};
  double line_step = 0.25;
  std::size_t line_positions = 9;
  double oval_length = 5.0;    // outer diameter along x
  double oval_width = 3.0;     // outer diameter along y
  double oval_straight_step = 0.40;
  double oval_curve_step_deg = 10.0;
};

/// World heading beta (counter-clockwise from +x) to the pose angle under
/// the U(theta) convention, whose boresight points along (cos, -sin)(theta).
inline double theta_from_heading(double beta) { return wrap_angle(-beta); }

inline std::vector<Pose> generate_trajectory(TrajectoryKind kind, const TrajectoryParams& p = {}) {
  constexpr const char* stage = "trajectory";
  std::vector<Pose> poses;
  if (kind != TrajectoryKind::oval) {
    require(p.line_step > 0.0 && p.line_positions > 0, stage, "line parameters must be positive");
    const double theta = kind == TrajectoryKind::line_boresight ? 0.0 : std::numbers::pi / 2.0;
    for (std::size_t i = 0; i < p.line_positions; ++i)
      poses.push_back({p.start.x + p.line_step * double(i), p.start.y, theta});
    return poses;
  }

  // Stadium: two straight runs joined by semicircles of diameter oval_width,
  // traversed counter-clockwise starting at the lower-left end of the bottom run.
  require(p.oval_length > p.oval_width && p.oval_width > 0.0, stage, "oval must be longer than wide");
  require(p.oval_straight_step > 0.0 && p.oval_curve_step_deg > 0.0, stage, "oval steps must be positive");
  const double radius = p.oval_width / 2.0;
  const double straight = p.oval_length - p.oval_width;
  const auto n_straight = std::size_t(std::lround(straight / p.oval_straight_step));
  const auto n_curve = std::size_t(std::lround(180.0 / p.oval_curve_step_deg));
  const double sx = straight / double(n_straight);
  const double dgamma = std::numbers::pi / double(n_curve);
  const Vec2 c_right{p.start.x + straight / 2.0, p.start.y}, c_left{p.start.x - straight / 2.0, p.start.y};

  for (std::size_t i = 0; i < n_straight; ++i)
    poses.push_back({c_left.x + sx * double(i), c_left.y - radius, theta_from_heading(0.0)});
  for (std::size_t i = 0; i < n_curve; ++i) {
    const double gamma = -std::numbers::pi / 2.0 + dgamma * double(i);
    poses.push_back({c_right.x + radius * std::cos(gamma), c_right.y + radius * std::sin(gamma),
                     theta_from_heading(gamma + std::numbers::pi / 2.0)});
  }
  for (std::size_t i = 0; i < n_straight; ++i)
    poses.push_back({c_right.x - sx * double(i), c_right.y + radius, theta_from_heading(std::numbers::pi)});
  for (std::size_t i = 0; i < n_curve; ++i) {
    const double gamma = std::numbers::pi / 2.0 + dgamma * double(i);
    poses.push_back({c_left.x + radius * std::cos(gamma), c_left.y + radius * std::sin(gamma),
                     theta_from_heading(gamma + std::numbers::pi / 2.0)});
  }
  return poses;
}

inline SceneMap rectangle_room(Vec2 lo, Vec2 hi, double reflectivity = 1.0) {
  return {{{{lo.x, lo.y}, {hi.x, lo.y}, reflectivity},
           {{hi.x, lo.y}, {hi.x, hi.y}, reflectivity},
           {{hi.x, hi.y}, {lo.x, hi.y}, reflectivity},
           {{lo.x, hi.y}, {lo.x, lo.y}, reflectivity}},
          std::nullopt};
}

inline void add_box(SceneMap& scene, Vec2 lo, Vec2 hi, double reflectivity) {
  for (const auto& s : rectangle_room(lo, hi, reflectivity).segments) scene.segments.push_back(s);
}

/// 10.2 m x 8.6 m room with some furniture, large enough to contain the
/// line trajectories from the origin and the oval centred on it.
inline SceneMap lab_scene() {
  SceneMap scene = rectangle_room({-5.1, -4.3}, {5.1, 4.3}, 1.0);
  add_box(scene, {1.0, 3.0}, {2.4, 3.7}, 0.8);     // desk
  add_box(scene, {-1.6, 3.2}, {-0.4, 3.7}, 0.6);   // shelf
  add_box(scene, {-4.6, 2.2}, {-4.0, 3.4}, 0.6);   // cabinet
  add_box(scene, {3.9, -3.0}, {4.5, -2.4}, 0.9);   // pillar
  add_box(scene, {-2.0, -3.8}, {-0.8, -3.2}, 0.7); // bench
  add_box(scene, {-4.2, -3.2}, {-3.8, -2.8}, 0.9); // column
  scene.segments.push_back({{4.3, -1.0}, {4.7, 1.2}, 0.5});  // slanted panel
  return scene;
}

/// One flat reflector 3 m ahead of the origin, nothing else.
/// One flat wall facing the origin at `distance` along world bearing
/// `bearing_deg`, in an open square extent around the origin.
inline SceneMap single_reflector_scene(double distance = 3.0, double half_width = 1.0, double bearing_deg = 0.0) {
  const double b = deg2rad(bearing_deg);
  const Vec2 n{std::cos(b), std::sin(b)}, t{-std::sin(b), std::cos(b)};
  const Vec2 c = distance * n;
  SceneMap scene{{{c - half_width * t, c + half_width * t, 1.0}}, std::nullopt};
  const double r = distance + half_width + 1.0;
  scene.bounds = SceneMap::Extent{{-r, -r}, {r, r}};
  return scene;
}

// ---- text formats ---------------------------------------------------------

/// Scene file: one `x1 y1 x2 y2 reflectivity` segment per line, '#' comments.
inline SceneMap parse_scene(std::istream& is) {
  SceneMap scene;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ss(line);
    std::string first;
    ss >> first;
    if (first == "extent") {
      SceneMap::Extent e;
      if (!(ss >> e.lo.x >> e.lo.y >> e.hi.x >> e.hi.y) || !(e.lo.x < e.hi.x && e.lo.y < e.hi.y))
        throw Error("scene", "line " + std::to_string(lineno) + ": expected extent xmin ymin xmax ymax");
      scene.bounds = e;
      continue;
    }
    ss.clear();
    ss.seekg(0);
    Segment s;
    if (!(ss >> s.a.x >> s.a.y >> s.b.x >> s.b.y >> s.reflectivity))
      throw Error("scene", "line " + std::to_string(lineno) + ": expected x1 y1 x2 y2 reflectivity");
    scene.segments.push_back(s);
  }
  scene.validate();
  return scene;
}

inline void write_scene(std::ostream& os, const SceneMap& scene) {
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  os << "# x1 y1 x2 y2 reflectivity\n";
  if (scene.bounds)
    os << "extent " << scene.bounds->lo.x << ' ' << scene.bounds->lo.y << ' ' << scene.bounds->hi.x << ' '
       << scene.bounds->hi.y << '\n';
  for (const auto& s : scene.segments)
    os << s.a.x << ' ' << s.a.y << ' ' << s.b.x << ' ' << s.b.y << ' ' << s.reflectivity << '\n';
}

/// Ground truth CSV: one row per (scan, steering angle) with the pose and the
/// first-hit range (empty when the beam misses).
inline void write_ground_truth(std::ostream& os, const std::vector<Pose>& poses,
                               const std::vector<std::vector<double>>& truth_ranges, const SimConfig& cfg) {
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  os << "k,x,y,theta,angle_deg,range_m\n";
  for (std::size_t k = 0; k < poses.size(); ++k)
    for (std::size_t n = 0; n < truth_ranges[k].size(); ++n) {
      os << k << ',' << poses[k].x << ',' << poses[k].y << ',' << poses[k].theta << ','
         << cfg.angle_start_deg + cfg.angle_step_deg * double(n) << ',';
      if (std::isfinite(truth_ranges[k][n])) os << truth_ranges[k][n];
      os << '\n';
    }
}

}  // namespace rslam::sim
