#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "rslam/angle_delay.hpp"
#include "rslam/geometry.hpp"

namespace rslam::map {

struct GridGeometry {
  Vec2 origin;              // world position of the lower-left corner of cell (0, 0)
  double cell_size = 0.05;  // metres
  std::size_t width = 0;    // cells along x
  std::size_t height = 0;   // cells along y

  std::size_t num_cells() const noexcept { return width * height; }
  bool operator==(const GridGeometry&) const = default;
};

struct CellIndex {
  long ix = 0;
  long iy = 0;
  friend bool operator==(CellIndex, CellIndex) = default;
  friend auto operator<=>(CellIndex, CellIndex) = default;
};

enum class EvidencePolicy {
  free_and_hit,  // cells before the return are free, the return cell is occupied
  hit_only,
};

struct UpdateOptions {
  double p_hit = 0.9;
  double clamp = 10.0;
  EvidencePolicy policy = EvidencePolicy::free_and_hit;
};

class OccupancyGrid {
 public:
  OccupancyGrid() = default;
  explicit OccupancyGrid(const GridGeometry& g) : geom_(g), log_odds_(g.num_cells(), 0.0) {
    require(g.width > 0 && g.height > 0, "map", "grid must have at least one cell");
    require(g.cell_size > 0.0, "map", "cell size must be positive");
  }

  const GridGeometry& geometry() const noexcept { return geom_; }
  const std::vector<double>& log_odds() const noexcept { return log_odds_; }
  std::vector<double>& log_odds() noexcept { return log_odds_; }

  bool contains(CellIndex c) const noexcept {
    return c.ix >= 0 && c.iy >= 0 && c.ix < long(geom_.width) && c.iy < long(geom_.height);
  }
  double& at(CellIndex c) { return log_odds_[std::size_t(c.iy) * geom_.width + std::size_t(c.ix)]; }
  double at(CellIndex c) const { return log_odds_[std::size_t(c.iy) * geom_.width + std::size_t(c.ix)]; }

  CellIndex cell_of(Vec2 p) const {
    return {long(std::floor((p.x - geom_.origin.x) / geom_.cell_size)),
            long(std::floor((p.y - geom_.origin.y) / geom_.cell_size))};
  }

 private:
  GridGeometry geom_;
  std::vector<double> log_odds_;
};

inline OccupancyGrid init_grid(const GridGeometry& g) { return OccupancyGrid(g); }

inline double logit(double p) { return std::log(p / (1.0 - p)); }
// Odds form on the positive side, so logistic(log 9) is exactly 0.9.
inline double logistic(double l) {
  if (l >= 0.0) {
    const double e = std::exp(l);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(-l));
}

/// Cells crossed by the segment a -> b in traversal order (Amanatides-Woo),
/// ending with the cell containing b. Cells are reported even outside the
/// grid; callers clip.
inline std::vector<CellIndex> traverse(const GridGeometry& g, Vec2 a, Vec2 b) {
  const double s = g.cell_size;
  const double ax = (a.x - g.origin.x) / s, ay = (a.y - g.origin.y) / s;
  const double bx = (b.x - g.origin.x) / s, by = (b.y - g.origin.y) / s;
  CellIndex c{long(std::floor(ax)), long(std::floor(ay))};
  const CellIndex end{long(std::floor(bx)), long(std::floor(by))};
  const double dx = bx - ax, dy = by - ay;
  const long step_x = dx > 0 ? 1 : (dx < 0 ? -1 : 0);
  const long step_y = dy > 0 ? 1 : (dy < 0 ? -1 : 0);
  constexpr double inf = std::numeric_limits<double>::infinity();
  // Parametric distance (t in [0, 1]) to the next vertical / horizontal grid line.
  double t_max_x = step_x > 0 ? (std::floor(ax) + 1.0 - ax) / dx : step_x < 0 ? (std::floor(ax) - ax) / dx : inf;
  double t_max_y = step_y > 0 ? (std::floor(ay) + 1.0 - ay) / dy : step_y < 0 ? (std::floor(ay) - ay) / dy : inf;
  const double t_dx = step_x ? 1.0 / std::abs(dx) : inf;
  const double t_dy = step_y ? 1.0 / std::abs(dy) : inf;

  std::vector<CellIndex> cells{c};
  const std::size_t limit = std::size_t(std::abs(end.ix - c.ix) + std::abs(end.iy - c.iy));
  while (!(c == end) && cells.size() <= limit) {
    if (t_max_x < t_max_y) {
      c.ix += step_x;
      t_max_x += t_dx;
    } else if (t_max_y < t_max_x) {
      c.iy += step_y;
      t_max_y += t_dy;
    } else {
      // Exactly through a grid corner: step both axes, the line only touches
      // the two side cells at a point.
      c.ix += step_x;
      c.iy += step_y;
      t_max_x += t_dx;
      t_max_y += t_dy;
    }
    cells.push_back(c);
  }
  return cells;
}

/// Log-odds update from one scan vector taken at `pose`. Beams without a
/// return contribute nothing.
inline void update_grid(OccupancyGrid& grid, const ScanVector& scan, const Pose& pose, const UpdateOptions& opt = {}) {
  require(std::isfinite(pose.x) && std::isfinite(pose.y) && std::isfinite(pose.theta), "map", "pose is not finite");
  require(opt.p_hit > 0.5 && opt.p_hit < 1.0, "map", "p_hit must lie in (0.5, 1)");
  const double l_hit = logit(opt.p_hit), l_free = -l_hit;
  const auto add = [&](CellIndex c, double l) {
    if (!grid.contains(c)) return;
    double& v = grid.at(c);
    v = std::clamp(v + l, -opt.clamp, opt.clamp);
  };
  for (std::size_t n = 0; n < scan.size(); ++n) {
    const double r = scan.ranges[n];
    if (!ScanVector::has_return(r)) continue;
    const Vec2 hit = local_to_world(pose, r * Vec2{std::cos(deg2rad(scan.angles_deg[n])), std::sin(deg2rad(scan.angles_deg[n]))});
    const auto cells = traverse(grid.geometry(), pose.position(), hit);
    if (opt.policy == EvidencePolicy::free_and_hit)
      for (std::size_t i = 0; i + 1 < cells.size(); ++i) add(cells[i], l_free);
    add(cells.back(), l_hit);
  }
}

inline std::vector<double> belief(const OccupancyGrid& grid) {
  std::vector<double> b(grid.log_odds().size());
  std::transform(grid.log_odds().begin(), grid.log_odds().end(), b.begin(), logistic);
  return b;
}

enum class CellState : std::uint8_t { free = 0, unknown = 128, occupied = 255 };

struct ExportThresholds {
  double occupied = 2.0;
  double free = -2.0;
};

inline std::vector<CellState> export_map(const OccupancyGrid& grid, const ExportThresholds& t = {}) {
  std::vector<CellState> out(grid.log_odds().size(), CellState::unknown);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double l = grid.log_odds()[i];
    if (l > t.occupied) out[i] = CellState::occupied;
    else if (l < t.free) out[i] = CellState::free;
  }
  return out;
}

// Files: binary PGM (P5), one byte per cell, top row = highest y; a CSV of
// log-odds in the same row order; and a key=value sidecar with the geometry.

inline void write_pgm(std::ostream& os, const OccupancyGrid& grid, const ExportThresholds& t = {}) {
  const auto& g = grid.geometry();
  const auto cells = export_map(grid, t);
  os << "P5\n" << g.width << ' ' << g.height << "\n255\n";
  for (std::size_t r = 0; r < g.height; ++r) {
    const std::size_t iy = g.height - 1 - r;
    for (std::size_t ix = 0; ix < g.width; ++ix) os.put(char(cells[iy * g.width + ix]));
  }
}

inline void write_log_odds_csv(std::ostream& os, const OccupancyGrid& grid) {
  const auto& g = grid.geometry();
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t r = 0; r < g.height; ++r) {
    const std::size_t iy = g.height - 1 - r;
    for (std::size_t ix = 0; ix < g.width; ++ix) {
      if (ix) os << ',';
      os << grid.log_odds()[iy * g.width + ix];
    }
    os << '\n';
  }
}

inline void write_header(std::ostream& os, const OccupancyGrid& grid, const ExportThresholds& t = {}) {
  const auto& g = grid.geometry();
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  os << "origin_x=" << g.origin.x << "\norigin_y=" << g.origin.y << "\ncell_size=" << g.cell_size
     << "\nwidth=" << g.width << "\nheight=" << g.height << "\nthreshold_occupied=" << t.occupied
     << "\nthreshold_free=" << t.free << "\nrow_order=top_is_max_y\n";
}

/// Writes <prefix>.pgm, <prefix>.csv and <prefix>.txt.
inline void save_map(const std::string& prefix, const OccupancyGrid& grid, const ExportThresholds& t = {}) {
  const auto open = [](const std::string& path, std::ios::openmode mode) {
    std::ofstream os(path, mode);
    if (!os) throw Error("map-export", "cannot open " + path + " for writing");
    return os;
  };
  {
    auto os = open(prefix + ".pgm", std::ios::binary);
    write_pgm(os, grid, t);
  }
  {
    auto os = open(prefix + ".csv", std::ios::out);
    write_log_odds_csv(os, grid);
  }
  auto os = open(prefix + ".txt", std::ios::out);
  write_header(os, grid, t);
}

/// Reads a grid back from the CSV and sidecar header written by save_map.
inline OccupancyGrid load_map(const std::string& prefix) {
  std::ifstream hs(prefix + ".txt");
  if (!hs) throw Error("map-export", "cannot open " + prefix + ".txt");
  GridGeometry g;
  std::string line;
  while (std::getline(hs, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq), val = line.substr(eq + 1);
    if (key == "origin_x") g.origin.x = std::stod(val);
    else if (key == "origin_y") g.origin.y = std::stod(val);
    else if (key == "cell_size") g.cell_size = std::stod(val);
    else if (key == "width") g.width = std::stoul(val);
    else if (key == "height") g.height = std::stoul(val);
  }
  OccupancyGrid grid(g);
  std::ifstream cs(prefix + ".csv");
  if (!cs) throw Error("map-export", "cannot open " + prefix + ".csv");
  for (std::size_t r = 0; r < g.height; ++r) {
    if (!std::getline(cs, line)) throw Error("map-export", "log-odds CSV has too few rows");
    std::size_t pos = 0;
    const std::size_t iy = g.height - 1 - r;
    for (std::size_t ix = 0; ix < g.width; ++ix) {
      std::size_t used = 0;
      grid.log_odds()[iy * g.width + ix] = std::stod(line.substr(pos), &used);
      pos += used + 1;
    }
  }
  return grid;
}

}  // namespace rslam::map
