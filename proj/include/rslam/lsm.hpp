#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "rslam/angle_delay.hpp"
#include "rslam/geometry.hpp"
#include "rslam/pose.hpp"

namespace rslam {

struct LsmOptions {
  double cell_size = 0.02;     // translation step and likelihood-grid resolution, m
  int search_x = 25;           // +- cells
  int search_y = 25;           // +- cells
  int search_theta = 15;       // +- angular bins
  double angle_step_deg = 1.0; // rotation bin
  double sigma = 0.05;         // likelihood blur, m
};

/// Smoothed hit likelihood of one scan: every return deposits a Gaussian
/// bump exp(-r^2 / 2 sigma^2) and overlapping bumps keep the maximum.
class LikelihoodGrid {
 public:
  LikelihoodGrid(const std::vector<Vec2>& points, double cell_size, double sigma, double margin)
      : cell_(cell_size) {
    double r = 0.0;
    for (const auto& p : points) r = std::max({r, std::abs(p.x), std::abs(p.y)});
    half_ = long(std::ceil((r + margin) / cell_)) + 1;
    side_ = std::size_t(2 * half_ + 1);
    values_.assign(side_ * side_, 0.0);
    const long reach = long(std::ceil(3.0 * sigma / cell_));
    for (const auto& p : points) {
      const long cx = long(std::lround(p.x / cell_)), cy = long(std::lround(p.y / cell_));
      for (long dy = -reach; dy <= reach; ++dy)
        for (long dx = -reach; dx <= reach; ++dx) {
          const double ex = double(cx + dx) * cell_ - p.x, ey = double(cy + dy) * cell_ - p.y;
          const double v = std::exp(-(ex * ex + ey * ey) / (2.0 * sigma * sigma));
          if (!inside(cx + dx, cy + dy)) continue;
          double& slot = values_[index(cx + dx, cy + dy)];
          slot = std::max(slot, v);
        }
    }
  }

  /// Nearest-cell lookup; zero outside.
  double operator()(Vec2 p) const {
    const long ix = long(std::lround(p.x / cell_)), iy = long(std::lround(p.y / cell_));
    return inside(ix, iy) ? values_[index(ix, iy)] : 0.0;
  }

 private:
  bool inside(long ix, long iy) const { return std::abs(ix) <= half_ && std::abs(iy) <= half_; }
  std::size_t index(long ix, long iy) const { return std::size_t(iy + half_) * side_ + std::size_t(ix + half_); }

  double cell_;
  long half_ = 0;
  std::size_t side_ = 0;
  std::vector<double> values_;
};

namespace detail {
/// Local Cartesian hit points, sorted so the result does not depend on the
/// order of (angle, range) pairs.
inline std::vector<Vec2> scan_points(const ScanVector& s) {
  std::vector<std::pair<double, double>> pairs;
  for (std::size_t n = 0; n < s.size(); ++n)
    if (ScanVector::has_return(s.ranges[n])) pairs.emplace_back(s.angles_deg[n], s.ranges[n]);
  std::sort(pairs.begin(), pairs.end());
  std::vector<Vec2> pts;
  pts.reserve(pairs.size());
  for (const auto& [a, r] : pairs) pts.push_back({r * std::cos(deg2rad(a)), r * std::sin(deg2rad(a))});
  return pts;
}

inline double lsm_score(const LikelihoodGrid& grid, const std::vector<Vec2>& rotated, Vec2 shift) {
  double s = 0.0;
  for (const auto& p : rotated) s += grid(p - shift);
  return s;
}

inline Vec2 rotate(Vec2 p, double rad) {
  const double c = std::cos(rad), s = std::sin(rad);
  return {c * p.x - s * p.y, s * p.x + c * p.y};
}
}  // namespace detail

struct LsmSearchResult {
  int ix = 0, iy = 0, itheta = 0;
  double score = -1.0;
};

/// Exhaustive scan over the window. Candidates are visited in (theta, x, y)
/// order and only a strictly better score replaces the incumbent.
inline LsmSearchResult lsm_search(const LikelihoodGrid& grid, const std::vector<Vec2>& prev_points,
                                  const LsmOptions& opt) {
  LsmSearchResult best;
  std::vector<Vec2> rotated(prev_points.size());
  for (int b = -opt.search_theta; b <= opt.search_theta; ++b) {
    const double a = deg2rad(double(b) * opt.angle_step_deg);
    for (std::size_t i = 0; i < prev_points.size(); ++i) rotated[i] = detail::rotate(prev_points[i], a);
    for (int i = -opt.search_x; i <= opt.search_x; ++i)
      for (int j = -opt.search_y; j <= opt.search_y; ++j) {
        // R(a) (p - t) = R(a) p - R(a) t
        const Vec2 shift = detail::rotate({double(i) * opt.cell_size, double(j) * opt.cell_size}, a);
        const double s = detail::lsm_score(grid, rotated, shift);
        if (s > best.score) best = {i, j, b, s};
      }
  }
  return best;
}

/// Relative pose from k-1 to k by matching the previous scan against the
/// current scan's likelihood grid. q is the best score over the self-match
/// score of s_k, clamped to [0, 1].
inline RelativePose estimate_relative_pose_lsm(const ScanVector& sk, const ScanVector& skm1, const LsmOptions& opt = {}) {
  constexpr const char* stage = "lsm";
  require(opt.cell_size > 0.0 && opt.sigma > 0.0 && opt.angle_step_deg > 0.0, stage, "invalid LSM options");
  require(opt.search_x >= 0 && opt.search_y >= 0 && opt.search_theta >= 0, stage, "search window must be nonnegative");
  const auto cur = detail::scan_points(sk), prev = detail::scan_points(skm1);
  if (cur.empty() || prev.empty()) return {};
  const double reach = std::hypot(opt.search_x * opt.cell_size, opt.search_y * opt.cell_size) + 3.0 * opt.sigma;
  const LikelihoodGrid grid(cur, opt.cell_size, opt.sigma, reach);
  const double self = detail::lsm_score(grid, cur, {});
  const auto best = lsm_search(grid, prev, opt);
  RelativePose r;
  r.dx = double(best.ix) * opt.cell_size;
  r.dy = double(best.iy) * opt.cell_size;
  r.dtheta_deg = double(best.itheta) * opt.angle_step_deg;
  r.q = self > 0.0 ? std::clamp(best.score / self, 0.0, 1.0) : 0.0;
  return r;
}

}  // namespace rslam
