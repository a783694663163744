#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "rslam/angle_delay.hpp"
#include "rslam/preprocess.hpp"

namespace rslam::channel {

struct DelaySpread {
  double tau_mean = 0.0;  // s
  double tau_rms = 0.0;   // s
};

struct AngularSpread {
  std::complex<double> phi_mean;  // power-weighted mean of e^{j phi}
  double phi_spread = 0.0;        // Fleury, dimensionless in [0, 2]

  /// sigma * 180 / pi, the small-spread reading in degrees.
  double spread_deg_equivalent() const { return rad2deg(phi_spread); }
};

struct SpreadStats {
  DelaySpread delay;
  AngularSpread angle;
  std::size_t num_paths = 0;
};

namespace detail {
inline double total_power(const PathSet& paths, const char* stage) {
  require(!paths.empty(), stage, "empty path set");
  double p = 0.0;
  for (const auto& path : paths) {
    require(path.power > 0.0 && std::isfinite(path.power), stage, "path power must be positive");
    p += path.power;
  }
  return p;
}
}  // namespace detail

inline DelaySpread delay_spread(const PathSet& paths) {
  const double p = detail::total_power(paths, "delay_spread");
  double mean = 0.0;
  for (const auto& path : paths) mean += path.power * path.delay;
  mean /= p;
  double var = 0.0;
  for (const auto& path : paths) var += path.power * (path.delay - mean) * (path.delay - mean);
  return {mean, std::sqrt(var / p)};
}

inline AngularSpread angular_spread(const PathSet& paths) {
  const double p = detail::total_power(paths, "angular_spread");
  std::complex<double> mu;
  for (const auto& path : paths) mu += path.power * std::polar(1.0, deg2rad(path.azimuth_deg));
  mu /= p;
  double var = 0.0;
  for (const auto& path : paths) var += path.power * std::norm(std::polar(1.0, deg2rad(path.azimuth_deg)) - mu);
  return {mu, std::sqrt(std::max(var / p, 0.0))};
}

inline SpreadStats spread_stats(const PathSet& paths) {
  return {delay_spread(paths), angular_spread(paths), paths.size()};
}

/// Empirical CDF with right-continuous steps at the sorted samples.
class Ecdf {
 public:
  Ecdf() = default;
  explicit Ecdf(std::vector<double> values) : sorted_(std::move(values)) {
    for (double v : sorted_) require(!std::isnan(v), "ecdf", "NaN sample");
    std::sort(sorted_.begin(), sorted_.end());
  }

  double operator()(double x) const {
    if (sorted_.empty()) return 0.0;
    const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
    return double(it - sorted_.begin()) / double(sorted_.size());
  }

  const std::vector<double>& sorted() const noexcept { return sorted_; }

  /// (x_i, i/n) step points for plotting.
  std::vector<std::pair<double, double>> points() const {
    std::vector<std::pair<double, double>> out;
    out.reserve(sorted_.size());
    for (std::size_t i = 0; i < sorted_.size(); ++i) out.emplace_back(sorted_[i], double(i + 1) / double(sorted_.size()));
    return out;
  }

 private:
  std::vector<double> sorted_;
};

inline Ecdf ecdf(std::vector<double> values) { return Ecdf(std::move(values)); }

struct LognormalFit {
  double mu = 0.0;
  double sigma = 0.0;
};

/// Mean and population standard deviation of log(values).
inline LognormalFit lognormal_fit(std::span<const double> values) {
  require(!values.empty(), "lognormal_fit", "no samples");
  double mean = 0.0;
  for (double v : values) {
    require(v > 0.0 && std::isfinite(v), "lognormal_fit", "samples must be positive and finite");
    mean += std::log(v);
  }
  mean /= double(values.size());
  double var = 0.0;
  for (double v : values) var += (std::log(v) - mean) * (std::log(v) - mean);
  return {mean, std::sqrt(var / double(values.size()))};
}

struct PositionStats {
  std::size_t index = 0;
  std::optional<SpreadStats> stats;  // empty when the frame yielded no paths
};

struct SpreadReport {
  std::vector<PositionStats> positions;
  double tau_rms_aggregate = 0.0;          // RMS over positions of tau_rms
  double phi_spread_aggregate = 0.0;       // RMS over positions of sigma_phi
  std::size_t used = 0;

  double phi_spread_aggregate_deg() const { return rad2deg(phi_spread_aggregate); }
};

inline SpreadReport scenario_spread_report(std::span<const Frame> frames,
                                           PathDetection mode = PathDetection::every_cell) {
  SpreadReport r;
  double st = 0.0, sp = 0.0;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    PositionStats ps{i, std::nullopt};
    const PathSet paths = extract_paths(frames[i], mode);
    if (!paths.empty()) {
      ps.stats = spread_stats(paths);
      st += ps.stats->delay.tau_rms * ps.stats->delay.tau_rms;
      sp += ps.stats->angle.phi_spread * ps.stats->angle.phi_spread;
      ++r.used;
    }
    r.positions.push_back(ps);
  }
  if (r.used) {
    r.tau_rms_aggregate = std::sqrt(st / double(r.used));
    r.phi_spread_aggregate = std::sqrt(sp / double(r.used));
  }
  return r;
}

}  // namespace rslam::channel
