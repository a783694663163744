#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "rslam/core.hpp"

namespace rslam {

/// Magnitudes |h(n, m)| of the sampled backscatter CIR for N steering angles
/// (rows) and M delay samples (columns). Row n looks along
/// angle_start + n * angle_step degrees; column m is the two-way delay
/// t_min + m * t_s, i.e. range d_min + m * d.
struct AngleDelayMatrix {
  RealGrid values;
  double angle_start_deg = -90.0;
  double angle_step_deg = 1.0;
  double t_min = 0.0;
  double t_s = 1.0;

  std::size_t num_angles() const noexcept { return values.rows(); }
  std::size_t num_delays() const noexcept { return values.cols(); }

  double angle_deg(std::size_t n) const noexcept { return angle_start_deg + angle_step_deg * double(n); }
  double delay(std::size_t m) const noexcept { return t_min + t_s * double(m); }

  double range_min() const noexcept { return kSpeedOfLight * t_min / 2.0; }
  double range_step() const noexcept { return kSpeedOfLight * t_s / 2.0; }
  double range(std::size_t m) const noexcept { return range_min() + range_step() * double(m); }
  double range_max() const noexcept { return range(num_delays() - 1); }

  std::vector<double> angles_deg() const {
    std::vector<double> out(num_angles());
    for (std::size_t n = 0; n < out.size(); ++n) out[n] = angle_deg(n);
    return out;
  }

  bool same_axes(const AngleDelayMatrix& o) const noexcept {
    return values.rows() == o.values.rows() && values.cols() == o.values.cols() &&
           angle_start_deg == o.angle_start_deg && angle_step_deg == o.angle_step_deg &&
           t_min == o.t_min && t_s == o.t_s;
  }

  double max_value() const {
    return values.empty() ? 0.0 : *std::max_element(values.data().begin(), values.data().end());
  }

  bool operator==(const AngleDelayMatrix&) const = default;

  /// Throws if the invariants (shape, axes, nonnegative finite values) fail.
  void validate(const char* stage = "angle-delay") const {
    require(values.rows() >= 1 && values.cols() >= 2, stage, "matrix needs at least 1 angle and 2 delay samples");
    require(angle_step_deg > 0.0, stage, "angle step must be positive");
    require(t_s > 0.0, stage, "sampling time must be positive");
    require(t_min >= 0.0, stage, "minimum delay must be nonnegative");
    for (double v : values.data())
      require(std::isfinite(v) && v >= 0.0, stage, "values must be finite and nonnegative");
  }
};

/// Angle-delay matrix after ghost mitigation and noise masking, tagged with
/// the scan index k it was acquired at.
struct Frame : AngleDelayMatrix {
  std::size_t scan_index = 0;

  Frame() = default;
  explicit Frame(AngleDelayMatrix m, std::size_t k = 0) : AngleDelayMatrix(std::move(m)), scan_index(k) {}

  bool operator==(const Frame&) const = default;
};

/// Lidar-like scan: one range per steering angle, NaN where the row had no return.
struct ScanVector {
  std::vector<double> ranges;
  std::vector<double> angles_deg;

  static constexpr double no_return() noexcept { return std::numeric_limits<double>::quiet_NaN(); }
  static bool has_return(double r) noexcept { return std::isfinite(r); }

  std::size_t size() const noexcept { return ranges.size(); }
  std::size_t returns() const noexcept {
    return std::size_t(std::count_if(ranges.begin(), ranges.end(), [](double r) { return has_return(r); }));
  }
};

struct Path {
  double power = 0.0;    // alpha^2, linear
  double delay = 0.0;    // seconds
  double azimuth_deg = 0.0;
};

using PathSet = std::vector<Path>;

/// Gather |cir| into an angle-delay matrix. Angles must be uniformly spaced and
/// strictly increasing (a single angle is accepted with a unit step).
inline AngleDelayMatrix build_angle_delay_matrix(std::span<const std::vector<std::complex<double>>> cirs,
                                                 double t_min, double t_s, std::span<const double> angles_deg) {
  constexpr const char* stage = "build_angle_delay_matrix";
  require(!cirs.empty(), stage, "no CIRs given");
  require(cirs.size() == angles_deg.size(), stage, "number of CIRs and angles differ");
  const std::size_t m = cirs.front().size();
  require(m >= 1, stage, "empty CIR");
  for (const auto& c : cirs) require(c.size() == m, stage, "ragged CIR lengths");
  require(t_s > 0.0 && t_min >= 0.0, stage, "invalid delay axis");

  double step = 1.0;
  if (angles_deg.size() >= 2) {
    step = angles_deg[1] - angles_deg[0];
    require(step > 0.0, stage, "angles must be strictly increasing");
    for (std::size_t n = 1; n < angles_deg.size(); ++n) {
      const double expected = angles_deg[0] + step * double(n);
      require(std::abs(angles_deg[n] - expected) <= 1e-9 * std::max(1.0, std::abs(step) * double(n)), stage,
              "angle grid is not uniform");
    }
  }

  AngleDelayMatrix out;
  out.values = RealGrid(cirs.size(), m);
  out.angle_start_deg = angles_deg[0];
  out.angle_step_deg = step;
  out.t_min = t_min;
  out.t_s = t_s;
  for (std::size_t n = 0; n < cirs.size(); ++n)
    for (std::size_t k = 0; k < m; ++k) out.values(n, k) = std::abs(cirs[n][k]);
  return out;
}

}  // namespace rslam
