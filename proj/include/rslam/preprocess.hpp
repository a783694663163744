#pragma once

#include <algorithm>
#include <cstddef>

#include "rslam/angle_delay.hpp"

namespace rslam {

namespace detail {
inline void check_threshold(double eta, const char* stage) {
  require(eta > 0.0 && eta <= 1.0, stage, "threshold must lie in (0, 1]");
}
}  // namespace detail

/// Ghost-effect mitigation. For every delay column, entries below
/// eta_cl times the column maximum are zeroed. Sidelobe echoes land at the
/// same range as the true echo but with lower level, so they fall below the
/// per-range threshold while the column maximum always survives.
inline AngleDelayMatrix gem(AngleDelayMatrix h, double eta_cl) {
  detail::check_threshold(eta_cl, "gem");
  auto& v = h.values;
  for (std::size_t m = 0; m < v.cols(); ++m) {
    double col_max = 0.0;
    for (std::size_t n = 0; n < v.rows(); ++n) col_max = std::max(col_max, v(n, m));
    const double xi = eta_cl * col_max;
    for (std::size_t n = 0; n < v.rows(); ++n)
      if (v(n, m) < xi) v(n, m) = 0.0;
  }
  return h;
}

/// Noise masking against the global maximum.
inline AngleDelayMatrix nm_mask(AngleDelayMatrix h, double eta_cf) {
  detail::check_threshold(eta_cf, "nm");
  const double xi = eta_cf * h.max_value();
  for (double& x : h.values.data())
    if (x < xi) x = 0.0;
  return h;
}

inline Frame nm(AngleDelayMatrix h, double eta_cf, std::size_t scan_index = 0) {
  return Frame(nm_mask(std::move(h), eta_cf), scan_index);
}

/// GEM followed by NM, the order of the processing chain.
inline Frame make_frame(AngleDelayMatrix h, double eta_cl, double eta_cf, std::size_t scan_index = 0) {
  return nm(gem(std::move(h), eta_cl), eta_cf, scan_index);
}

/// Per row, the range of the first delay sample reaching eta_sv times the
/// row maximum. Rows without energy report ScanVector::no_return().
inline ScanVector extract_scan_vector(const AngleDelayMatrix& f, double eta_sv) {
  detail::check_threshold(eta_sv, "extract_scan_vector");
  ScanVector s;
  s.ranges.assign(f.num_angles(), ScanVector::no_return());
  s.angles_deg = f.angles_deg();
  for (std::size_t n = 0; n < f.num_angles(); ++n) {
    const double* row = f.values.row(n);
    const double f_max = *std::max_element(row, row + f.num_delays());
    if (!(f_max > 0.0)) continue;
    const double xi = eta_sv * f_max;
    for (std::size_t m = 0; m < f.num_delays(); ++m) {
      if (row[m] >= xi) {
        s.ranges[n] = f.range(m);
        break;
      }
    }
  }
  return s;
}

enum class PathDetection {
  every_cell,      // each surviving nonzero cell is one path
  delay_peaks,     // only cells that are local maxima along their row
};

/// Paths detected in a cleaned frame: power |h|^2, two-way delay, azimuth.
inline PathSet extract_paths(const AngleDelayMatrix& f, PathDetection mode = PathDetection::every_cell) {
  PathSet paths;
  const auto& v = f.values;
  for (std::size_t n = 0; n < v.rows(); ++n) {
    const double* row = v.row(n);
    for (std::size_t m = 0; m < v.cols(); ++m) {
      const double a = row[m];
      if (!(a > 0.0)) continue;
      if (mode == PathDetection::delay_peaks) {
        const double left = m > 0 ? row[m - 1] : 0.0;
        const double right = m + 1 < v.cols() ? row[m + 1] : 0.0;
        if (a < left || a < right) continue;
        if (a == left && m > 0) continue;  // plateau: keep the first sample only
      }
      paths.push_back({a * a, f.delay(m), f.angle_deg(n)});
    }
  }
  return paths;
}

}  // namespace rslam
