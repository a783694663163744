#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

#include "rslam/angle_delay.hpp"
#include "rslam/fft.hpp"

namespace rslam::ingest {

enum class Window { none, hann };

struct CirResult {
  std::vector<Complex> samples;
  double t_s = 0.0;  // s
};

/// Frequency points must be uniform; `step_hz` is the sweep step.
/// fft_size = 0 keeps P points; a larger size zero-pads the sweep, which
/// interpolates the delay axis to t_s = 1 / (fft_size * step_hz).
inline CirResult cfr_to_cir(std::span<const Complex> cfr, Window window, double step_hz, std::size_t fft_size = 0) {
  constexpr const char* stage = "cfr_to_cir";
  require(cfr.size() >= 2, stage, "need at least two frequency points");
  require(step_hz > 0.0 && std::isfinite(step_hz), stage, "frequency step must be positive");
  const std::size_t p = cfr.size();
  const std::size_t n = fft_size ? fft_size : p;
  require(n >= p, stage, "fft size smaller than the sweep");
  std::vector<Complex> buf(n);
  for (std::size_t i = 0; i < p; ++i) {
    double w = 1.0;
    if (window == Window::hann) w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * double(i) / double(p - 1));
    buf[i] = w * cfr[i];
  }
  return {fft::transform(std::move(buf), true), 1.0 / (double(n) * step_hz)};
}

/// Checks that a measured frequency axis is uniform and returns its step.
inline double uniform_step(std::span<const double> freqs_hz) {
  require(freqs_hz.size() >= 2, "cfr_to_cir", "need at least two frequency points");
  const double step = (freqs_hz.back() - freqs_hz.front()) / double(freqs_hz.size() - 1);
  require(step > 0.0, "cfr_to_cir", "frequencies must increase");
  for (std::size_t i = 1; i < freqs_hz.size(); ++i)
    require(std::abs(freqs_hz[i] - freqs_hz[i - 1] - step) <= 1e-6 * step, "cfr_to_cir", "non-uniform frequency grid");
  return step;
}

struct InterpolationResult {
  std::vector<std::vector<Complex>> cirs;
  std::size_t clamped = 0;  // target angles outside the coarse hull
};

/// Complex linear interpolation per delay bin between adjacent coarse angles.
/// Targets outside the coarse hull take the nearest endpoint.
inline InterpolationResult interpolate_angles(std::span<const std::vector<Complex>> cirs, std::span<const double> coarse_deg,
                                              std::span<const double> target_deg) {
  constexpr const char* stage = "interpolate_angles";
  require(!cirs.empty() && cirs.size() == coarse_deg.size(), stage, "CIR count does not match the coarse grid");
  const std::size_t m = cirs.front().size();
  for (const auto& c : cirs) require(c.size() == m, stage, "ragged CIR lengths");
  for (std::size_t i = 1; i < coarse_deg.size(); ++i)
    require(coarse_deg[i] > coarse_deg[i - 1], stage, "coarse angles must increase");

  InterpolationResult out;
  out.cirs.reserve(target_deg.size());
  for (double a : target_deg) {
    if (a <= coarse_deg.front() || a >= coarse_deg.back()) {
      if (a < coarse_deg.front() || a > coarse_deg.back()) ++out.clamped;
      out.cirs.push_back(a <= coarse_deg.front() ? cirs.front() : cirs.back());
      continue;
    }
    const std::size_t hi = std::size_t(std::upper_bound(coarse_deg.begin(), coarse_deg.end(), a) - coarse_deg.begin());
    const std::size_t lo = hi - 1;
    const double w = (a - coarse_deg[lo]) / (coarse_deg[hi] - coarse_deg[lo]);
    std::vector<Complex> row(m);
    for (std::size_t j = 0; j < m; ++j) row[j] = (1.0 - w) * cirs[lo][j] + w * cirs[hi][j];
    out.cirs.push_back(std::move(row));
  }
  return out;
}

inline std::vector<double> angle_grid(double start_deg, double stop_deg, double step_deg) {
  require(step_deg > 0.0 && stop_deg >= start_deg, "angle_grid", "invalid angle grid");
  const std::size_t n = std::size_t(std::llround((stop_deg - start_deg) / step_deg)) + 1;
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = start_deg + step_deg * double(i);
  return g;
}

}  // namespace rslam::ingest
