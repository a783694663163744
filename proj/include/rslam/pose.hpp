#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>

#include "rslam/angle_delay.hpp"
#include "rslam/fft.hpp"
#include "rslam/geometry.hpp"
#include "rslam/preprocess.hpp"

namespace rslam {

/// Pose of scan k in the local frame of scan k-1. Translation in metres,
/// rotation in degrees, plus the estimator's quality indicator in [0, 1].
///
/// Convention: a point p seen from k-1 is seen from k at Rot(dtheta) (p - t),
/// t = (dx, dy), Rot the counter-clockwise rotation in the sensor's
/// (boresight, left) axes. Compose with track::compose_pose.
struct RelativePose {
  double dx = 0.0;
  double dy = 0.0;
  double dtheta_deg = 0.0;
  double q = 0.0;
};

/// W x W image with the sensor at cell (W/2, W/2); columns run along the
/// boresight (x), rows along +90 degrees (y).
struct CartesianImage {
  RealGrid values;
  double cell_size = 0.0;

  std::size_t width() const noexcept { return values.rows(); }
};

/// How a frame becomes the Cartesian registration image.
///  cells:   every nonzero cell, weighted by its value.
///  contour: one return per steering angle (as in a scan vector), joined to
///           the neighbouring angle's return by a line when the ranges are
///           within contour_gap. Beam smearing is removed and walls become
///           continuous lines.
enum class Rendering { cells, contour };

struct RegistrationOptions {
  double cell_size = 0.02;      // metres per Cartesian cell
  std::size_t image_size = 1024;  // W, even
  bool hann_window = true;
  bool subpixel = false;        // parabolic peak refinement
  bool log_spectrum = true;     // log(1+|F|) before polar resampling (FM only)
  bool angular_fill = false;    // cells: interpolate between steering angles
  double edge_taper_deg = 0.0;  // raised-cosine fade towards the first/last steering angle
  bool range_compensation = false;  // cells: weight samples by range^2 to undo spreading loss
  Rendering rendering = Rendering::contour;
  double contour_eta = 0.9;     // per-angle threshold for the contour return
  double contour_gap = 0.2;     // metres; larger range jumps are not joined
  double translation_lowpass = 0.05;  // Gaussian weight on the cross-power spectrum, cycles/sample; 0 = off
  double rotation_lowpass = 0.15;
  bool polar_compress = true;   // SFM: correlate log(1 + 1000 r^2 v / max) instead of v
};

/// Circular shift (rows, cols) taking image a onto image b, with quality.
struct ShiftEstimate {
  double rows = 0.0;
  double cols = 0.0;
  double q = 0.0;
};

struct RotationEstimate {
  double dtheta_deg = 0.0;
  double q = 0.0;
};

namespace detail {

inline double signed_shift(std::size_t idx, std::size_t n) {
  return idx > n / 2 ? double(idx) - double(n) : double(idx);
}

/// Multiply a spectrum by exp(-|f|^2 / (2 sigma^2)), f in cycles per sample.
/// Real, symmetric and positive, so the correlation peak stays on the shift.
inline void apply_lowpass(ComplexGrid& spec, double sigma) {
  const auto freq = [](std::size_t i, std::size_t n) { return signed_shift(i, n) / double(n); };
  for (std::size_t r = 0; r < spec.rows(); ++r) {
    const double fr = freq(r, spec.rows());
    for (std::size_t c = 0; c < spec.cols(); ++c) {
      const double fc = freq(c, spec.cols());
      spec(r, c) *= std::exp(-(fr * fr + fc * fc) / (2.0 * sigma * sigma));
    }
  }
}

inline double parabolic_offset(double left, double centre, double right) {
  const double denom = left - 2.0 * centre + right;
  if (!(std::abs(denom) > 1e-15)) return 0.0;
  return std::clamp(0.5 * (left - right) / denom, -0.5, 0.5);
}

}  // namespace detail

/// Scatter the polar frame onto a Cartesian grid: each nonzero cell lands on
/// the nearest Cartesian cell, collisions keep the maximum. With
/// angular_fill the gap between adjacent steering angles is filled with
/// linearly interpolated samples spaced at most half a cell apart, so the
/// image carries no sensor-fixed ray pattern.
inline CartesianImage polar_to_cartesian(const AngleDelayMatrix& f, double cell_size, std::size_t width,
                                         bool angular_fill = false) {
  constexpr const char* stage = "polar_to_cartesian";
  require(cell_size > 0.0, stage, "cell size must be positive");
  require(width >= 2 && width % 2 == 0, stage, "image size must be even");
  const double half_extent = double(width / 2) * cell_size;
  require(half_extent > f.range_min(), stage, "image too small to contain the minimum range");

  CartesianImage img{RealGrid(width, width), cell_size};
  const long half = long(width / 2);
  const auto deposit = [&](double d, double phi, double value) {
    const long col = half + std::lround(d * std::cos(phi) / cell_size);
    const long r = half + std::lround(d * std::sin(phi) / cell_size);
    if (col < 0 || r < 0 || col >= long(width) || r >= long(width)) return;
    double& cell = img.values(std::size_t(r), std::size_t(col));
    cell = std::max(cell, value);
  };
  const double step = deg2rad(f.angle_step_deg);
  const std::size_t n_ang = f.num_angles();
  for (std::size_t n = 0; n < n_ang; ++n) {
    const double phi = deg2rad(f.angle_deg(n));
    const double* row = f.values.row(n);
    const double* next = (angular_fill && n + 1 < n_ang) ? f.values.row(n + 1) : nullptr;
    for (std::size_t m = 0; m < f.num_delays(); ++m) {
      const double v0 = row[m];
      const double v1 = next ? next[m] : 0.0;
      if (!(v0 > 0.0) && !(v1 > 0.0)) continue;
      const double d = f.range(m);
      if (!next) {
        deposit(d, phi, v0);
        continue;
      }
      const auto sub = std::max<std::size_t>(1, std::size_t(std::ceil(d * step / (0.5 * cell_size))));
      for (std::size_t s = 0; s < sub; ++s) {
        const double t = double(s) / double(sub);
        const double v = (1.0 - t) * v0 + t * v1;
        if (v > 0.0) deposit(d, phi + t * step, v);
      }
    }
  }
  return img;
}

/// Draw the per-angle returns of a frame as a polyline image. weights scale
/// each angle's return (empty means 1).
inline CartesianImage contour_to_cartesian(const AngleDelayMatrix& f, double cell_size, std::size_t width, double eta,
                                           double max_gap, const std::vector<double>& weights = {}) {
  constexpr const char* stage = "contour_to_cartesian";
  require(cell_size > 0.0, stage, "cell size must be positive");
  require(width >= 2 && width % 2 == 0, stage, "image size must be even");
  const ScanVector scan = extract_scan_vector(f, eta);

  CartesianImage img{RealGrid(width, width), cell_size};
  const long half = long(width / 2);
  const auto deposit = [&](Vec2 p, double value) {
    const long col = half + std::lround(p.x / cell_size);
    const long r = half + std::lround(p.y / cell_size);
    if (col < 0 || r < 0 || col >= long(width) || r >= long(width)) return;
    double& cell = img.values(std::size_t(r), std::size_t(col));
    cell = std::max(cell, value);
  };
  const auto point = [&](std::size_t n) {
    const double phi = deg2rad(scan.angles_deg[n]);
    return Vec2{scan.ranges[n] * std::cos(phi), scan.ranges[n] * std::sin(phi)};
  };
  const auto weight = [&](std::size_t n) { return weights.empty() ? 1.0 : weights[n]; };
  for (std::size_t n = 0; n < scan.size(); ++n) {
    if (!ScanVector::has_return(scan.ranges[n])) continue;
    const Vec2 a = point(n);
    deposit(a, weight(n));
    if (n + 1 >= scan.size() || !ScanVector::has_return(scan.ranges[n + 1])) continue;
    if (std::abs(scan.ranges[n + 1] - scan.ranges[n]) > max_gap) continue;
    const Vec2 b = point(n + 1);
    const auto sub = std::max<std::size_t>(1, std::size_t(std::ceil((b - a).norm() / (0.5 * cell_size))));
    for (std::size_t s = 1; s <= sub; ++s) {
      const double t = double(s) / double(sub);
      deposit(a + t * (b - a), (1.0 - t) * weight(n) + t * weight(n + 1));
    }
  }
  return img;
}

/// Separable periodic Hann window peaking at the image centre.
inline void apply_hann(RealGrid& img) {
  const auto weights = [](std::size_t n) {
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * double(i) / double(n)));
    return w;
  };
  const auto wr = weights(img.rows()), wc = weights(img.cols());
  for (std::size_t r = 0; r < img.rows(); ++r)
    for (std::size_t c = 0; c < img.cols(); ++c) img(r, c) *= wr[r] * wc[c];
}

/// Normalised cross-power spectrum a * conj(b) / |a * conj(b)|. Bins whose
/// product magnitude is below 1e-12 of the mean product magnitude are set to 0.
inline ComplexGrid cross_power_spectrum(const ComplexGrid& a, const ComplexGrid& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "cross_power_spectrum", "spectrum shapes differ");
  ComplexGrid out(a.rows(), a.cols());
  double mean = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    out.data()[i] = a.data()[i] * std::conj(b.data()[i]);
    mean += std::abs(out.data()[i]);
  }
  mean /= double(std::max<std::size_t>(a.size(), 1));
  const double eps = 1e-12 * mean;
  for (auto& z : out.data()) {
    const double mag = std::abs(z);
    z = (mag > eps && mag > 0.0) ? z / mag : Complex{};
  }
  return out;
}

/// Peak of the inverse-transformed cross-power spectrum of two spectra.
/// q is the peak amplitude relative to the largest value the surface can
/// reach (the mean modulus of the cross-power spectrum), so identical inputs
/// give q = 1.
inline ShiftEstimate phase_correlation_spectra(const ComplexGrid& spec_a, const ComplexGrid& spec_b,
                                               bool subpixel = false, double lowpass_sigma = 0.0) {
  ComplexGrid cps = cross_power_spectrum(spec_b, spec_a);
  if (lowpass_sigma > 0.0) detail::apply_lowpass(cps, lowpass_sigma);
  double ceiling = 0.0;
  for (const auto& z : cps.data()) ceiling += std::abs(z);
  ceiling /= double(std::max<std::size_t>(cps.size(), 1));
  if (!(ceiling > 0.0)) return {};

  const ComplexGrid corr = fft::inverse(std::move(cps));
  std::size_t best = 0;
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < corr.size(); ++i) {
    const double v = corr.data()[i].real();
    if (v > peak) {
      peak = v;
      best = i;
    }
  }
  const std::size_t rows = corr.rows(), cols = corr.cols();
  const std::size_t br = best / cols, bc = best % cols;
  ShiftEstimate est{detail::signed_shift(br, rows), detail::signed_shift(bc, cols),
                    std::clamp(peak / ceiling, 0.0, 1.0)};
  if (subpixel) {
    const auto at = [&](std::size_t r, std::size_t c) { return corr((r + rows) % rows, (c + cols) % cols).real(); };
    if (rows >= 3) est.rows += detail::parabolic_offset(at(br + rows - 1, bc), peak, at(br + 1, bc));
    if (cols >= 3) est.cols += detail::parabolic_offset(at(br, bc + cols - 1), peak, at(br, bc + 1));
  }
  return est;
}

/// Shift (rows, cols) such that b(r, c) ~ a(r - rows, c - cols), circularly.
inline ShiftEstimate phase_correlation(const RealGrid& a, const RealGrid& b, bool subpixel = false,
                                       double lowpass_sigma = 0.0) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "phase_correlation", "image shapes differ");
  return phase_correlation_spectra(fft::forward(a), fft::forward(b), subpixel, lowpass_sigma);
}

/// Rotate a frame about the sensor by whole angular bins (rows move
/// circularly by round(dtheta / step)).
inline Frame rotate_frame(const Frame& f, double dtheta_deg) {
  const std::size_t n = f.num_angles();
  Frame out = f;
  if (n == 0) return out;
  const long shift = std::lround(dtheta_deg / f.angle_step_deg);
  const long rows = long(n);
  const std::size_t s = std::size_t(((shift % rows) + rows) % rows);
  if (s == 0) return out;
  const std::size_t m = f.num_delays();
  for (std::size_t r = 0; r < n; ++r) std::copy(f.values.row(r), f.values.row(r) + m, out.values.row((r + s) % n));
  return out;
}

/// Magnitude spectrum resampled on (angle, radius): rows are angles
/// 0, step, ... < 180 degrees, columns radii 0 .. W/2 - 1 in frequency bins.
/// The lower half-plane is redundant by point symmetry.
inline RealGrid spectrum_to_polar(const RealGrid& centred_magnitude, double angle_step_deg) {
  const std::size_t w = centred_magnitude.rows();
  const std::size_t n_angles = std::size_t(std::lround(180.0 / angle_step_deg));
  const std::size_t n_radii = w / 2;
  RealGrid polar(n_angles, n_radii);
  const double c0 = double(w / 2);
  for (std::size_t a = 0; a < n_angles; ++a) {
    const double alpha = deg2rad(angle_step_deg * double(a));
    const double ca = std::cos(alpha), sa = std::sin(alpha);
    for (std::size_t j = 0; j < n_radii; ++j) {
      const double x = c0 + double(j) * ca;
      const double y = c0 + double(j) * sa;
      const double fx = std::floor(x), fy = std::floor(y);
      const long x0 = long(fx), y0 = long(fy);
      if (x0 < 0 || y0 < 0 || x0 + 1 >= long(w) || y0 + 1 >= long(w)) continue;
      const double tx = x - fx, ty = y - fy;
      const auto v = [&](long r, long c) { return centred_magnitude(std::size_t(r), std::size_t(c)); };
      polar(a, j) = (1 - ty) * ((1 - tx) * v(y0, x0) + tx * v(y0, x0 + 1)) +
                    ty * ((1 - tx) * v(y0 + 1, x0) + tx * v(y0 + 1, x0 + 1));
    }
  }
  return polar;
}

namespace detail {

inline bool all_zero(const AngleDelayMatrix& f) {
  return std::none_of(f.values.data().begin(), f.values.data().end(), [](double v) { return v > 0.0; });
}

/// Weights fading the outermost steering angles to zero, so the edges of the
/// field of view (which move with the sensor) do not dominate registration.
inline std::vector<double> edge_taper(const AngleDelayMatrix& f, double taper_deg) {
  std::vector<double> w(f.num_angles(), 1.0);
  if (!(taper_deg > 0.0) || w.size() < 2) return w;
  const double lo = f.angle_deg(0), hi = f.angle_deg(f.num_angles() - 1);
  for (std::size_t n = 0; n < w.size(); ++n) {
    const double edge = std::min(f.angle_deg(n) - lo, hi - f.angle_deg(n));
    if (edge < taper_deg) w[n] = 0.5 * (1.0 - std::cos(std::numbers::pi * edge / taper_deg));
  }
  return w;
}

inline RealGrid cartesian_for_registration(const AngleDelayMatrix& f, const RegistrationOptions& opt) {
  if (opt.rendering == Rendering::contour) {
    RealGrid img = contour_to_cartesian(f, opt.cell_size, opt.image_size, opt.contour_eta, opt.contour_gap,
                                        edge_taper(f, opt.edge_taper_deg)).values;
    if (opt.hann_window) apply_hann(img);
    return img;
  }
  const AngleDelayMatrix* src = &f;
  AngleDelayMatrix tapered;
  if (opt.edge_taper_deg > 0.0 || opt.range_compensation) {
    tapered = f;
    const auto w = edge_taper(f, opt.edge_taper_deg);
    for (std::size_t n = 0; n < w.size(); ++n)
      for (std::size_t m = 0; m < f.num_delays(); ++m) {
        const double d = opt.range_compensation ? f.range(m) : 1.0;
        tapered.values(n, m) *= w[n] * d * d;
      }
    src = &tapered;
  }
  RealGrid img = polar_to_cartesian(*src, opt.cell_size, opt.image_size, opt.angular_fill).values;
  if (opt.hann_window) apply_hann(img);
  return img;
}

inline RealGrid polar_magnitude(const RealGrid& cart, const RegistrationOptions& opt, double angle_step_deg) {
  const ComplexGrid spec = fft::forward(cart);
  RealGrid mag(spec.rows(), spec.cols());
  for (std::size_t i = 0; i < spec.size(); ++i) {
    const double a = std::abs(spec.data()[i]);
    mag.data()[i] = opt.log_spectrum ? std::log1p(a) : a;
  }
  return spectrum_to_polar(fft::shift_to_center(mag), angle_step_deg);
}

inline RotationEstimate rotation_from_shift(const ShiftEstimate& s, double step_deg) {
  return {wrap_degrees(s.rows * step_deg), s.q};
}

/// Rows needed for a full turn, when the angle grid divides 360 degrees.
inline std::size_t full_turn_rows(const AngleDelayMatrix& f) {
  const double rows = 360.0 / f.angle_step_deg;
  const double rounded = std::round(rows);
  return std::abs(rows - rounded) < 1e-9 && rounded >= double(f.num_angles()) ? std::size_t(rounded) : f.num_angles();
}

/// Polar frame prepared for SFM rotation: optional range-compensated log
/// compression, then zero rows appended up to a full turn so a circular row
/// shift is a rotation and nothing wraps across the unobserved sector.
inline RealGrid sfm_image(const AngleDelayMatrix& f, const RegistrationOptions& opt) {
  RealGrid img(full_turn_rows(f), f.num_delays());
  double peak = 0.0;
  for (std::size_t n = 0; n < f.num_angles(); ++n)
    for (std::size_t m = 0; m < f.num_delays(); ++m) {
      const double d = f.range(m);
      img(n, m) = opt.polar_compress ? f.values(n, m) * d * d : f.values(n, m);
      peak = std::max(peak, img(n, m));
    }
  if (opt.polar_compress && peak > 0.0)
    for (auto& v : img.data()) v = std::log1p(1000.0 * v / peak);
  return img;
}

/// Row shift without wrap-around unless the frame covers a full turn; rows
/// rotated out of the field of view are dropped.
inline Frame rotate_frame_open(const Frame& f, double dtheta_deg) {
  if (full_turn_rows(f) == f.num_angles()) return rotate_frame(f, dtheta_deg);
  const long shift = std::lround(dtheta_deg / f.angle_step_deg);
  Frame out = f;
  std::fill(out.values.data().begin(), out.values.data().end(), 0.0);
  const long n = long(f.num_angles());
  for (long r = 0; r < n; ++r) {
    const long t = r + shift;
    if (t < 0 || t >= n) continue;
    std::copy(f.values.row(std::size_t(r)), f.values.row(std::size_t(r)) + f.num_delays(), out.values.row(std::size_t(t)));
  }
  return out;
}

}  // namespace detail

/// Rotation between frames from the polar-resampled magnitude spectra of
/// their Cartesian images (translation-invariant). The result is defined
/// modulo 180 degrees and lies in (-90, 90].
inline RotationEstimate estimate_rotation_fm(const Frame& fk, const Frame& fkm1, const RegistrationOptions& opt = {}) {
  require(fk.same_axes(fkm1), "estimate_rotation_fm", "frames have different axes");
  if (detail::all_zero(fk) || detail::all_zero(fkm1)) return {};
  const double step = fk.angle_step_deg;
  const RealGrid pk = detail::polar_magnitude(detail::cartesian_for_registration(fk, opt), opt, step);
  const RealGrid pkm1 = detail::polar_magnitude(detail::cartesian_for_registration(fkm1, opt), opt, step);
  const ShiftEstimate s = phase_correlation(pkm1, pk, opt.subpixel, opt.rotation_lowpass);
  // Angle axis spans 180 degrees; keep the representative in (-90, 90].
  double dtheta = s.rows * step;
  if (dtheta > 90.0) dtheta -= 180.0;
  if (dtheta <= -90.0) dtheta += 180.0;
  return {dtheta, s.q};
}

/// Rotation by phase-correlating the polar frames themselves.
inline RotationEstimate estimate_rotation_sfm(const Frame& fk, const Frame& fkm1, const RegistrationOptions& opt = {}) {
  require(fk.same_axes(fkm1), "estimate_rotation_sfm", "frames have different axes");
  if (detail::all_zero(fk) || detail::all_zero(fkm1)) return {};
  const ShiftEstimate s =
      phase_correlation(detail::sfm_image(fkm1, opt), detail::sfm_image(fk, opt), opt.subpixel, opt.rotation_lowpass);
  return detail::rotation_from_shift(s, fk.angle_step_deg);
}

/// Translation once F_{k-1} has been rotated into alignment with F_k.
/// Returns the relative pose in the k-1 frame with the given rotation.
inline RelativePose estimate_translation(const RealGrid& cart_k, const Frame& fkm1, double dtheta_deg,
                                         const RegistrationOptions& opt) {
  const Frame aligned = detail::rotate_frame_open(fkm1, dtheta_deg);
  const RealGrid cart_aligned = detail::cartesian_for_registration(aligned, opt);
  const ShiftEstimate s = phase_correlation(cart_aligned, cart_k, opt.subpixel, opt.translation_lowpass);
  // F_k is the aligned image shifted by -Rot(dtheta) t.
  const double sx = s.cols * opt.cell_size, sy = s.rows * opt.cell_size;
  const double applied = std::lround(dtheta_deg / fkm1.angle_step_deg) * fkm1.angle_step_deg;
  const double th = deg2rad(applied);
  const double c = std::cos(th), sn = std::sin(th);
  RelativePose p;
  p.dx = -(c * sx + sn * sy);
  p.dy = -(-sn * sx + c * sy);
  p.dtheta_deg = wrap_degrees(applied);
  p.q = s.q;
  return p;
}

/// Fourier-Mellin relative pose: rotation from magnitude spectra, the
/// 180-degree ambiguity resolved by the better translation peak.
inline RelativePose estimate_relative_pose_fm(const Frame& fk, const Frame& fkm1, const RegistrationOptions& opt = {}) {
  require(fk.same_axes(fkm1), "estimate_relative_pose_fm", "frames have different axes");
  if (detail::all_zero(fk) || detail::all_zero(fkm1)) return {};
  const RotationEstimate rot = estimate_rotation_fm(fk, fkm1, opt);
  const RealGrid cart_k = detail::cartesian_for_registration(fk, opt);
  RelativePose best = estimate_translation(cart_k, fkm1, rot.dtheta_deg, opt);
  const RelativePose flipped = estimate_translation(cart_k, fkm1, wrap_degrees(rot.dtheta_deg + 180.0), opt);
  if (flipped.q > best.q) best = flipped;
  best.q = std::min(best.q, rot.q);
  return best;
}

/// Simplified Fourier-Mellin: rotation straight from the polar frames.
inline RelativePose estimate_relative_pose_sfm(const Frame& fk, const Frame& fkm1,
                                               const RegistrationOptions& opt = {}) {
  require(fk.same_axes(fkm1), "estimate_relative_pose_sfm", "frames have different axes");
  if (detail::all_zero(fk) || detail::all_zero(fkm1)) return {};
  const RotationEstimate rot = estimate_rotation_sfm(fk, fkm1, opt);
  const RealGrid cart_k = detail::cartesian_for_registration(fk, opt);
  RelativePose p = estimate_translation(cart_k, fkm1, rot.dtheta_deg, opt);
  p.q = std::min(p.q, rot.q);
  return p;
}

}  // namespace rslam
