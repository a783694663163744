#include <gtest/gtest.h>

#include <random>

#include "rslam/pose.hpp"
#include "sim_fixture.hpp"

using namespace rslam;
using rslam::fixture::lab_frame;

namespace {

RealGrid random_image(std::mt19937_64& rng, std::size_t n, double sparsity = 0.0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RealGrid g(n, n);
  for (double& v : g.data()) v = u(rng) < sparsity ? 0.0 : u(rng);
  return g;
}

RealGrid circular_shift(const RealGrid& a, long dr, long dc) {
  RealGrid b(a.rows(), a.cols());
  const long R = long(a.rows()), C = long(a.cols());
  for (long r = 0; r < R; ++r)
    for (long c = 0; c < C; ++c) b(std::size_t(((r + dr) % R + R) % R), std::size_t(((c + dc) % C + C) % C)) = a(std::size_t(r), std::size_t(c));
  return b;
}

Frame empty_frame(std::size_t n = 181, std::size_t m = 400) {
  Frame f;
  f.values = RealGrid(n, m);
  f.angle_start_deg = -90.0;
  f.angle_step_deg = 180.0 / double(n - 1);
  f.t_min = 0.0;
  f.t_s = 2.0 * 0.01 / kSpeedOfLight;
  return f;
}

RegistrationOptions exact_options() {
  RegistrationOptions o;
  o.hann_window = false;
  o.translation_lowpass = 0.0;
  o.rotation_lowpass = 0.0;
  return o;
}

}  // namespace

TEST(PolarToCartesian, SingleReturnAhead) {
  Frame f = empty_frame();
  f.values(90, 200) = 1.0;  // 0 degrees, 2 m
  const auto img = polar_to_cartesian(f, 0.1, 64);
  EXPECT_EQ(img.values(32, 52), 1.0);
  double sum = 0.0;
  for (double v : img.values.data()) sum += v;
  EXPECT_EQ(sum, 1.0);
}

TEST(PolarToCartesian, EmptyFrame) {
  const auto img = polar_to_cartesian(empty_frame(), 0.05, 64);
  for (double v : img.values.data()) EXPECT_EQ(v, 0.0);
}

TEST(PolarToCartesian, RingCellsTouchTheCircle) {
  Frame f = empty_frame(181, 400);
  const std::size_t m = 237;
  for (std::size_t n = 0; n < 181; ++n) f.values(n, m) = 1.0;
  const double d = f.range(m), cell = 0.03;
  const auto img = polar_to_cartesian(f, cell, 256);
  std::size_t count = 0;
  for (std::size_t r = 0; r < 256; ++r)
    for (std::size_t c = 0; c < 256; ++c) {
      if (img.values(r, c) == 0.0) continue;
      ++count;
      // The cell square [x +- cell/2] x [y +- cell/2] must reach the circle.
      const double x = (double(c) - 128.0) * cell, y = (double(r) - 128.0) * cell;
      const double nx = std::clamp(0.0, x - cell / 2, x + cell / 2), ny = std::clamp(0.0, y - cell / 2, y + cell / 2);
      const double near = std::hypot(nx, ny);
      const double far = std::hypot(std::abs(x) + cell / 2, std::abs(y) + cell / 2);
      EXPECT_LE(near, d + 1e-12);
      EXPECT_GE(far, d - 1e-12);
    }
  EXPECT_GT(count, 100u);
}

TEST(PolarToCartesian, ImageTooSmall) {
  Frame f = empty_frame();
  f.t_min = 2.0 * 5.0 / kSpeedOfLight;
  EXPECT_THROW(polar_to_cartesian(f, 0.01, 64), Error);
}

TEST(CrossPowerSpectrum, IdentityIsAllOnes) {
  std::mt19937_64 rng(1);
  const auto a = fft::forward(random_image(rng, 16));
  const auto cps = cross_power_spectrum(a, a);
  for (const auto& z : cps.data()) {
    EXPECT_NEAR(z.real(), 1.0, 1e-12);
    EXPECT_NEAR(z.imag(), 0.0, 1e-12);
  }
}

TEST(CrossPowerSpectrum, SyntheticShiftPhase) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 1.0);
  ComplexGrid a(8, 8), b(8, 8);
  const double s = 0.37;
  for (std::size_t r = 0; r < 8; ++r)
    for (std::size_t c = 0; c < 8; ++c) {
      a(r, c) = {n(rng), n(rng)};
      b(r, c) = a(r, c) * std::polar(1.0, -2.0 * std::numbers::pi * double(c) * s);
    }
  const auto cps = cross_power_spectrum(a, b);
  for (std::size_t r = 0; r < 8; ++r)
    for (std::size_t c = 0; c < 8; ++c)
      EXPECT_NEAR(std::abs(cps(r, c) - std::polar(1.0, 2.0 * std::numbers::pi * double(c) * s)), 0.0, 1e-12);
}

TEST(CrossPowerSpectrum, UnitModulusAndMasking) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  ComplexGrid a(12, 10), b(12, 10);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a.data()[i] = {n(rng), n(rng)};
    b.data()[i] = {n(rng), n(rng)};
  }
  a.data()[5] = 0.0;
  const auto cps = cross_power_spectrum(a, b);
  for (std::size_t i = 0; i < cps.size(); ++i) {
    if (i == 5) { EXPECT_EQ(std::abs(cps.data()[i]), 0.0); }
    else { EXPECT_NEAR(std::abs(cps.data()[i]), 1.0, 1e-12); }
  }
  EXPECT_THROW(cross_power_spectrum(a, ComplexGrid(3, 3)), Error);
}

TEST(PhaseCorrelation, Identity) {
  std::mt19937_64 rng(4);
  const auto a = random_image(rng, 32);
  const auto s = phase_correlation(a, a);
  EXPECT_EQ(s.rows, 0.0);
  EXPECT_EQ(s.cols, 0.0);
  EXPECT_NEAR(s.q, 1.0, 1e-12);
}

TEST(PhaseCorrelation, CircularShiftExact) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<long> sh(-31, 32);
  for (int t = 0; t < 40; ++t) {
    const auto a = random_image(rng, 64, 0.5);
    const long dr = sh(rng), dc = sh(rng);
    const auto s = phase_correlation(a, circular_shift(a, dr, dc));
    EXPECT_EQ(s.rows, double(dr));
    EXPECT_EQ(s.cols, double(dc));
  }
  const auto a = random_image(rng, 64);
  const auto s = phase_correlation(a, circular_shift(a, 3, -2));
  EXPECT_EQ(s.rows, 3.0);
  EXPECT_EQ(s.cols, -2.0);
}

TEST(PhaseCorrelation, CroppedShiftNearSpatialArgmax) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t n = 48;
  RealGrid a(n, n), b(n, n);
  for (std::size_t r = 12; r < 36; ++r)
    for (std::size_t c = 12; c < 36; ++c) a(r, c) = u(rng) < 0.7 ? 0.0 : u(rng);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) {
      const long sr = long(r) - 3, sc = long(c) + 2;
      if (sr >= 0 && sc >= 0 && sr < long(n) && sc < long(n)) b(r, c) = a(std::size_t(sr), std::size_t(sc));
    }
  // Spatial oracle: argmax of the zero-padded cross-correlation.
  double best = -1.0;
  long br = 0, bc = 0;
  for (long dr = -8; dr <= 8; ++dr)
    for (long dc = -8; dc <= 8; ++dc) {
      double s = 0.0;
      for (long r = 0; r < long(n); ++r)
        for (long c = 0; c < long(n); ++c) {
          const long rr = r + dr, cc = c + dc;
          if (rr >= 0 && cc >= 0 && rr < long(n) && cc < long(n)) s += a(std::size_t(r), std::size_t(c)) * b(std::size_t(rr), std::size_t(cc));
        }
      if (s > best) best = s, br = dr, bc = dc;
    }
  EXPECT_EQ(br, 3);
  EXPECT_EQ(bc, -2);
  const auto s = phase_correlation(a, b);
  EXPECT_LE(std::abs(s.rows - double(br)), 1.0);
  EXPECT_LE(std::abs(s.cols - double(bc)), 1.0);
}

TEST(PhaseCorrelation, AllZeroGivesZeroQuality) {
  const RealGrid z(16, 16);
  const auto s = phase_correlation(z, z);
  EXPECT_EQ(s.q, 0.0);
  EXPECT_EQ(s.rows, 0.0);
  EXPECT_EQ(s.cols, 0.0);
}

TEST(PhaseCorrelation, QualityDropsWithNoise) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (int t = 0; t < 30; ++t) {
    const auto a = random_image(rng, 32, 0.6);
    RealGrid b = a;
    const double level = 0.05 * double(t % 6 + 1);
    for (double& v : b.data()) v = std::abs(v + level * noise(rng));
    EXPECT_GE(phase_correlation(a, a).q, phase_correlation(a, b).q);
  }
}

TEST(RotateFrame, Basics) {
  std::mt19937_64 rng(8);
  Frame f = empty_frame(19, 7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (double& v : f.values.data()) v = u(rng);
  EXPECT_EQ(rotate_frame(f, 0.0), f);
  const auto r1 = rotate_frame(f, f.angle_step_deg);
  for (std::size_t n = 0; n < 19; ++n)
    for (std::size_t m = 0; m < 7; ++m) EXPECT_EQ(r1.values((n + 1) % 19, m), f.values(n, m));
  for (int k = -25; k <= 25; ++k) {
    const double d = k * f.angle_step_deg;
    EXPECT_EQ(rotate_frame(rotate_frame(f, d), -d), f);
  }
}

TEST(RotationSfm, EquivarianceOnPolarShifts) {
  // Frames with empty margins, so the open and circular shifts coincide.
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto opt = exact_options();
  for (int delta = -12; delta <= 12; delta += 3) {
    Frame f = empty_frame(181, 300);
    for (std::size_t n = 20; n < 161; ++n)
      for (std::size_t m = 0; m < 300; ++m) f.values(n, m) = u(rng) < 0.9 ? 0.0 : u(rng);
    const auto rotated = rotate_frame(f, delta * f.angle_step_deg);
    EXPECT_EQ(estimate_rotation_sfm(f, rotated, opt).dtheta_deg, -delta * f.angle_step_deg);
    EXPECT_EQ(estimate_rotation_sfm(rotated, f, opt).dtheta_deg, delta * f.angle_step_deg);
  }
}

TEST(RotationFm, IdentityAndRowShift) {
  const Frame f = lab_frame({0.3, -0.2, 0.0});
  const auto same = estimate_rotation_fm(f, f);
  EXPECT_EQ(same.dtheta_deg, 0.0);
  EXPECT_GT(same.q, 0.5);
  const auto shifted = detail::rotate_frame_open(f, 5.0);
  EXPECT_LE(std::abs(estimate_rotation_fm(shifted, f).dtheta_deg - 5.0), 1.0);
}

TEST(RotationFm, TranslationInvarianceOfMagnitude) {
  // A circular Cartesian shift leaves the polar magnitude spectrum
  // unchanged up to interpolation.
  const Frame f = lab_frame({0.0, 0.0, 0.0});
  RegistrationOptions opt;
  opt.hann_window = false;
  const auto cart = detail::cartesian_for_registration(f, opt);
  const auto p0 = detail::polar_magnitude(cart, opt, 1.0);
  const auto p1 = detail::polar_magnitude(circular_shift(cart, 7, -11), opt, 1.0);
  EXPECT_LE(std::abs(phase_correlation(p0, p1, false, opt.rotation_lowpass).rows), 1.0);
}

TEST(RotationFm, SimulatorRotationWithSmallTranslation) {
  const Pose a{0.5, 0.3, 0.0}, b{0.53, 0.28, deg2rad(10.0)};
  const auto r = estimate_rotation_fm(lab_frame(b), lab_frame(a));
  EXPECT_LE(std::abs(r.dtheta_deg - 10.0), 1.0);
}

TEST(RelativePoseFm, IdenticalFrames) {
  const Frame f = lab_frame({0.0, 0.0, 0.0});
  const auto p = estimate_relative_pose_fm(f, f);
  EXPECT_EQ(p.dx, 0.0);
  EXPECT_EQ(p.dy, 0.0);
  EXPECT_EQ(p.dtheta_deg, 0.0);
  EXPECT_GT(p.q, 0.5);
}

TEST(RelativePoseFm, BoresightStep) {
  const Pose a{0.0, 0.0, 0.0}, b{0.25, 0.0, 0.0};
  const auto p = estimate_relative_pose_fm(lab_frame(b), lab_frame(a));
  EXPECT_LE(std::abs(p.dx - 0.25), 0.02);
  EXPECT_LE(std::abs(p.dtheta_deg), 1.0);
}

TEST(RelativePoseFm, RotationAndStep) {
  const Pose a{0.0, 0.0, 0.0}, b{0.25, 0.0, deg2rad(10.0)};
  const Pose t = relative_to(a, b);
  const auto p = estimate_relative_pose_fm(lab_frame(b), lab_frame(a));
  EXPECT_LE(std::abs(p.dtheta_deg - 10.0), 1.0);
  EXPECT_LE(std::abs(p.dx - t.x), 0.02);
  EXPECT_LE(std::abs(p.dy - t.y), 0.02);
}

TEST(RelativePoseFm, DegenerateFrames) {
  const Frame z = empty_frame();
  const auto p = estimate_relative_pose_fm(z, z);
  EXPECT_EQ(p.q, 0.0);
  EXPECT_EQ(p.dx, 0.0);
}

TEST(RelativePoseSfm, IdenticalFrames) {
  const Frame f = lab_frame({-0.5, 0.4, 0.3});
  const auto p = estimate_relative_pose_sfm(f, f);
  EXPECT_EQ(p.dx, 0.0);
  EXPECT_EQ(p.dy, 0.0);
  EXPECT_EQ(p.dtheta_deg, 0.0);
  EXPECT_GT(p.q, 0.5);
}

TEST(RelativePoseSfm, OvalStepsWithinOneCellAndBin) {
  const auto traj = sim::generate_trajectory(sim::TrajectoryKind::oval);
  RegistrationOptions opt;
  opt.subpixel = true;
  // One straight step, the straight-to-curve transition and two curve steps.
  for (std::size_t k : {2u, 5u, 6u, 12u}) {
    const Pose t = relative_to(traj[k - 1], traj[k]);
    const auto p = estimate_relative_pose_sfm(lab_frame(traj[k]), lab_frame(traj[k - 1]), opt);
    EXPECT_LE(std::abs(p.dtheta_deg - rad2deg(t.theta)), 1.0) << "step " << k;
    EXPECT_LE(std::hypot(p.dx - t.x, p.dy - t.y), 0.02 * std::sqrt(2.0)) << "step " << k;
  }
}

TEST(RelativePoseSfm, RejectsMismatchedAxes) {
  EXPECT_THROW(estimate_relative_pose_sfm(empty_frame(181, 400), empty_frame(181, 300)), Error);
}
