#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <random>
#include <sstream>

#include "rslam/sim.hpp"
#include "sim_fixture.hpp"

using namespace rslam;
using namespace rslam::sim;

namespace {

std::size_t argmax_column(const AngleDelayMatrix& h, std::size_t n) {
  const double* row = h.values.row(n);
  return std::size_t(std::max_element(row, row + h.num_delays()) - row);
}

SceneMap mirrored(const SceneMap& s) {
  SceneMap m = s;
  for (auto& seg : m.segments) {
    seg.a.y = -seg.a.y;
    seg.b.y = -seg.b.y;
  }
  if (m.bounds) m.bounds = SceneMap::Extent{{m.bounds->lo.x, -m.bounds->hi.y}, {m.bounds->hi.x, -m.bounds->lo.y}};
  return m;
}

}  // namespace

TEST(Pattern, Gain) {
  const AntennaPattern p;
  EXPECT_EQ(pattern_gain(p, 0.0), 1.0);
  EXPECT_NEAR(pattern_gain(p, 9.0), 0.5, 1e-12);
  EXPECT_NEAR(pattern_gain(p, -9.0), 0.5, 1e-12);
  EXPECT_NEAR(pattern_gain(p, 120.0), std::pow(10.0, -1.5), 1e-15);
  EXPECT_NEAR(pattern_gain(p, 0.0316), pattern_gain(p, 359.9684), 1e-12);
  AntennaPattern pencil;
  pencil.sidelobe_floor_db = -std::numeric_limits<double>::infinity();
  EXPECT_LT(pattern_gain(pencil, 120.0), 1e-50);
  EXPECT_NEAR(pencil.two_way(9.0), 0.25, 1e-12);
}

TEST(Raycast, Examples) {
  const auto scene = single_reflector_scene(3.0, 1.0);
  const auto ahead = raycast(scene, {0.0, 0.0}, {1.0, 0.0});
  ASSERT_TRUE(ahead.has_value());
  EXPECT_DOUBLE_EQ(ahead->distance, 3.0);
  EXPECT_EQ(ahead->reflectivity, 1.0);
  EXPECT_FALSE(raycast(scene, {0.0, 0.0}, {-1.0, 0.0}).has_value());
  EXPECT_FALSE(raycast(scene, {0.0, 0.0}, {std::cos(0.6), std::sin(0.6)}).has_value());
  const auto slant = raycast(scene, {0.0, 0.0}, {std::cos(0.3), std::sin(0.3)});
  ASSERT_TRUE(slant.has_value());
  EXPECT_NEAR(slant->distance, 3.0 / std::cos(0.3), 1e-12);
}

TEST(Raycast, NearestOfAllSegments) {
  // Oracle: solve origin + t d = a + u (b - a) per segment with Eigen.
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> pos(-4.0, 4.0), ang(-std::numbers::pi, std::numbers::pi);
  const auto scene = lab_scene();
  for (int t = 0; t < 500; ++t) {
    const Vec2 o{pos(rng), pos(rng) * 0.9};
    const double a = ang(rng);
    const Vec2 d{std::cos(a), std::sin(a)};
    double best = std::numeric_limits<double>::infinity();
    for (const auto& s : scene.segments) {
      Eigen::Matrix2d m;
      m << d.x, s.a.x - s.b.x, d.y, s.a.y - s.b.y;
      if (std::abs(m.determinant()) < 1e-12) continue;
      const Eigen::Vector2d x = m.partialPivLu().solve(Eigen::Vector2d(s.a.x - o.x, s.a.y - o.y));
      if (x(0) > 1e-12 && x(1) >= 0.0 && x(1) <= 1.0) best = std::min(best, x(0));
    }
    const auto hit = raycast(scene, o, d);
    ASSERT_EQ(hit.has_value(), std::isfinite(best));
    if (hit) { EXPECT_NEAR(hit->distance, best, 1e-9); }
  }
}

TEST(Synthesize, WallLandsInExpectedBin) {
  const auto scene = single_reflector_scene(3.0, 1.0);
  const auto cfg = fixture::lab_config();
  const auto s = synthesize_scan(scene, {}, {}, cfg);
  // (3 m - 0.1 m) / 1 cm
  EXPECT_EQ(argmax_column(s.matrix, 90), 290u);
  EXPECT_DOUBLE_EQ(s.truth_ranges[90], 3.0);
  EXPECT_FALSE(std::isfinite(s.truth_ranges[0]));
  EXPECT_EQ(s.sources(90, 290), CellSource::main_lobe);
  EXPECT_EQ(s.matrix.num_angles(), 181u);
  EXPECT_EQ(s.matrix.num_delays(), 1000u);
}

TEST(Synthesize, GhostRidge) {
  const auto scene = single_reflector_scene(3.0, 0.5, 60.0);
  const auto s = synthesize_scan(scene, {}, {}, fixture::lab_config());
  const std::size_t wall_bin = argmax_column(s.matrix, 150);
  EXPECT_EQ(wall_bin, 290u);
  const double peak = s.matrix.max_value();
  std::size_t carrying = 0;
  for (std::size_t n = 0; n < 181; ++n) {
    if (s.matrix.values(n, wall_bin) >= 1e-4 * peak) ++carrying;
    const double offset = std::abs(s.matrix.angle_deg(n) - 60.0);
    if (offset > 45.0) {
      EXPECT_GT(s.matrix.values(n, wall_bin), 0.0) << "angle " << s.matrix.angle_deg(n);
      EXPECT_EQ(s.sources(n, wall_bin), CellSource::sidelobe_only) << "angle " << s.matrix.angle_deg(n);
    }
  }
  EXPECT_GE(carrying, 91u);
}

TEST(Synthesize, PencilBeamHasNoRidge) {
  AntennaPattern pencil;
  pencil.sidelobe_floor_db = -std::numeric_limits<double>::infinity();
  const auto s = synthesize_scan(single_reflector_scene(3.0, 0.5, 60.0), {}, pencil, fixture::lab_config());
  EXPECT_LT(s.matrix.values(10, 290), 1e-20 * s.matrix.max_value());
  for (std::size_t m = 0; m < s.matrix.num_delays(); ++m) EXPECT_NE(s.sources(10, m), CellSource::sidelobe_only);
}

TEST(Synthesize, MirroredSceneReversesRows) {
  const auto scene = lab_scene();
  const Pose p{0.7, 0.4, deg2rad(20.0)};
  const auto a = synthesize_scan(scene, p, {}, fixture::lab_config());
  const auto b = synthesize_scan(mirrored(scene), {p.x, -p.y, -p.theta}, {}, fixture::lab_config());
  const double tol = 1e-9 * a.matrix.max_value();
  for (std::size_t n = 0; n < 181; ++n)
    for (std::size_t m = 0; m < a.matrix.num_delays(); ++m)
      ASSERT_NEAR(a.matrix.values(n, m), b.matrix.values(180 - n, m), tol) << n << ',' << m;
}

TEST(Synthesize, RotationShiftsRows) {
  const auto scene = lab_scene();
  const Pose p{-0.3, 0.2, 0.0};
  const auto a = synthesize_scan(scene, p, {}, fixture::lab_config());
  const auto b = synthesize_scan(scene, {p.x, p.y, deg2rad(5.0)}, {}, fixture::lab_config());
  const double tol = 1e-9 * a.matrix.max_value();
  for (std::size_t n = 5; n < 181; ++n)
    for (std::size_t m = 0; m < a.matrix.num_delays(); ++m)
      ASSERT_NEAR(b.matrix.values(n, m), a.matrix.values(n - 5, m), tol) << n << ',' << m;
}

TEST(Synthesize, LinearInReflectivity) {
  auto scene = single_reflector_scene(2.0, 1.0);
  const auto a = synthesize_scan(scene, {}, {}, fixture::lab_config());
  scene.segments[0].reflectivity = 0.25;
  const auto b = synthesize_scan(scene, {}, {}, fixture::lab_config());
  for (std::size_t i = 0; i < a.matrix.values.size(); ++i)
    EXPECT_NEAR(b.matrix.values.data()[i], 0.25 * a.matrix.values.data()[i], 1e-15);
}

TEST(Synthesize, NoiseIsSeeded) {
  auto cfg = fixture::lab_config();
  cfg.noise_floor = 0.05;
  const auto scene = lab_scene();
  const auto a = synthesize_scan(scene, {}, {}, cfg);
  EXPECT_EQ(a.matrix, synthesize_scan(scene, {}, {}, cfg).matrix);
  cfg.seed = 2;
  EXPECT_NE(a.matrix, synthesize_scan(scene, {}, {}, cfg).matrix);
}

TEST(Synthesize, RejectsPoseOutsideScene) {
  EXPECT_THROW(synthesize_scan(lab_scene(), {9.0, 0.0, 0.0}, {}, fixture::lab_config()), Error);
  EXPECT_THROW(synthesize_scan(single_reflector_scene(), {5.1, 0.0, 0.0}, {}, fixture::lab_config()), Error);
}

TEST(Trajectory, Lines) {
  const auto a = generate_trajectory(TrajectoryKind::line_boresight);
  ASSERT_EQ(a.size(), 9u);
  EXPECT_DOUBLE_EQ(a[8].x, 2.0);
  for (const auto& p : a) EXPECT_EQ(p.theta, 0.0);
  const auto b = generate_trajectory(TrajectoryKind::line_broadside);
  ASSERT_EQ(b.size(), 9u);
  for (std::size_t k = 1; k < b.size(); ++k) {
    const Pose r = relative_to(b[k - 1], b[k]);
    EXPECT_NEAR(r.x, 0.0, 1e-12);
    EXPECT_NEAR(std::abs(r.y), 0.25, 1e-12);
  }
}

TEST(Trajectory, Oval) {
  const auto poses = generate_trajectory(TrajectoryKind::oval);
  ASSERT_EQ(poses.size(), 46u);
  EXPECT_DOUBLE_EQ(poses[0].x, -1.0);
  EXPECT_DOUBLE_EQ(poses[0].y, -1.5);
  for (std::size_t k = 1; k < poses.size(); ++k) {
    const double step = std::hypot(poses[k].x - poses[k - 1].x, poses[k].y - poses[k - 1].y);
    EXPECT_GE(step, 0.23);
    EXPECT_LE(step, 0.40 + 1e-12);
    const double turn = rad2deg(wrap_angle(poses[k].theta - poses[k - 1].theta));
    EXPECT_TRUE(std::abs(turn) < 1e-9 || std::abs(turn + 10.0) < 1e-9) << "step " << k;
  }
  const auto scene = lab_scene();
  for (const auto& p : poses) EXPECT_TRUE(scene.extent().contains(p.position()));
}

TEST(Scene, ParseAndWrite) {
  std::istringstream in("# lab\n0 0 1 0 0.5\n\nextent -2 -2 3 3\n1 0 1 1 1.0  # wall\n");
  const auto scene = parse_scene(in);
  ASSERT_EQ(scene.segments.size(), 2u);
  EXPECT_EQ(scene.segments[0].reflectivity, 0.5);
  ASSERT_TRUE(scene.bounds.has_value());
  EXPECT_EQ(scene.extent().lo.x, -2.0);
  std::ostringstream out;
  write_scene(out, scene);
  std::istringstream back(out.str());
  const auto again = parse_scene(back);
  ASSERT_EQ(again.segments.size(), 2u);
  EXPECT_EQ(again.segments[1].b.y, 1.0);
  EXPECT_EQ(again.extent().hi.y, 3.0);

  std::istringstream bad("0 0 1\n");
  EXPECT_THROW(parse_scene(bad), Error);
  std::istringstream dark("0 0 1 0 0\n");
  EXPECT_THROW(parse_scene(dark), Error);
  std::istringstream point("1 1 1 1 0.5\n");
  EXPECT_THROW(parse_scene(point), Error);
}
