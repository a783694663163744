#include <gtest/gtest.h>

#include <random>

#include "rslam/channel.hpp"
#include "sim_fixture.hpp"

using namespace rslam;
using namespace rslam::channel;

namespace {

PathSet random_paths(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> p(0.01, 1.0), d(0.0, 50e-9), a(-90.0, 90.0);
  PathSet s;
  for (std::size_t i = 0; i < n; ++i) s.push_back({p(rng), d(rng), a(rng)});
  return s;
}

}  // namespace

TEST(DelaySpread, SinglePath) {
  const auto d = delay_spread({{0.7, 12e-9, 10.0}});
  EXPECT_EQ(d.tau_mean, 12e-9);
  EXPECT_EQ(d.tau_rms, 0.0);
}

TEST(DelaySpread, TwoEqualPaths) {
  const auto d = delay_spread({{1.0, 0.0, 0.0}, {1.0, 2e-9, 0.0}});
  EXPECT_NEAR(d.tau_mean, 1e-9, 1e-24);
  EXPECT_NEAR(d.tau_rms, 1e-9, 1e-24);
}

TEST(DelaySpread, SecondMomentIdentity) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 100; ++t) {
    const auto paths = random_paths(rng, 12);
    double p = 0.0, m1 = 0.0, m2 = 0.0;
    for (const auto& x : paths) {
      p += x.power;
      m1 += x.power * x.delay;
      m2 += x.power * x.delay * x.delay;
    }
    const auto d = delay_spread(paths);
    EXPECT_NEAR(d.tau_mean, m1 / p, 1e-20);
    EXPECT_NEAR(d.tau_rms * d.tau_rms, m2 / p - (m1 / p) * (m1 / p), 1e-27);
  }
}

TEST(DelaySpread, ShiftAndScale) {
  std::mt19937_64 rng(2);
  const auto paths = random_paths(rng, 20);
  auto shifted = paths, scaled = paths;
  for (auto& x : shifted) x.delay += 7e-9;
  for (auto& x : scaled) x.power *= 13.0;
  const auto d = delay_spread(paths);
  EXPECT_NEAR(delay_spread(shifted).tau_rms, d.tau_rms, 1e-20);
  EXPECT_NEAR(delay_spread(shifted).tau_mean, d.tau_mean + 7e-9, 1e-20);
  EXPECT_NEAR(delay_spread(scaled).tau_rms, d.tau_rms, 1e-20);
}

TEST(DelaySpread, RejectsBadInput) {
  EXPECT_THROW(delay_spread({}), Error);
  EXPECT_THROW(delay_spread({{0.0, 1e-9, 0.0}}), Error);
}

TEST(AngularSpread, OppositeBroadside) {
  const auto a = angular_spread({{1.0, 0.0, 90.0}, {1.0, 0.0, -90.0}});
  EXPECT_NEAR(std::abs(a.phi_mean), 0.0, 1e-15);
  EXPECT_NEAR(a.phi_spread, 1.0, 1e-15);
  EXPECT_NEAR(a.spread_deg_equivalent(), rad2deg(1.0), 1e-12);
}

TEST(AngularSpread, SinglePathHasNoSpread) {
  const auto a = angular_spread({{2.0, 0.0, 33.0}});
  EXPECT_NEAR(a.phi_spread, 0.0, 1e-12);
  EXPECT_NEAR(std::arg(a.phi_mean), deg2rad(33.0), 1e-15);
}

TEST(AngularSpread, MatchesOneMinusMeanModulus) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 200; ++t) {
    const auto a = angular_spread(random_paths(rng, 9));
    EXPECT_NEAR(a.phi_spread * a.phi_spread, 1.0 - std::norm(a.phi_mean), 1e-12);
    EXPECT_LE(a.phi_spread, 1.0 + 1e-12);
  }
}

TEST(Ecdf, Steps) {
  const auto f = ecdf({3.0, 1.0, 2.0});
  EXPECT_DOUBLE_EQ(f(2.0), 2.0 / 3.0);
  EXPECT_EQ(f(0.5), 0.0);
  EXPECT_EQ(f(3.0), 1.0);
  EXPECT_DOUBLE_EQ(f(1.5), 1.0 / 3.0);
  const auto pts = f.points();
  ASSERT_EQ(pts.size(), 3u);
  EXPECT_EQ(pts[0].first, 1.0);
  EXPECT_EQ(pts[2].second, 1.0);
  EXPECT_EQ(ecdf({})(1.0), 0.0);
  EXPECT_THROW(ecdf({std::nan("")}), Error);
}

TEST(Lognormal, RecoversParameters) {
  std::mt19937_64 rng(2024);
  std::lognormal_distribution<double> dist(1.0, 0.5);
  std::vector<double> x(10000);
  for (double& v : x) v = dist(rng);
  const auto fit = lognormal_fit(x);
  EXPECT_NEAR(fit.mu, 1.0, 0.02);
  EXPECT_NEAR(fit.sigma, 0.5, 0.05 * 0.5);
}

TEST(Lognormal, ConstantSample) {
  const std::vector<double> x(5, 2.5);
  const auto fit = lognormal_fit(x);
  EXPECT_NEAR(fit.mu, std::log(2.5), 1e-15);
  EXPECT_EQ(fit.sigma, 0.0);
  const std::vector<double> bad{1.0, -1.0};
  EXPECT_THROW(lognormal_fit(bad), Error);
  EXPECT_THROW(lognormal_fit(std::vector<double>{}), Error);
}

TEST(Lognormal, PopulationStd) {
  const std::vector<double> x{1.0, std::exp(2.0)};
  const auto fit = lognormal_fit(x);
  EXPECT_DOUBLE_EQ(fit.mu, 1.0);
  EXPECT_DOUBLE_EQ(fit.sigma, 1.0);
}

TEST(Report, EmptyFramesAreSkipped) {
  Frame empty;
  empty.values = RealGrid(3, 4);
  empty.angle_start_deg = -1.0;
  empty.angle_step_deg = 1.0;
  empty.t_s = 1e-9;
  Frame one = empty;
  one.values(1, 2) = 1.0;
  const std::vector<Frame> frames{empty, one};
  const auto r = scenario_spread_report(frames);
  EXPECT_EQ(r.used, 1u);
  EXPECT_FALSE(r.positions[0].stats.has_value());
  ASSERT_TRUE(r.positions[1].stats.has_value());
  EXPECT_EQ(r.tau_rms_aggregate, 0.0);
  EXPECT_NEAR(r.positions[1].stats->delay.tau_mean, 2e-9, 1e-21);
}

TEST(Report, RmsAggregate) {
  Frame f;
  f.values = RealGrid(1, 3);
  f.angle_step_deg = 1.0;
  f.t_s = 1e-9;
  Frame a = f, b = f;
  a.values(0, 0) = a.values(0, 2) = 1.0;  // tau_rms = 1 ns
  b.values(0, 0) = 1.0;                   // tau_rms = 0
  const std::vector<Frame> frames{a, b};
  const auto r = scenario_spread_report(frames);
  EXPECT_NEAR(r.tau_rms_aggregate, std::sqrt(0.5) * 1e-9, 1e-21);
}

TEST(Report, LabScanHasSpread) {
  const std::vector<Frame> frames{fixture::lab_frame({0.0, 0.0, 0.0})};
  const auto r = scenario_spread_report(frames);
  ASSERT_EQ(r.used, 1u);
  EXPECT_GT(r.tau_rms_aggregate, 0.0);
  EXPECT_GT(r.phi_spread_aggregate, 0.0);
  EXPECT_LE(r.phi_spread_aggregate, 1.0);
}
