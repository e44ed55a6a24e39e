#include <gtest/gtest.h>

#include <cmath>

#include "tdg/drivers/scripted.hpp"
#include "tdg/error.hpp"

namespace tdg::drivers {
namespace {

using sim::Terrain;
using sim::TerrainConfig;
using sim::VehicleState;

TerrainConfig straight(double length = 400.0) {
  TerrainConfig c;
  c.length = length;
  c.half_width = 10.0;
  c.width_variation = 0.0;
  c.curviness = 0.0;
  c.roughness_deg = 0.0;
  return c;
}

VehicleState pose(const Terrain& t, double arc, double offset, double speed = 10.0) {
  VehicleState s;
  const sim::Vec2 tan = t.tangent_at(arc);
  s.position = t.point_at(arc) + offset * sim::left_normal(tan);
  s.yaw = sim::yaw_of(tan);
  s.speed = speed;
  return s;
}

double sdlp(const Terrain& t, const sim::Episode& ep) {
  double m = 0.0, m2 = 0.0;
  for (const auto& r : ep.records) {
    const double o = t.lateral_offset(r.vehicle_state.position);
    m += o;
    m2 += o * o;
  }
  const double n = static_cast<double>(ep.records.size());
  m /= n;
  return std::sqrt(std::max(m2 / n - m * m, 0.0));
}

TEST(PurePursuit, AlignedOnCenterlineIsZero) {
  const auto t = Terrain::generate(1, straight());
  EXPECT_NEAR(pure_pursuit_steer(pose(t, 100.0, 0.0), t, 10.0), 0.0, 1e-12);
}

TEST(PurePursuit, LeftOffsetSteersRight) {
  const auto t = Terrain::generate(1, straight());
  const double u = pure_pursuit_steer(pose(t, 100.0, 2.0), t, 10.0);
  EXPECT_GT(u, 0.0);
  // kappa = 2 * 2 / (10^2 + 2^2); delta = atan(kappa * 3) over 30 degrees.
  const double expected = std::atan(3.0 * 4.0 / 104.0) / (M_PI / 6.0);
  EXPECT_NEAR(u, expected, 1e-12);
}

TEST(PurePursuit, MirroredPoseNegates) {
  const auto t = Terrain::generate(1, straight());
  for (double off : {0.5, 1.5, 4.0}) {
    VehicleState a = pose(t, 100.0, off);
    VehicleState b = pose(t, 100.0, -off);
    a.yaw = sim::wrap_degrees(a.yaw + 7.0);
    b.yaw = sim::wrap_degrees(b.yaw - 7.0);
    EXPECT_NEAR(pure_pursuit_steer(a, t, 8.0), -pure_pursuit_steer(b, t, 8.0), 1e-12);
  }
}

TEST(PurePursuit, AlwaysInRange) {
  const auto t = Terrain::generate(2, {});
  for (double arc = 0.0; arc < 850.0; arc += 37.0) {
    for (double off : {-5.0, 0.0, 5.0}) {
      VehicleState s = pose(t, arc, off);
      s.yaw = sim::wrap_degrees(s.yaw + off * 15.0);
      const double u = pure_pursuit_steer(s, t, 6.0);
      EXPECT_GE(u, -1.0);
      EXPECT_LE(u, 1.0);
    }
  }
}

TEST(SpeedControl, EquilibriumOnStraight) {
  const auto t = Terrain::generate(1, straight());
  DriverProfile p = oracle_profile();
  const Pedals pd = speed_control(pose(t, 100.0, 0.0, p.target_speed), t, p);
  const sim::VehicleParams v;
  EXPECT_NEAR(pd.accel, v.drag * p.target_speed / v.max_accel, 1e-12);
  EXPECT_EQ(pd.brake, 0.0);
}

TEST(SpeedControl, StandingStartAccelerates) {
  const auto t = Terrain::generate(1, straight());
  const Pedals pd = speed_control(pose(t, 50.0, 0.0, 0.0), t, oracle_profile());
  EXPECT_GT(pd.accel, 0.0);
  EXPECT_EQ(pd.brake, 0.0);
}

TEST(SpeedControl, SharpCurveAtSpeedBrakes) {
  TerrainConfig c;
  c.curviness = 1.0;
  const auto t = Terrain::generate(3, c);
  double arc = 0.0;
  for (double s = 0.0; s < t.length(); s += 1.0) {
    if (std::abs(t.curvature_at(s)) > 0.02) {
      arc = std::max(0.0, s - 10.0);
      break;
    }
  }
  DriverProfile p = oracle_profile();
  p.target_speed = 25.0;
  const Pedals pd = speed_control(pose(t, arc, 0.0, 25.0), t, p);
  EXPECT_GT(pd.brake, 0.0);
  EXPECT_EQ(pd.accel, 0.0);
}

TEST(ScriptedDriver, NoiseFreeMatchesDeterministicController) {
  const auto t = Terrain::generate(4, {});
  ScriptedDriver d(oracle_profile());
  d.begin_episode(t, 3);
  const std::vector<sim::Vec3> none;
  for (double arc : {10.0, 200.0, 500.0}) {
    const VehicleState s = pose(t, arc, 1.0, 9.0);
    const auto u = d.act({0, s, none}, t);
    const Pedals pd = speed_control(s, t, oracle_profile());
    EXPECT_EQ(u.steer, pure_pursuit_steer(s, t, oracle_profile().lookahead));
    EXPECT_EQ(u.accel, pd.accel);
    EXPECT_EQ(u.brake, pd.brake);
  }
}

TEST(ScriptedDriver, SameSeedAndTickSameOutput) {
  const auto t = Terrain::generate(4, {});
  const DriverProfile p = default_population()[8];
  ScriptedDriver a(p), b(p);
  a.begin_episode(t, 11);
  b.begin_episode(t, 11);
  const std::vector<sim::Vec3> none;
  const VehicleState s = pose(t, 100.0, 0.3);
  for (std::int64_t tick = 0; tick < 20; ++tick) {
    EXPECT_EQ(a.act({tick, s, none}, t), b.act({tick, s, none}, t));
  }
}

TEST(ScriptedDriver, FilteredNoiseStandardDeviation) {
  const auto t = Terrain::generate(1, straight(1200.0));
  DriverProfile p;
  p.name = "noisy";
  p.lookahead = 10.0;
  p.target_speed = 5.0;
  p.steer_noise_sd = 0.1;
  p.reaction_lag = 1;
  p.seed = 42;
  ScriptedDriver d(p);
  const auto ep = sim::run_episode(t, d, 5, 1000);
  ASSERT_EQ(ep.records.size(), 1000u);
  double m = 0.0, m2 = 0.0;
  for (const auto& r : ep.records) {
    m += r.raw_control.steer;
    m2 += r.raw_control.steer * r.raw_control.steer;
  }
  m /= 1000.0;
  const double sd = std::sqrt(m2 / 1000.0 - m * m);
  EXPECT_GE(sd, 0.05);
  EXPECT_LE(sd, 0.15);
}

TEST(ScriptedDriver, OutputsAlwaysInRange) {
  const auto t = Terrain::generate(2, {});
  DriverProfile p = default_population().back();
  p.steer_noise_sd = 3.0;
  p.pedal_noise_sd = 3.0;
  ScriptedDriver d(p);
  const auto ep = sim::run_episode(t, d, 1, 300);
  for (const auto& r : ep.records) {
    EXPECT_GE(r.raw_control.steer, -1.0);
    EXPECT_LE(r.raw_control.steer, 1.0);
    EXPECT_GE(r.raw_control.accel, 0.0);
    EXPECT_LE(r.raw_control.accel, 1.0);
    EXPECT_GE(r.raw_control.brake, 0.0);
    EXPECT_LE(r.raw_control.brake, 1.0);
    EXPECT_TRUE(r.raw_control.accel == 0.0 || r.raw_control.brake == 0.0);
  }
}

TEST(Profiles, ValidationNamesTheBound) {
  DriverProfile p = oracle_profile();
  p.lookahead = 0.0;
  EXPECT_THROW(p.validate(), ConfigError);
  p = oracle_profile();
  p.target_speed = 31.0;
  EXPECT_THROW(p.validate(), ConfigError);
  p = oracle_profile();
  p.pedal_noise_sd = -0.1;
  EXPECT_THROW(p.validate(), ConfigError);
  p = oracle_profile();
  p.reaction_lag = -1;
  EXPECT_THROW(ScriptedDriver{p}, ConfigError);
}

TEST(Profiles, DefaultPopulationShape) {
  const auto all = default_population();
  const auto exp = select_group(all, Group::experienced);
  const auto inexp = select_group(all, Group::inexperienced);
  ASSERT_EQ(exp.size(), 5u);
  ASSERT_EQ(inexp.size(), 14u);
  for (const auto& p : exp) {
    EXPECT_EQ(p.reaction_lag, 0);
    EXPECT_GE(p.steer_noise_sd, 0.01);
    EXPECT_LE(p.steer_noise_sd, 0.03);
  }
  for (const auto& p : inexp) {
    EXPECT_GE(p.reaction_lag, 2);
    EXPECT_LE(p.reaction_lag, 5);
    EXPECT_GE(p.steer_noise_sd, 0.05);
    EXPECT_LE(p.steer_noise_sd, 0.15);
    EXPECT_GE(p.target_speed, 8.0);
    EXPECT_LE(p.target_speed, 14.0);
    for (const auto& e : exp) EXPECT_LT(p.lookahead, e.lookahead);
  }
  EXPECT_EQ(group_from_string(to_string(Group::inexperienced)), Group::inexperienced);
  EXPECT_THROW(group_from_string("novice"), ConfigError);
}

// Experienced drivers finish without contact; inexperienced ones finish and
// weave more than the default experienced controller on the same terrain.
TEST(Population, BehaviouralSplitOnDefaultTerrains) {
  const auto all = default_population();
  for (std::uint64_t seed : {1u, 2u}) {
    const auto t = Terrain::generate(seed, {});
    ScriptedDriver reference(oracle_profile());
    const auto ref_ep = sim::run_episode(t, reference, seed, 3000);
    ASSERT_TRUE(ref_ep.completed);
    EXPECT_EQ(ref_ep.collision_count, 0);
    const double ref_sdlp = sdlp(t, ref_ep);
    int completed = 0, inexperienced = 0;
    for (const auto& p : all) {
      ScriptedDriver d(p);
      const auto ep = sim::run_episode(t, d, seed + 100, 3000);
      if (p.group == Group::experienced) {
        EXPECT_TRUE(ep.completed) << p.name;
        EXPECT_EQ(ep.collision_count, 0) << p.name;
      } else {
        ++inexperienced;
        completed += ep.completed;
        EXPECT_GT(sdlp(t, ep), ref_sdlp) << p.name;
      }
    }
    EXPECT_GE(completed, 0.9 * inexperienced);
  }
}

}  // namespace
}  // namespace tdg::drivers
