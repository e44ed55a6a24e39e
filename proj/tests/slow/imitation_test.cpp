#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "tdg/pipeline/collect.hpp"
#include "tdg/pipeline/rollout.hpp"
#include "tdg/pipeline/training.hpp"
#include "tdg/preprocess/dataset.hpp"

namespace tdg::pipeline {
namespace {

constexpr std::int64_t kTicks = 500;

sim::TerrainConfig straight_corridor() {
  sim::TerrainConfig c;
  c.length = 700.0;
  c.curviness = 0.0;
  c.width_variation = 0.0;
  c.roughness_deg = 0.0;
  return c;
}

// Replaces every logged control with what the noiseless oracle would do in
// the visited state.
sim::Episode relabel_with_oracle(sim::Episode e, const sim::Terrain& t) {
  drivers::ScriptedDriver oracle(drivers::oracle_profile());
  oracle.begin_episode(t, e.seed);
  for (auto& r : e.records) {
    r.raw_control = oracle.act(sim::Observation{r.tick_index, r.vehicle_state, r.lidar_points}, t).clamped();
  }
  return e;
}

TEST(Imitation, StraightCorridorTracksTheScriptedDriver) {
  const auto terrain = sim::Terrain::generate(2, straight_corridor());
  CollectConfig cc;
  cc.runs_per_profile = 1;
  cc.tick_limit = kTicks;
  const auto reference = collect(terrain, {drivers::oracle_profile()}, 3, cc);
  ASSERT_EQ(reference.size(), 1u);

  auto disturbed = drivers::oracle_profile();
  disturbed.name = "disturbed";
  disturbed.steer_noise_sd = 0.15;
  disturbed.pedal_noise_sd = 0.1;
  disturbed.reaction_lag = 3;
  disturbed.seed = 77;
  cc.runs_per_profile = 5;
  std::vector<sim::Episode> training_eps = reference;
  for (const auto& e : collect(terrain, {disturbed}, 4, cc)) training_eps.push_back(relabel_with_oracle(e, terrain));
  const auto ds = preprocess::build_dataset(training_eps, preprocess::TargetSlice::control);

  auto mc = cvae::CvaeConfig::for_role(cvae::Role::inverse, 64, 64);
  mc.mode = cvae::Mode::standard_cvae;
  TrainConfig tc;
  tc.epochs = 200;
  tc.batch_size = 32;
  tc.initial_lr = 2e-3;
  tc.decay_period = 80;
  tc.max_windows = 2500;
  tc.seed = 1;
  tc.ground_truth_perception = true;
  const auto res = train(ds, mc, tc);

  RolloutConfig rc;
  rc.tick_limit = kTicks;
  rc.sim = cc.sim;
  const auto run = rollout(res.best, terrain, 3, rc);
  const auto& ref = reference[0].records;
  const std::size_t n = std::min(ref.size(), run.records.size());
  ASSERT_EQ(n, static_cast<std::size_t>(kTicks));
  double err = 0.0;
  for (std::size_t i = 0; i < n; ++i) err += sim::norm(run.records[i].vehicle_state.position - ref[i].vehicle_state.position);
  err /= static_cast<double>(n);
  EXPECT_EQ(run.collision_count, 0);
  EXPECT_LT(err, 1.0);
  RecordProperty("mean_position_error_m", std::to_string(err));
  std::printf("mean position error %.4f m over %zu ticks\n", err, n);
}

}  // namespace
}  // namespace tdg::pipeline
