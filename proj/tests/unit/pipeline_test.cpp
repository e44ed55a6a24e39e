#include <gtest/gtest.h>
#include <algorithm>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "tdg/binary_io.hpp"
#include "tdg/error.hpp"
#include "tdg/numeric/checkpoint.hpp"
#include "tdg/pipeline/collect.hpp"
#include "tdg/pipeline/model_io.hpp"
#include "tdg/pipeline/rollout.hpp"
#include "tdg/pipeline/training.hpp"

using namespace tdg;
using namespace tdg::pipeline;
namespace fs = std::filesystem;

namespace {

sim::TerrainConfig short_canyon(double length = 200.0) {
  sim::TerrainConfig c;
  c.length = length;
  return c;
}

// Oracle drives on a short canyon: a few hundred windows.
const std::vector<sim::Episode>& oracle_episodes() {
  static const std::vector<sim::Episode> eps = [] {
    const auto t = sim::Terrain::generate(3, short_canyon());
    CollectConfig cc;
    cc.runs_per_profile = 2;
    return collect(t, {drivers::oracle_profile()}, 11, cc);
  }();
  return eps;
}

const preprocess::Dataset& control_dataset() {
  static const auto ds = preprocess::build_dataset(oracle_episodes(), preprocess::TargetSlice::control, 1);
  return ds;
}

const preprocess::Dataset& perception_dataset() {
  static const auto ds = preprocess::build_dataset(oracle_episodes(), preprocess::TargetSlice::perception, 1);
  return ds;
}

TrainConfig tiny_train(int epochs = 3) {
  TrainConfig c;
  c.epochs = epochs;
  c.batch_size = 16;
  c.max_windows = 40;
  c.seed = 5;
  c.ground_truth_perception = true;
  return c;
}

std::string checkpoint_bytes(const cvae::CvaeModel& m) {
  return numeric::serialize_checkpoint({m.parameters(), std::nullopt});
}

fs::path temp_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("tdg_pipeline_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST(Collect, ProfileMajorAndDeterministic) {
  const auto t = sim::Terrain::generate(3, short_canyon());
  auto profiles = drivers::select_group(drivers::default_population(), drivers::Group::inexperienced);
  profiles.resize(2);
  CollectConfig cc;
  cc.runs_per_profile = 2;
  const auto a = collect(t, profiles, 4, cc);
  ASSERT_EQ(a.size(), 4u);
  EXPECT_EQ(a[0].driver_id, profiles[0].name);
  EXPECT_EQ(a[1].driver_id, profiles[0].name);
  EXPECT_EQ(a[2].driver_id, profiles[1].name);
  EXPECT_NE(a[0].seed, a[1].seed);
  cc.threads = 3;
  EXPECT_EQ(collect(t, profiles, 4, cc), a);
  EXPECT_THROW(collect(t, {}, 4, cc), UsageError);
  cc.runs_per_profile = 0;
  EXPECT_THROW(cc.validate(), ConfigError);
}

TEST(Dataset, WindowCountIsSumOfLengthsMinusNine) {
  std::size_t expected = 0;
  for (const auto& e : oracle_episodes()) expected += e.records.size() - 9;
  EXPECT_EQ(control_dataset().size(), expected);
}

TEST(Training, LearningRateTraceFollowsStepDecay) {
  TrainConfig c = tiny_train(900);
  c.max_windows = 6;
  c.batch_size = 8;
  const auto mc = cvae::CvaeConfig::for_role(cvae::Role::inverse, 2, 2);
  const auto res = train(control_dataset(), mc, c);
  ASSERT_EQ(res.log.size(), 900u);
  EXPECT_EQ(res.log[0].lr, 1e-3);
  EXPECT_EQ(res.log[299].lr, 1e-3);
  EXPECT_EQ(res.log[300].lr, 1e-4);
  EXPECT_EQ(res.log[599].lr, 1e-4);
  EXPECT_EQ(res.log[600].lr, 1e-5);
  EXPECT_EQ(res.log[899].lr, 1e-5);
  for (const auto& l : res.log) EXPECT_EQ(l.lr, numeric::step_decay_lr(1e-3, l.epoch));
}

TEST(Training, SameSeedSameCheckpoint) {
  const auto mc = cvae::CvaeConfig::for_role(cvae::Role::inverse, 4, 4);
  const auto a = train(control_dataset(), mc, tiny_train());
  const auto b = train(control_dataset(), mc, tiny_train());
  EXPECT_EQ(checkpoint_bytes(a.best), checkpoint_bytes(b.best));
  EXPECT_EQ(a.optimizer, b.optimizer);
  auto threaded = tiny_train();
  threaded.threads = 3;
  EXPECT_EQ(checkpoint_bytes(train(control_dataset(), mc, threaded).best), checkpoint_bytes(a.best));
  auto other = tiny_train();
  other.seed = 6;
  EXPECT_NE(checkpoint_bytes(train(control_dataset(), mc, other).best), checkpoint_bytes(a.best));
}

TEST(Training, SplitAndBestEpoch) {
  const auto mc = cvae::CvaeConfig::for_role(cvae::Role::inverse, 4, 4);
  const auto res = train(control_dataset(), mc, tiny_train(4));
  EXPECT_EQ(res.train_windows + res.validation_windows, 40u);
  EXPECT_EQ(res.validation_windows, 4u);
  double best = INFINITY;
  int best_epoch = -1;
  for (const auto& l : res.log) {
    if (l.validation_loss < best) {
      best = l.validation_loss;
      best_epoch = l.epoch;
    }
  }
  EXPECT_EQ(res.best_epoch, best_epoch);
}

TEST(Training, ShuffleIsAPermutation) {
  std::vector<std::size_t> v(50);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = i;
  auto a = v, b = v;
  seeded_shuffle(a, 9);
  seeded_shuffle(b, 9);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, v);
  std::sort(a.begin(), a.end());
  EXPECT_EQ(a, v);
}

TEST(Training, RejectsMismatchedInputs) {
  const auto inv = cvae::CvaeConfig::for_role(cvae::Role::inverse, 4, 4);
  const auto fwd = cvae::CvaeConfig::for_role(cvae::Role::forward, 4, 4);
  EXPECT_THROW(train(perception_dataset(), inv, tiny_train()), UsageError);
  EXPECT_THROW(train(control_dataset(), fwd, tiny_train()), UsageError);
  auto needs_forward = tiny_train();
  needs_forward.ground_truth_perception = false;
  EXPECT_THROW(train(control_dataset(), inv, needs_forward), UsageError);
  const auto not_forward = cvae::CvaeModel::initialize(inv, 1);
  EXPECT_THROW(train(control_dataset(), inv, needs_forward, &not_forward), UsageError);
  preprocess::Dataset empty = control_dataset();
  empty.values.clear();
  EXPECT_THROW(train(empty, inv, tiny_train()), UsageError);
  auto bad = tiny_train();
  bad.validation_fraction = 0.5;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = tiny_train();
  bad.epochs = 0;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Training, InverseWithForwardPerception) {
  const auto fwd_cfg = cvae::CvaeConfig::for_role(cvae::Role::forward, 4, 4);
  const auto forward = train(perception_dataset(), fwd_cfg, tiny_train(2)).best;
  auto c = tiny_train(2);
  c.ground_truth_perception = false;
  const auto inv_cfg = cvae::CvaeConfig::for_role(cvae::Role::inverse, 4, 4);
  const auto a = train(control_dataset(), inv_cfg, c, &forward);
  const auto b = train(control_dataset(), inv_cfg, c, &forward);
  EXPECT_EQ(checkpoint_bytes(a.best), checkpoint_bytes(b.best));
  // Replacing the perception changes what the model sees.
  EXPECT_NE(checkpoint_bytes(a.best), checkpoint_bytes(train(control_dataset(), inv_cfg, tiny_train(2)).best));

  // Only the current-step perception is replaced.
  const std::vector<std::size_t> idx = {0, 5};
  const auto plain = materialize_windows(control_dataset(), idx, nullptr, 1, 1);
  const auto swapped = materialize_windows(control_dataset(), idx, &forward, 1, 1);
  const std::size_t step = preprocess::kStepDim;
  for (std::size_t w = 0; w < idx.size(); ++w) {
    for (std::size_t i = 0; i < plain[w].size(); ++i) {
      const bool current_perception = i >= 9 * step && i < 9 * step + preprocess::kPerceptionDim;
      if (!current_perception) EXPECT_EQ(plain[w][i], swapped[w][i]) << i;
    }
  }
}

TEST(Training, LossDecreases) {
  TrainConfig c = tiny_train(30);
  c.max_windows = 300;
  c.batch_size = 32;
  c.initial_lr = 3e-3;
  const auto mc = cvae::CvaeConfig::for_role(cvae::Role::inverse, 16, 16);
  const auto res = train(control_dataset(), mc, c);
  EXPECT_LT(res.log.back().train_loss, 0.5 * res.log.front().train_loss);
}

TEST(Rollout, Denormalization) {
  const auto a = denormalize_control(0.5, 0.8);
  EXPECT_NEAR(a.accel, 0.6, 1e-15);
  EXPECT_EQ(a.brake, 0.0);
  EXPECT_EQ(a.steer, 0.0);
  const auto n = denormalize_control(0.5, 0.5);
  EXPECT_EQ(n.steer, 0.0);
  EXPECT_EQ(n.accel, 0.0);
  EXPECT_EQ(n.brake, 0.0);
  const auto b = denormalize_control(0.0, 0.1);
  EXPECT_EQ(b.steer, -1.0);
  EXPECT_NEAR(b.brake, 0.8, 1e-15);
  EXPECT_EQ(b.accel, 0.0);
  for (double s = 0.0; s <= 1.0; s += 0.05) {
    for (double p = 0.0; p <= 1.0; p += 0.05) {
      const auto c = denormalize_control(s, p);
      EXPECT_GE(c.steer, -1.0);
      EXPECT_LE(c.steer, 1.0);
      EXPECT_GE(c.accel, 0.0);
      EXPECT_LE(c.accel, 1.0);
      EXPECT_GE(c.brake, 0.0);
      EXPECT_LE(c.brake, 1.0);
      EXPECT_TRUE(c.accel == 0.0 || c.brake == 0.0);
    }
  }
}

TEST(Rollout, DeterministicAndInRange) {
  const auto mc = cvae::CvaeConfig::for_role(cvae::Role::inverse, 4, 4);
  const auto model = cvae::CvaeModel::initialize(mc, 2);
  const auto t = sim::Terrain::generate(3, short_canyon());
  RolloutConfig rc;
  rc.tick_limit = 150;
  rc.runs = 3;
  const auto a = rollout_batch(model, t, 8, rc);
  rc.threads = 3;
  const auto b = rollout_batch(model, t, 8, rc);
  ASSERT_EQ(a.size(), 3u);
  EXPECT_EQ(a, b);
  EXPECT_NE(a[0].records, a[1].records);
  EXPECT_EQ(rollout(model, t, a[1].seed, rc).records, a[1].records);
  for (const auto& e : a) {
    for (const auto& r : e.records) {
      EXPECT_GE(r.raw_control.steer, -1.0);
      EXPECT_LE(r.raw_control.steer, 1.0);
      EXPECT_GE(r.raw_control.accel, 0.0);
      EXPECT_LE(r.raw_control.accel, 1.0);
      EXPECT_GE(r.raw_control.brake, 0.0);
      EXPECT_LE(r.raw_control.brake, 1.0);
    }
  }
}

TEST(Rollout, WarmupUsesScriptedController) {
  const auto mc = cvae::CvaeConfig::for_role(cvae::Role::inverse, 4, 4);
  const auto model = cvae::CvaeModel::initialize(mc, 2);
  const auto t = sim::Terrain::generate(3, short_canyon());
  RolloutConfig rc;
  rc.tick_limit = 150;
  const auto e = rollout(model, t, 4, rc);
  drivers::ScriptedDriver oracle(drivers::oracle_profile());
  const auto ref = sim::run_episode(t, oracle, 4, 150);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(e.records[i].raw_control, ref.records[i].raw_control) << i;
}

TEST(Rollout, RejectsBadInputs) {
  const auto fwd = cvae::CvaeModel::initialize(cvae::CvaeConfig::for_role(cvae::Role::forward, 4, 4), 1);
  const auto inv = cvae::CvaeModel::initialize(cvae::CvaeConfig::for_role(cvae::Role::inverse, 4, 4), 1);
  const auto t = sim::Terrain::generate(3, short_canyon());
  RolloutConfig rc;
  EXPECT_THROW(rollout(fwd, t, 1, rc), UsageError);
  rc.hallucinated_perception = true;
  EXPECT_THROW(rollout(inv, t, 1, rc), UsageError);
  rc = {};
  rc.tick_limit = 100;
  EXPECT_THROW(rc.validate(), ConfigError);
}

TEST(ModelIo, RoundTripAndRoleCheck) {
  const auto dir = temp_dir("model_io");
  const auto mc = cvae::CvaeConfig::for_role(cvae::Role::inverse, 4, 4);
  const auto res = train(control_dataset(), mc, tiny_train(1));
  const std::string path = (dir / "inverse.ckpt").string();
  save_model(path, res.best, {"abc", res.best_epoch, 5}, &res.optimizer);
  EXPECT_TRUE(fs::exists(sidecar_path(path)));
  const auto loaded = load_model(path, cvae::Role::inverse);
  EXPECT_EQ(checkpoint_bytes(loaded.model), checkpoint_bytes(res.best));
  EXPECT_EQ(loaded.model.config(), mc);
  EXPECT_EQ(loaded.info.dataset_fingerprint, "abc");
  EXPECT_EQ(loaded.info.seed, 5u);
  ASSERT_TRUE(loaded.optimizer.has_value());
  EXPECT_EQ(*loaded.optimizer, res.optimizer);
  EXPECT_THROW(load_model(path, cvae::Role::forward), UsageError);

  // A checkpoint swapped under its sidecar is rejected.
  const auto other = cvae::CvaeModel::initialize(mc, 77);
  numeric::save_checkpoint(path, {other.parameters(), std::nullopt});
  EXPECT_THROW(load_model(path), FormatError);
  fs::remove(sidecar_path(path));
  EXPECT_THROW(load_model(path), FormatError);
  fs::remove_all(dir);
}

TEST(Training, PlainSgdOption) {
  auto c = tiny_train(2);
  c.optimizer = Optimizer::sgd;
  const auto mc = cvae::CvaeConfig::for_role(cvae::Role::inverse, 4, 4);
  const auto sgd = train(control_dataset(), mc, c);
  const auto adam = train(control_dataset(), mc, tiny_train(2));
  EXPECT_NE(checkpoint_bytes(sgd.best), checkpoint_bytes(adam.best));
  // SGD keeps no moments.
  for (const auto& [name, t] : sgd.optimizer.first_moment.entries()) {
    for (std::size_t i = 0; i < t.size(); ++i) EXPECT_EQ(t.data()[i], 0.0) << name;
  }
  EXPECT_EQ(optimizer_from_string("sgd"), Optimizer::sgd);
  EXPECT_THROW(optimizer_from_string("rmsprop"), ConfigError);
}
