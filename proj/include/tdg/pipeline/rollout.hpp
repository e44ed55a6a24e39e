#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

#include "tdg/cvae/model.hpp"
#include "tdg/drivers/scripted.hpp"
#include "tdg/preprocess/vectors.hpp"
#include "tdg/sim/episode.hpp"

namespace tdg::pipeline {

struct RolloutConfig {
  std::int64_t tick_limit = 3000;
  int runs = 28;
  int warmup_ticks = 10;
  // Current perception comes from the forward model instead of the simulator.
  bool hallucinated_perception = false;
  unsigned threads = 1;
  sim::SimConfig sim;

  void validate() const;
  friend bool operator==(const RolloutConfig&, const RolloutConfig&) = default;
};

// (steer_n, pedal_n) back to raw controls; the pedal is split by sign.
sim::RawControl denormalize_control(double steer_n, double pedal_n);

// Drives with an inverse model. The warmup controller acts for the first
// `warmup_ticks` ticks to fill the history; afterwards each tick's control is
// a model draw seeded by (episode seed, tick).
class ModelDriver final : public sim::Driver {
 public:
  ModelDriver(const cvae::CvaeModel& inverse, RolloutConfig config, const cvae::CvaeModel* forward = nullptr,
              drivers::DriverProfile warmup = drivers::oracle_profile());

  std::string id() const override { return "model"; }
  void begin_episode(const sim::Terrain& terrain, std::uint64_t seed) override;
  sim::RawControl act(const sim::Observation& obs, const sim::Terrain& terrain) override;

 private:
  const cvae::CvaeModel& inverse_;
  const cvae::CvaeModel* forward_;
  RolloutConfig config_;
  drivers::ScriptedDriver warmup_;
  std::uint64_t seed_ = 0;
  std::deque<preprocess::StepVector> history_;
};

sim::Episode rollout(const cvae::CvaeModel& inverse, const sim::Terrain& terrain, std::uint64_t seed,
                     const RolloutConfig& config, const cvae::CvaeModel* forward = nullptr);

// `config.runs` rollouts with seeds derived from `seed`, run on up to
// `config.threads` workers; order follows the run index.
std::vector<sim::Episode> rollout_batch(const cvae::CvaeModel& inverse, const sim::Terrain& terrain,
                                        std::uint64_t seed, const RolloutConfig& config,
                                        const cvae::CvaeModel* forward = nullptr);

}  // namespace tdg::pipeline
