#pragma once

#include <cstdint>
#include <vector>

#include "tdg/drivers/scripted.hpp"
#include "tdg/sim/episode.hpp"

namespace tdg::pipeline {

struct CollectConfig {
  int runs_per_profile = 2;
  std::int64_t tick_limit = 3000;
  unsigned threads = 1;
  sim::SimConfig sim;

  void validate() const;
  friend bool operator==(const CollectConfig&, const CollectConfig&) = default;
};

// Every profile drives `runs_per_profile` episodes on the terrain. Episode
// seeds derive from (seed, run index); output is profile-major.
std::vector<sim::Episode> collect(const sim::Terrain& terrain, const std::vector<drivers::DriverProfile>& profiles,
                                  std::uint64_t seed, const CollectConfig& config);

}  // namespace tdg::pipeline
