#include "tdg/pipeline/collect.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

#include "tdg/error.hpp"
#include "tdg/random.hpp"

namespace tdg::pipeline {

void CollectConfig::validate() const {
  if (runs_per_profile <= 0) throw ConfigError("collect.runs_per_profile must be > 0");
  if (tick_limit <= 0) throw ConfigError("collect.tick_limit must be > 0");
}

std::vector<sim::Episode> collect(const sim::Terrain& terrain, const std::vector<drivers::DriverProfile>& profiles,
                                  std::uint64_t seed, const CollectConfig& config) {
  config.validate();
  if (profiles.empty()) throw UsageError("collect: no driver profiles");
  for (const auto& p : profiles) p.validate();
  const std::size_t per = static_cast<std::size_t>(config.runs_per_profile);
  const std::size_t total = profiles.size() * per;
  std::vector<sim::Episode> out(total);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < total;) {
      drivers::ScriptedDriver driver(profiles[i / per], config.sim.vehicle);
      out[i] = sim::run_episode(terrain, driver, derive_seed(seed, "collect-run", i), config.tick_limit,
                               config.sim);
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(config.threads, static_cast<unsigned>(total)));
  std::vector<std::thread> pool;
  for (unsigned k = 1; k < n; ++k) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return out;
}

}  // namespace tdg::pipeline
