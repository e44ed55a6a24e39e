#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tdg/sim/lidar.hpp"
#include "tdg/sim/terrain.hpp"
#include "tdg/sim/vehicle.hpp"

namespace tdg::sim {

struct TimestepRecord {
  std::int64_t tick_index = 0;
  double time = 0.0;  // tick_index * 0.1 s
  RawControl raw_control;
  VehicleState vehicle_state;
  std::vector<Vec3> lidar_points;

  friend bool operator==(const TimestepRecord&, const TimestepRecord&) = default;
};

struct Episode {
  std::string terrain_id;
  std::string driver_id;
  std::uint64_t seed = 0;
  std::vector<TimestepRecord> records;
  bool completed = false;
  int collision_count = 0;

  friend bool operator==(const Episode&, const Episode&) = default;
};

inline double tick_time(std::int64_t tick) { return static_cast<double>(tick) * kTickSeconds; }

// What a driver sees at the start of a tick.
struct Observation {
  std::int64_t tick = 0;
  const VehicleState& state;
  const std::vector<Vec3>& lidar_points;
};

// Anything that turns observations into controls. `begin_episode` is called
// once before tick 0 with the episode seed; implementations keep per-episode
// state only.
class Driver {
 public:
  virtual ~Driver() = default;
  virtual std::string id() const = 0;
  virtual void begin_episode(const Terrain& terrain, std::uint64_t seed) = 0;
  virtual RawControl act(const Observation& obs, const Terrain& terrain) = 0;
};

struct SimConfig {
  VehicleParams vehicle;
  LidarParams lidar;
  double finish_radius = 5.0;  // m from the centerline end

  friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

VehicleState initial_state(const Terrain& terrain);

// Drives until the vehicle is within finish_radius of the end (completed),
// leaves past the end, or tick_limit records have been logged. Wall contact
// pushes the vehicle back inside and counts one collision per contact onset.
Episode run_episode(const Terrain& terrain, Driver& driver, std::uint64_t seed,
                    std::int64_t tick_limit, const SimConfig& config = {});

}  // namespace tdg::sim
