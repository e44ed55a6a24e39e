#include "tdg/sim/episode.hpp"

#include <cmath>
#include <tuple>

#include "tdg/error.hpp"

namespace tdg::sim {

VehicleState initial_state(const Terrain& terrain) {
  VehicleState s;
  s.position = terrain.start();
  s.yaw = terrain.start_yaw();
  std::tie(s.roll, s.pitch) = terrain.roughness().sample(s.position);
  return s;
}

Episode run_episode(const Terrain& terrain, Driver& driver, std::uint64_t seed,
                    std::int64_t tick_limit, const SimConfig& config) {
  if (tick_limit <= 0) throw RangeError("run_episode: tick_limit must be positive");
  Episode ep;
  ep.terrain_id = terrain.id();
  ep.driver_id = driver.id();
  ep.seed = seed;
  driver.begin_episode(terrain, seed);

  VehicleState state = initial_state(terrain);
  bool in_contact = false;
  for (std::int64_t tick = 0; tick < tick_limit; ++tick) {
    TimestepRecord rec;
    rec.tick_index = tick;
    rec.time = tick_time(tick);
    rec.vehicle_state = state;
    rec.lidar_points = lidar_scan(terrain, state, config.lidar);
    rec.raw_control = driver.act(Observation{tick, rec.vehicle_state, rec.lidar_points}, terrain).clamped();
    const RawControl control = rec.raw_control;
    ep.records.push_back(std::move(rec));

    if (norm(state.position - terrain.end()) <= config.finish_radius) {
      ep.completed = true;
      break;
    }

    VehicleState next = step_vehicle(state, control, config.vehicle, terrain.roughness());
    Projection proj = terrain.project(next.position);
    if (proj.overshoot > 0.0) break;  // drove off the far end without finishing
    bool contact = false;
    if (proj.overshoot < 0.0) {
      next.position = terrain.point_at(0.0) + proj.offset * left_normal(terrain.tangent_at(0.0));
      proj = terrain.project(next.position);
      contact = true;
    }
    const double limit = terrain.half_width_at(proj.arc_length) - config.vehicle.radius;
    if (std::abs(proj.offset) > limit) {
      const double side = proj.offset > 0.0 ? 1.0 : -1.0;
      const Vec2 normal = left_normal(terrain.tangent_at(proj.arc_length));
      next.position = terrain.point_at(proj.arc_length) + (side * limit) * normal;
      contact = true;
    }
    if (contact) {
      std::tie(next.roll, next.pitch) = terrain.roughness().sample(next.position);
      if (!in_contact) ++ep.collision_count;
    }
    in_contact = contact;
    state = next;
  }
  return ep;
}

}  // namespace tdg::sim
