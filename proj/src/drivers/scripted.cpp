#include "tdg/drivers/scripted.hpp"

#include <algorithm>
#include <cmath>

#include "tdg/error.hpp"
#include "tdg/random.hpp"

namespace tdg::drivers {

using sim::Vec2;

std::string to_string(Group g) { return g == Group::experienced ? "experienced" : "inexperienced"; }

Group group_from_string(const std::string& s) {
  if (s == "experienced") return Group::experienced;
  if (s == "inexperienced") return Group::inexperienced;
  throw ConfigError("unknown driver group '" + s + "'");
}

void DriverProfile::validate() const {
  if (!(lookahead > 0.0)) throw ConfigError("driver '" + name + "': lookahead must be > 0");
  if (!(target_speed > 0.0 && target_speed <= sim::kMaxSpeed)) {
    throw ConfigError("driver '" + name + "': target_speed must be in (0, 30]");
  }
  if (!(steer_noise_sd >= 0.0) || !(pedal_noise_sd >= 0.0)) {
    throw ConfigError("driver '" + name + "': noise standard deviations must be >= 0");
  }
  if (reaction_lag < 0) throw ConfigError("driver '" + name + "': reaction_lag must be >= 0");
}

double pure_pursuit_steer(const sim::VehicleState& state, const sim::Terrain& terrain,
                          double lookahead, const sim::VehicleParams& vehicle) {
  const sim::Projection proj = terrain.project(state.position);
  const Vec2 target = terrain.point_at(proj.arc_length + lookahead);
  const Vec2 forward = sim::heading_vector(state.yaw);
  const Vec2 right{forward.y, -forward.x};
  const Vec2 d = target - state.position;
  const double lateral = sim::dot(d, right);
  const double dist2 = sim::dot(d, d);
  if (dist2 < 1e-12) return 0.0;
  const double curvature = 2.0 * lateral / dist2;
  const double angle = std::atan(curvature * vehicle.wheelbase);
  return std::clamp(angle / sim::deg2rad(vehicle.max_steer_deg), -1.0, 1.0);
}

Pedals speed_control(const sim::VehicleState& state, const sim::Terrain& terrain,
                     const DriverProfile& profile, const sim::VehicleParams& vehicle) {
  const double s = terrain.project(state.position).arc_length;
  const double preview = std::max(20.0, 3.0 * state.speed);
  const double kappa = terrain.max_abs_curvature(s, s + preview);
  double desired = profile.target_speed;
  if (kappa > 1e-9) desired = std::min(desired, std::sqrt(kComfortLateralAccel / kappa));
  const double command = vehicle.drag * state.speed + kSpeedGain * (desired - state.speed);
  if (command >= 0.0) return {std::min(command / vehicle.max_accel, 1.0), 0.0};
  return {0.0, std::min(-command / vehicle.max_brake, 1.0)};
}

ScriptedDriver::ScriptedDriver(DriverProfile profile, sim::VehicleParams vehicle)
    : profile_(std::move(profile)), vehicle_(vehicle) {
  profile_.validate();
}

void ScriptedDriver::begin_episode(const sim::Terrain&, std::uint64_t seed) {
  noise_seed_ = mix64(profile_.seed ^ mix64(seed));
  steer_state_ = 0.0;
  pedal_state_ = 0.0;
}

sim::RawControl ScriptedDriver::act(const sim::Observation& obs, const sim::Terrain& terrain) {
  double steer = pure_pursuit_steer(obs.state, terrain, profile_.lookahead, vehicle_);
  const Pedals pedals = speed_control(obs.state, terrain, profile_, vehicle_);
  double pedal = pedals.accel - pedals.brake;

  if (profile_.steer_noise_sd > 0.0 || profile_.pedal_noise_sd > 0.0) {
    NormalSampler noise(derive_seed(noise_seed_, "driver-noise", static_cast<std::uint64_t>(obs.tick)));
    steer += profile_.steer_noise_sd * noise();
    pedal += profile_.pedal_noise_sd * noise();
  }
  steer = std::clamp(steer, -1.0, 1.0);
  pedal = std::clamp(pedal, -1.0, 1.0);

  const double alpha = 1.0 / (1.0 + profile_.reaction_lag);
  steer_state_ += alpha * (steer - steer_state_);
  pedal_state_ += alpha * (pedal - pedal_state_);

  return sim::RawControl{steer_state_, std::max(pedal_state_, 0.0), std::max(-pedal_state_, 0.0)}
      .clamped();
}

std::vector<DriverProfile> default_population() {
  std::vector<DriverProfile> out;
  for (int k = 0; k < 5; ++k) {
    DriverProfile p;
    p.name = "experienced-" + std::to_string(k + 1);
    p.group = Group::experienced;
    p.lookahead = 10.0 + 0.5 * k;
    p.target_speed = 12.0 + 0.5 * k;
    p.steer_noise_sd = (1.0 + 0.5 * k) / 100.0;
    p.pedal_noise_sd = (1.0 + 0.5 * k) / 100.0;
    p.reaction_lag = 0;
    p.seed = 1000 + static_cast<std::uint64_t>(k);
    out.push_back(p);
  }
  for (int k = 0; k < 14; ++k) {
    DriverProfile p;
    p.name = "inexperienced-" + std::to_string(k + 1);
    p.group = Group::inexperienced;
    p.lookahead = 7.0 + 0.25 * (k % 5);
    p.target_speed = 8.0 + 6.0 * ((3 * k + 7) % 14) / 13.0;
    p.steer_noise_sd = (5.0 + 10.0 * ((k * 5) % 14) / 13.0) / 100.0;
    p.pedal_noise_sd = (5.0 + 10.0 * ((k * 3) % 14) / 13.0) / 100.0;
    p.reaction_lag = 2 + (k + 3) % 4;
    p.seed = 2000 + static_cast<std::uint64_t>(k);
    out.push_back(p);
  }
  return out;
}

std::vector<DriverProfile> select_group(const std::vector<DriverProfile>& all, Group group) {
  std::vector<DriverProfile> out;
  std::copy_if(all.begin(), all.end(), std::back_inserter(out),
               [group](const DriverProfile& p) { return p.group == group; });
  return out;
}

DriverProfile oracle_profile() {
  DriverProfile p;
  p.name = "oracle";
  p.group = Group::experienced;
  p.lookahead = 10.0;
  p.target_speed = 12.0;
  p.seed = 1;
  return p;
}

}  // namespace tdg::drivers
