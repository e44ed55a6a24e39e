#pragma once

#include "tdg/sim/geometry.hpp"
#include "tdg/sim/terrain.hpp"

namespace tdg::sim {

inline constexpr double kTickSeconds = 0.1;
inline constexpr double kMaxSpeed = 30.0;

struct VehicleState {
  Vec2 position;
  double yaw = 0.0;    // compass degrees in [0, 360)
  double roll = 0.0;   // degrees
  double pitch = 0.0;  // degrees
  double speed = 0.0;  // m/s in [0, 30]

  friend bool operator==(const VehicleState&, const VehicleState&) = default;
};

// Device-normalized driver inputs. steer: -1 full left .. +1 full right.
struct RawControl {
  double steer = 0.0;
  double accel = 0.0;
  double brake = 0.0;

  RawControl clamped() const;
  friend bool operator==(const RawControl&, const RawControl&) = default;
};

struct VehicleParams {
  double wheelbase = 3.0;        // m
  double max_steer_deg = 30.0;
  double max_accel = 3.0;        // m/s^2 at full throttle
  double max_brake = 6.0;        // m/s^2 at full brake
  double drag = 0.05;            // 1/s, linear
  double radius = 1.0;           // collision circle, m

  friend bool operator==(const VehicleParams&, const VehicleParams&) = default;
};

// Kinematic bicycle step. The position advances with the speed held during
// the tick, along the updated heading.
VehicleState step_vehicle(const VehicleState& state, const RawControl& control,
                          const VehicleParams& params, const Roughness& ground,
                          double dt = kTickSeconds);

}  // namespace tdg::sim
