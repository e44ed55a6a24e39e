#include "tdg/sim/vehicle.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "tdg/error.hpp"

namespace tdg::sim {

RawControl RawControl::clamped() const {
  auto finite_or_zero = [](double v) { return std::isfinite(v) ? v : 0.0; };
  return {std::clamp(finite_or_zero(steer), -1.0, 1.0), std::clamp(finite_or_zero(accel), 0.0, 1.0),
          std::clamp(finite_or_zero(brake), 0.0, 1.0)};
}

VehicleState step_vehicle(const VehicleState& state, const RawControl& control,
                          const VehicleParams& params, const Roughness& ground, double dt) {
  if (!(dt > 0.0)) throw RangeError("step_vehicle: dt must be positive");
  const RawControl u = control.clamped();
  VehicleState next = state;

  const double steer_angle = u.steer * deg2rad(params.max_steer_deg);
  const double yaw_rate = state.speed / params.wheelbase * std::tan(steer_angle);
  next.yaw = wrap_degrees(state.yaw + rad2deg(yaw_rate * dt));

  const double accel = u.accel * params.max_accel - u.brake * params.max_brake - params.drag * state.speed;
  next.speed = std::clamp(state.speed + accel * dt, 0.0, kMaxSpeed);

  if (state.speed != 0.0) {
    next.position = state.position + (state.speed * dt) * heading_vector(next.yaw);
    std::tie(next.roll, next.pitch) = ground.sample(next.position);
  }
  return next;
}

}  // namespace tdg::sim
