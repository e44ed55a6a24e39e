#include "tdg/preprocess/vectors.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "tdg/error.hpp"

namespace tdg::preprocess {

ControlVector normalize_control(const sim::RawControl& raw) {
  const sim::RawControl u = raw.clamped();
  const double pedal = std::clamp(u.accel - u.brake, -1.0, 1.0);
  return {(u.steer + 1.0) / 2.0, (pedal + 1.0) / 2.0};
}

StateVector normalize_state(const sim::VehicleState& state) {
  const double speed = std::isfinite(state.speed) ? state.speed : 0.0;
  return {std::clamp(speed / sim::kMaxSpeed, 0.0, 1.0), sim::wrap_degrees(state.yaw) / 360.0,
          sim::wrap_degrees(state.roll) / 360.0, sim::wrap_degrees(state.pitch) / 360.0};
}

std::vector<CylPoint> to_cylindrical(const std::vector<sim::Vec3>& points) {
  std::vector<CylPoint> out;
  out.reserve(points.size());
  for (const auto& p : points) {
    out.push_back({sim::wrap_degrees(sim::rad2deg(std::atan2(p.y, p.x))), std::hypot(p.x, p.y), p.z});
  }
  return out;
}

sim::Vec3 to_cartesian(const CylPoint& p) {
  const double a = sim::deg2rad(p.azimuth_deg);
  return {p.range * std::cos(a), p.range * std::sin(a), p.height};
}

namespace {

int bucket_of(const CylPoint& p) { return static_cast<int>(std::floor(p.azimuth_deg)); }

double slope_deg(const CylPoint& prev, const CylPoint& cur) {
  const double dr = cur.range - prev.range;
  const double dh = cur.height - prev.height;
  if (dr < 1e-6) return dh > 0.0 ? 90.0 : (dh < 0.0 ? -90.0 : 0.0);
  return sim::rad2deg(std::atan2(dh, dr));
}

}  // namespace

std::vector<CylPoint> detect_obstacles(std::vector<CylPoint> points, double threshold_deg) {
  std::sort(points.begin(), points.end(), [](const CylPoint& a, const CylPoint& b) {
    return std::tuple(bucket_of(a), a.range, a.height, a.azimuth_deg) <
           std::tuple(bucket_of(b), b.range, b.height, b.azimuth_deg);
  });
  std::vector<CylPoint> out;
  for (std::size_t k = 1; k < points.size(); ++k) {
    if (bucket_of(points[k]) != bucket_of(points[k - 1])) continue;
    if (slope_deg(points[k - 1], points[k]) > threshold_deg) out.push_back(points[k]);
  }
  return out;
}

EnvironmentVector build_environment_vector(const std::vector<CylPoint>& obstacles) {
  EnvironmentVector env;
  env.fill(1.0);
  for (const auto& p : obstacles) {
    const int b = bucket_of(p);
    if (b < 0 || b >= static_cast<int>(kEnvironmentDim)) continue;
    const double v = std::min(p.range, kMaxObstacleRange) / kMaxObstacleRange;
    env[static_cast<std::size_t>(b)] = std::min(env[static_cast<std::size_t>(b)], v);
  }
  return env;
}

StepVector preprocess_tick(const sim::TimestepRecord& record) {
  StepVector step{};
  const EnvironmentVector env = build_environment_vector(detect_obstacles(to_cylindrical(record.lidar_points)));
  std::copy(env.begin(), env.end(), step.begin());
  const StateVector s = normalize_state(record.vehicle_state);
  step[kEnvironmentDim + 0] = s.speed_n;
  step[kEnvironmentDim + 1] = s.yaw_n;
  step[kEnvironmentDim + 2] = s.roll_n;
  step[kEnvironmentDim + 3] = s.pitch_n;
  const ControlVector c = normalize_control(record.raw_control);
  step[kPerceptionDim + 0] = c.steer_n;
  step[kPerceptionDim + 1] = c.pedal_n;
  return step;
}

std::vector<StepVector> preprocess_episode(const sim::Episode& episode) {
  std::vector<StepVector> out;
  out.reserve(episode.records.size());
  for (const auto& r : episode.records) out.push_back(preprocess_tick(r));
  return out;
}

ConditionWindow window_from_steps(const std::vector<StepVector>& steps, std::size_t t) {
  if (t + 1 < kWindowLength) {
    throw HistoryError("window at tick " + std::to_string(t) + " needs 9 earlier ticks");
  }
  if (t >= steps.size()) {
    throw RangeError("window tick " + std::to_string(t) + " beyond episode of " +
                     std::to_string(steps.size()) + " ticks");
  }
  ConditionWindow w;
  for (std::size_t k = 0; k < kWindowLength; ++k) w[k] = steps[t + 1 - kWindowLength + k];
  return w;
}

ConditionWindow build_window(const sim::Episode& episode, std::size_t t) {
  if (t + 1 < kWindowLength) {
    throw HistoryError("window at tick " + std::to_string(t) + " needs 9 earlier ticks");
  }
  if (t >= episode.records.size()) {
    throw RangeError("window tick " + std::to_string(t) + " beyond episode of " +
                     std::to_string(episode.records.size()) + " ticks");
  }
  std::vector<StepVector> steps;
  for (std::size_t k = t + 1 - kWindowLength; k <= t; ++k) steps.push_back(preprocess_tick(episode.records[k]));
  return window_from_steps(steps, kWindowLength - 1);
}

}  // namespace tdg::preprocess
