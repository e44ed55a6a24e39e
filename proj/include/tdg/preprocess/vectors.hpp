#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "tdg/sim/episode.hpp"

namespace tdg::preprocess {

inline constexpr std::size_t kEnvironmentDim = 180;
inline constexpr std::size_t kStateDim = 4;
inline constexpr std::size_t kControlDim = 2;
inline constexpr std::size_t kPerceptionDim = kEnvironmentDim + kStateDim;  // 184
inline constexpr std::size_t kStepDim = kPerceptionDim + kControlDim;       // 186
inline constexpr std::size_t kWindowLength = 10;

inline constexpr double kMaxObstacleRange = 50.0;  // m
inline constexpr double kDefaultSlopeThreshold = 45.0;  // degrees

struct ControlVector {
  double steer_n = 0.5;
  double pedal_n = 0.5;
  friend bool operator==(const ControlVector&, const ControlVector&) = default;
};

struct StateVector {
  double speed_n = 0.0;
  double yaw_n = 0.0;
  double roll_n = 0.0;
  double pitch_n = 0.0;
  friend bool operator==(const StateVector&, const StateVector&) = default;
};

using EnvironmentVector = std::array<double, kEnvironmentDim>;

struct CylPoint {
  double azimuth_deg = 0.0;  // [0, 360): 0 right, 90 forward, 180 left
  double range = 0.0;        // horizontal distance, m
  double height = 0.0;       // m
  friend bool operator==(const CylPoint&, const CylPoint&) = default;
};

// Raw inputs are clamped into their declared ranges first.
ControlVector normalize_control(const sim::RawControl& raw);
StateVector normalize_state(const sim::VehicleState& state);

std::vector<CylPoint> to_cylindrical(const std::vector<sim::Vec3>& points);
sim::Vec3 to_cartesian(const CylPoint& p);

// Buckets points by integer azimuth degree and, within a bucket ordered by
// range, marks a point whose slope to its predecessor is strictly greater
// than `threshold_deg`. Output is sorted by (azimuth bucket, range, height).
std::vector<CylPoint> detect_obstacles(std::vector<CylPoint> points,
                                       double threshold_deg = kDefaultSlopeThreshold);

// Nearest obstacle per forward degree over 50 m; 1.0 where nothing was seen.
EnvironmentVector build_environment_vector(const std::vector<CylPoint>& obstacles);

// One tick flattened as environment(180) | state(4) | control(2).
using StepVector = std::array<double, kStepDim>;

StepVector preprocess_tick(const sim::TimestepRecord& record);
std::vector<StepVector> preprocess_episode(const sim::Episode& episode);

// Entries for ticks t-9..t; index 9 is the current step.
using ConditionWindow = std::array<StepVector, kWindowLength>;

// Throws HistoryError when t < 9 and RangeError when t is past the end.
ConditionWindow build_window(const sim::Episode& episode, std::size_t t);
ConditionWindow window_from_steps(const std::vector<StepVector>& steps, std::size_t t);

}  // namespace tdg::preprocess
