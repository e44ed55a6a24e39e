#pragma once

#include <cmath>
#include <numbers>

namespace tdg::sim {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double k, Vec2 a) { return {k * a.x, k * a.y}; }
  friend bool operator==(Vec2, Vec2) = default;
};

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  friend bool operator==(Vec3, Vec3) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline Vec2 left_normal(Vec2 t) { return {-t.y, t.x}; }

inline double deg2rad(double d) { return d * std::numbers::pi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / std::numbers::pi; }

// Wraps into [0, 360).
inline double wrap_degrees(double d) {
  double w = std::fmod(d, 360.0);
  if (w < 0.0) w += 360.0;
  if (w >= 360.0) w -= 360.0;
  return w;
}

// Yaw is a compass heading in degrees: 0 points along +y, 90 along +x, and it
// grows clockwise, so positive (rightward) steering increases it.
inline Vec2 heading_vector(double yaw_deg) {
  const double r = deg2rad(yaw_deg);
  return {std::sin(r), std::cos(r)};
}

// Compass yaw of a world-frame direction.
inline double yaw_of(Vec2 direction) { return wrap_degrees(rad2deg(std::atan2(direction.x, direction.y))); }

}  // namespace tdg::sim
