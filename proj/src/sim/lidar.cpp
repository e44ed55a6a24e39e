#include "tdg/sim/lidar.hpp"

#include <cmath>
#include <limits>

namespace tdg::sim {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Segment {
  Vec2 a;
  Vec2 b;
};

// Wall segments with an endpoint or the segment itself within reach.
std::vector<Segment> nearby_walls(const Terrain& terrain, Vec2 origin, double reach) {
  std::vector<Segment> out;
  const auto& left = terrain.left_wall();
  const auto& right = terrain.right_wall();
  const auto& center = terrain.centerline();
  double max_hw = 0.0;
  for (double h : terrain.half_widths()) max_hw = std::max(max_hw, h);
  const double spacing = terrain.length() / static_cast<double>(center.size() - 1);
  const double gate = reach + max_hw + 2.0 * spacing;
  for (std::size_t k = 0; k + 1 < center.size(); ++k) {
    if (norm(center[k] - origin) > gate) continue;
    out.push_back({left[k], left[k + 1]});
    out.push_back({right[k], right[k + 1]});
  }
  return out;
}

// Horizontal distance along `dir` (unit) to the first wall crossing.
double wall_distance(const std::vector<Segment>& walls, Vec2 origin, Vec2 dir) {
  double best = kInf;
  for (const Segment& s : walls) {
    const Vec2 e = s.b - s.a;
    const double denom = cross(dir, e);
    if (std::abs(denom) < 1e-12) continue;
    const Vec2 w = s.a - origin;
    const double t = cross(w, e) / denom;
    const double u = cross(w, dir) / denom;
    if (t > 1e-9 && u >= 0.0 && u <= 1.0 && t < best) best = t;
  }
  return best;
}

// Divides by the integral reciprocal so values print with at most that many
// decimals in shortest round-trip form.
double quantize(double v, double q) {
  if (q <= 0.0) return v;
  const double inv = std::round(1.0 / q);
  return std::round(v * inv) / inv;
}

std::optional<Vec3> resolve_hit(double wall_dist, double bearing_deg, double elevation_deg,
                                double wall_height, const LidarParams& p) {
  const double elev = deg2rad(elevation_deg);
  const double tan_e = std::tan(elev);
  double horizontal = kInf;
  double height = 0.0;
  const double ground = elevation_deg < 0.0 ? p.sensor_height / -tan_e : kInf;
  if (ground < wall_dist) {
    horizontal = ground;
    height = -p.sensor_height;
  } else if (std::isfinite(wall_dist)) {
    const double z = wall_dist * tan_e;
    if (z + p.sensor_height > wall_height) return std::nullopt;  // passes over the rim
    horizontal = wall_dist;
    height = z;
  }
  if (!std::isfinite(horizontal)) return std::nullopt;
  if (horizontal / std::cos(elev) > p.max_range) return std::nullopt;
  const double b = deg2rad(bearing_deg);
  return Vec3{quantize(-horizontal * std::sin(b), p.quantum),
              quantize(horizontal * std::cos(b), p.quantum), quantize(height, p.quantum)};
}

Vec2 ray_direction(const VehicleState& state, double bearing_deg) {
  return heading_vector(state.yaw - bearing_deg);
}

}  // namespace

std::vector<double> channel_elevations(const LidarParams& params) {
  std::vector<double> out(static_cast<std::size_t>(params.channels));
  const double span = params.max_elevation_deg - params.min_elevation_deg;
  for (int k = 0; k < params.channels; ++k) {
    out[static_cast<std::size_t>(k)] =
        params.channels == 1 ? params.min_elevation_deg
                             : params.min_elevation_deg + span * k / (params.channels - 1);
  }
  return out;
}

std::optional<Vec3> cast_ray(const Terrain& terrain, const VehicleState& state,
                             double bearing_deg, double elevation_deg, const LidarParams& params) {
  const auto walls = nearby_walls(terrain, state.position, params.max_range);
  const double d = wall_distance(walls, state.position, ray_direction(state, bearing_deg));
  return resolve_hit(d, bearing_deg, elevation_deg, terrain.config().wall_height, params);
}

std::vector<Vec3> lidar_scan(const Terrain& terrain, const VehicleState& state,
                             const LidarParams& params) {
  const auto walls = nearby_walls(terrain, state.position, params.max_range);
  const auto elevations = channel_elevations(params);
  const int bins = static_cast<int>(std::lround(180.0 / params.azimuth_step_deg));
  std::vector<Vec3> points;
  points.reserve(static_cast<std::size_t>(bins) * elevations.size());
  for (int k = 0; k < bins; ++k) {
    const double bearing = -90.0 + (k + 0.5) * params.azimuth_step_deg;
    const double d = wall_distance(walls, state.position, ray_direction(state, bearing));
    for (double e : elevations) {
      if (auto hit = resolve_hit(d, bearing, e, terrain.config().wall_height, params)) {
        points.push_back(*hit);
      }
    }
  }
  return points;
}

}  // namespace tdg::sim
