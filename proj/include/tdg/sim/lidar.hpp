#pragma once

#include <optional>
#include <vector>

#include "tdg/sim/geometry.hpp"
#include "tdg/sim/terrain.hpp"
#include "tdg/sim/vehicle.hpp"

namespace tdg::sim {

struct LidarParams {
  int channels = 16;
  double min_elevation_deg = -15.0;
  double max_elevation_deg = 15.0;
  double azimuth_step_deg = 1.0;
  double max_range = 50.0;      // m, 3D range
  double sensor_height = 2.0;   // m above ground
  double quantum = 1e-4;        // output coordinates are rounded to this, m

  friend bool operator==(const LidarParams&, const LidarParams&) = default;
};

// Vehicle frame: x to the right, y forward, z up from the sensor origin.
//
// Casts one ray. `bearing_deg` is measured from the heading, positive to the
// left; `elevation_deg` above the horizontal. Walls are vertical planes of
// the terrain's wall height; the ground is the flat plane sensor_height below.
// Returns nothing when the first hit is beyond max_range or the ray escapes.
std::optional<Vec3> cast_ray(const Terrain& terrain, const VehicleState& state,
                             double bearing_deg, double elevation_deg,
                             const LidarParams& params = {});

// Full sweep over the forward half-plane: rays at bearings centered in each
// azimuth_step bin across (-90, 90), for every channel elevation.
std::vector<Vec3> lidar_scan(const Terrain& terrain, const VehicleState& state,
                             const LidarParams& params = {});

std::vector<double> channel_elevations(const LidarParams& params);

}  // namespace tdg::sim
