#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tdg/sim/geometry.hpp"

namespace tdg::sim {

struct TerrainConfig {
  double length = 900.0;          // centerline arc length, m
  double half_width = 7.0;        // nominal corridor half-width, m
  double width_variation = 1.0;   // amplitude of smooth half-width variation, m
  double curviness = 0.6;         // 0 = straight corridor, 1 = tightest turns
  double min_radius = 40.0;       // turn radius at curviness 1, m
  double wall_height = 8.0;       // m
  double sample_spacing = 1.0;    // centerline sampling, m
  double segment_min = 40.0;      // straight/curve piece length range, m
  double segment_max = 120.0;
  int section_count = 9;
  double roughness_deg = 1.5;     // roll/pitch amplitude of the ground, degrees

  friend bool operator==(const TerrainConfig&, const TerrainConfig&) = default;
};

// Smooth seeded ground undulation giving small roll and pitch angles.
struct Roughness {
  double amplitude_deg = 0.0;
  double phase[4] = {0.0, 0.0, 0.0, 0.0};

  // (roll, pitch) in degrees at a world position.
  std::pair<double, double> sample(Vec2 p) const;
};

struct Projection {
  double arc_length = 0.0;   // clamped to [0, length]
  double offset = 0.0;       // signed, positive left of travel direction
  double overshoot = 0.0;    // < 0 before the start, > 0 beyond the end, else 0
  std::size_t segment = 0;
};

// Procedural canyon: a sampled centerline with a per-sample corridor
// half-width, bounded by vertical walls.
class Terrain {
 public:
  static Terrain generate(std::uint64_t seed, const TerrainConfig& config);

  // Rebuilds from stored samples (used by the terrain file reader).
  Terrain(std::uint64_t seed, TerrainConfig config, std::vector<Vec2> centerline,
          std::vector<double> half_widths, Roughness roughness);

  std::uint64_t seed() const noexcept { return seed_; }
  const TerrainConfig& config() const noexcept { return config_; }
  std::string id() const;

  const std::vector<Vec2>& centerline() const noexcept { return centerline_; }
  const std::vector<double>& half_widths() const noexcept { return half_widths_; }
  const std::vector<double>& arc_lengths() const noexcept { return arc_; }
  const std::vector<Vec2>& left_wall() const noexcept { return left_wall_; }
  const std::vector<Vec2>& right_wall() const noexcept { return right_wall_; }
  const Roughness& roughness() const noexcept { return roughness_; }

  double length() const noexcept { return arc_.back(); }
  int section_count() const noexcept { return config_.section_count; }
  double section_length() const noexcept { return length() / config_.section_count; }
  int section_index(double arc_length) const;

  Vec2 point_at(double s) const;
  Vec2 tangent_at(double s) const;
  double half_width_at(double s) const;
  // Signed curvature (1/m, positive turning left) near arc length s.
  double curvature_at(double s) const;
  // Largest |curvature| over [from, to].
  double max_abs_curvature(double from, double to) const;

  Projection project(Vec2 p) const;
  // Signed perpendicular distance from the centerline; throws RangeError when
  // the point lies before the start or beyond the end.
  double lateral_offset(Vec2 p) const;

  Vec2 start() const { return centerline_.front(); }
  Vec2 end() const { return centerline_.back(); }
  double start_yaw() const;

 private:
  void finalize();
  std::size_t sample_index(double s) const;

  std::uint64_t seed_ = 0;
  TerrainConfig config_;
  std::vector<Vec2> centerline_;
  std::vector<double> half_widths_;
  std::vector<double> arc_;
  std::vector<double> curvature_;
  std::vector<Vec2> left_wall_;
  std::vector<Vec2> right_wall_;
  Roughness roughness_;
};

// Structured-text terrain file (JSON): config, seed, roughness phases and the
// sampled centerline/half-widths with round-trip precision.
std::string serialize_terrain(const Terrain& terrain);
Terrain deserialize_terrain(const std::string& text);

}  // namespace tdg::sim
