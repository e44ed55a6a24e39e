#include "tdg/sim/terrain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <json.hpp>

#include "tdg/error.hpp"
#include "tdg/random.hpp"

namespace tdg::sim {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
// Vehicle width 2 m plus 1 m clearance.
constexpr double kMinHalfWidth = 3.0;
// Heading stays within this many radians of the initial direction so the
// corridor cannot wrap back onto itself.
constexpr double kMaxHeading = 1.2;

void validate(const TerrainConfig& c) {
  if (!(c.length >= 100.0)) {
    throw GenerationError("terrain length must be >= 100 m, got " + std::to_string(c.length));
  }
  if (!(c.sample_spacing > 0.0) || c.sample_spacing > 10.0) {
    throw GenerationError("terrain sample_spacing must be in (0, 10]");
  }
  if (!(c.curviness >= 0.0 && c.curviness <= 1.0)) {
    throw GenerationError("terrain curviness must be in [0, 1]");
  }
  if (c.width_variation < 0.0 || c.half_width - c.width_variation < kMinHalfWidth) {
    throw GenerationError("corridor half-width can drop below vehicle width + 1 m");
  }
  if (c.curviness > 0.0 && c.min_radius <= c.half_width + c.width_variation) {
    throw GenerationError("min_radius " + std::to_string(c.min_radius) +
                          " m folds the inner wall of a " +
                          std::to_string(c.half_width + c.width_variation) +
                          " m half-width corridor (self-intersection)");
  }
  if (!(c.segment_min > 0.0) || c.segment_max < c.segment_min) {
    throw GenerationError("terrain segment length range is empty");
  }
  if (c.section_count < 1) throw GenerationError("terrain needs at least one section");
  if (!(c.wall_height > 0.0)) throw GenerationError("wall_height must be positive");
}

// Walls of distant parts of the corridor must not overlap.
void check_no_self_intersection(const std::vector<Vec2>& pts, const std::vector<double>& arc,
                                const std::vector<double>& hw) {
  const double max_hw = *std::max_element(hw.begin(), hw.end());
  const double clearance = 2.0 * max_hw + 1.0;
  const std::size_t stride = std::max<std::size_t>(1, pts.size() / 600);
  for (std::size_t i = 0; i < pts.size(); i += stride) {
    for (std::size_t j = i + stride; j < pts.size(); j += stride) {
      if (arc[j] - arc[i] <= std::numbers::pi * clearance) continue;
      if (norm(pts[j] - pts[i]) < clearance) {
        throw GenerationError("corridor self-intersects near arc length " +
                              std::to_string(arc[i]) + " m and " + std::to_string(arc[j]) + " m");
      }
    }
  }
}

}  // namespace

std::pair<double, double> Roughness::sample(Vec2 p) const {
  if (amplitude_deg == 0.0) return {0.0, 0.0};
  const double roll = amplitude_deg * std::sin(p.x / 7.3 + phase[0]) * std::cos(p.y / 5.1 + phase[1]);
  const double pitch = amplitude_deg * std::cos(p.x / 6.1 + phase[2]) * std::sin(p.y / 8.7 + phase[3]);
  return {roll, pitch};
}

Terrain Terrain::generate(std::uint64_t seed, const TerrainConfig& config) {
  validate(config);
  NormalSampler rng(derive_seed(seed, "terrain"));

  const auto samples = static_cast<std::size_t>(std::llround(config.length / config.sample_spacing));
  const double ds = config.length / static_cast<double>(samples);

  // Piecewise-constant curvature: a straight lead-in, then alternating curves
  // and straights.
  std::vector<double> curvature(samples, 0.0);
  double heading = 0.0;
  std::size_t i = 0;
  bool curve = false;
  double piece = config.segment_min;
  while (i < samples) {
    double kappa = 0.0;
    if (curve && config.curviness > 0.0) {
      const double magnitude = config.curviness / config.min_radius * (0.6 + 0.4 * rng.uniform());
      double sign;
      if (heading > 0.35) {
        sign = -1.0;
      } else if (heading < -0.35) {
        sign = 1.0;
      } else {
        sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
      }
      kappa = sign * magnitude;
      const double room = kMaxHeading - sign * heading;
      piece = std::min(piece, std::max(room, 0.0) / magnitude);
    }
    const auto count = std::max<std::size_t>(1, static_cast<std::size_t>(piece / ds));
    for (std::size_t k = 0; k < count && i < samples; ++k, ++i) {
      curvature[i] = kappa;
      heading += kappa * ds;
    }
    curve = !curve;
    piece = config.segment_min + (config.segment_max - config.segment_min) * rng.uniform();
  }

  std::vector<Vec2> pts;
  pts.reserve(samples + 1);
  pts.push_back({0.0, 0.0});
  heading = 0.0;
  for (std::size_t k = 0; k < samples; ++k) {
    const double mid = heading + 0.5 * curvature[k] * ds;
    pts.push_back(pts.back() + ds * Vec2{std::cos(mid), std::sin(mid)});
    heading += curvature[k] * ds;
  }

  const double phase1 = kTwoPi * rng.uniform(), phase2 = kTwoPi * rng.uniform();
  std::vector<double> hw(pts.size());
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const double s = ds * static_cast<double>(k);
    const double wave = 0.5 * (std::sin(kTwoPi * s / 170.0 + phase1) + std::sin(kTwoPi * s / 67.0 + phase2));
    hw[k] = config.half_width + config.width_variation * wave;
  }

  Roughness rough;
  rough.amplitude_deg = config.roughness_deg;
  for (double& p : rough.phase) p = kTwoPi * rng.uniform();

  Terrain terrain(seed, config, std::move(pts), std::move(hw), rough);
  check_no_self_intersection(terrain.centerline_, terrain.arc_, terrain.half_widths_);
  return terrain;
}

Terrain::Terrain(std::uint64_t seed, TerrainConfig config, std::vector<Vec2> centerline,
                 std::vector<double> half_widths, Roughness roughness)
    : seed_(seed),
      config_(config),
      centerline_(std::move(centerline)),
      half_widths_(std::move(half_widths)),
      roughness_(roughness) {
  if (centerline_.size() < 2 || centerline_.size() != half_widths_.size()) {
    throw FormatError("terrain needs >= 2 centerline samples with one half-width each");
  }
  finalize();
}

void Terrain::finalize() {
  const std::size_t n = centerline_.size();
  arc_.assign(n, 0.0);
  for (std::size_t k = 1; k < n; ++k) arc_[k] = arc_[k - 1] + norm(centerline_[k] - centerline_[k - 1]);

  std::vector<double> seg_heading(n - 1);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const Vec2 d = centerline_[k + 1] - centerline_[k];
    seg_heading[k] = std::atan2(d.y, d.x);
  }
  curvature_.assign(n, 0.0);
  for (std::size_t k = 1; k + 1 < n; ++k) {
    double dh = seg_heading[k] - seg_heading[k - 1];
    while (dh > std::numbers::pi) dh -= kTwoPi;
    while (dh < -std::numbers::pi) dh += kTwoPi;
    curvature_[k] = dh / (0.5 * (arc_[k + 1] - arc_[k - 1]));
  }
  curvature_[0] = curvature_[1 % n];
  curvature_[n - 1] = curvature_[n - 2];

  left_wall_.resize(n);
  right_wall_.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const Vec2 a = centerline_[k == 0 ? 0 : k - 1];
    const Vec2 b = centerline_[k + 1 == n ? k : k + 1];
    const Vec2 t = (1.0 / norm(b - a)) * (b - a);
    const Vec2 nrm = left_normal(t);
    left_wall_[k] = centerline_[k] + half_widths_[k] * nrm;
    right_wall_[k] = centerline_[k] - half_widths_[k] * nrm;
  }
}

std::string Terrain::id() const { return "terrain-" + std::to_string(seed_); }

int Terrain::section_index(double s) const {
  const int idx = static_cast<int>(std::floor(s / section_length()));
  return std::clamp(idx, 0, config_.section_count - 1);
}

std::size_t Terrain::sample_index(double s) const {
  auto it = std::upper_bound(arc_.begin(), arc_.end(), s);
  if (it == arc_.begin()) return 0;
  const auto idx = static_cast<std::size_t>(it - arc_.begin()) - 1;
  return std::min(idx, arc_.size() - 2);
}

Vec2 Terrain::point_at(double s) const {
  s = std::clamp(s, 0.0, length());
  const std::size_t k = sample_index(s);
  const double seg = arc_[k + 1] - arc_[k];
  const double u = seg > 0.0 ? (s - arc_[k]) / seg : 0.0;
  return centerline_[k] + u * (centerline_[k + 1] - centerline_[k]);
}

Vec2 Terrain::tangent_at(double s) const {
  const std::size_t k = sample_index(std::clamp(s, 0.0, length()));
  const Vec2 d = centerline_[k + 1] - centerline_[k];
  return (1.0 / norm(d)) * d;
}

double Terrain::half_width_at(double s) const {
  s = std::clamp(s, 0.0, length());
  const std::size_t k = sample_index(s);
  const double seg = arc_[k + 1] - arc_[k];
  const double u = seg > 0.0 ? (s - arc_[k]) / seg : 0.0;
  return half_widths_[k] + u * (half_widths_[k + 1] - half_widths_[k]);
}

double Terrain::curvature_at(double s) const {
  return curvature_[sample_index(std::clamp(s, 0.0, length()))];
}

double Terrain::max_abs_curvature(double from, double to) const {
  from = std::clamp(from, 0.0, length());
  to = std::clamp(to, from, length());
  double best = 0.0;
  for (std::size_t k = sample_index(from); k < arc_.size() && arc_[k] <= to; ++k) {
    best = std::max(best, std::abs(curvature_[k]));
  }
  return best;
}

Projection Terrain::project(Vec2 p) const {
  Projection best;
  double best_dist = std::numeric_limits<double>::infinity();
  const std::size_t segments = centerline_.size() - 1;
  for (std::size_t k = 0; k < segments; ++k) {
    const Vec2 a = centerline_[k];
    const Vec2 d = centerline_[k + 1] - a;
    const double len2 = dot(d, d);
    const double raw = dot(p - a, d) / len2;
    const double u = std::clamp(raw, 0.0, 1.0);
    const Vec2 foot = a + u * d;
    const double dist = norm(p - foot);
    if (dist < best_dist) {
      best_dist = dist;
      const double len = std::sqrt(len2);
      best.segment = k;
      best.arc_length = arc_[k] + u * len;
      best.offset = cross(d, p - a) >= 0.0 ? dist : -dist;
      best.overshoot = 0.0;
      if (k == 0 && raw < 0.0) best.overshoot = raw * len;
      if (k + 1 == segments && raw > 1.0) best.overshoot = (raw - 1.0) * len;
      if (best.overshoot != 0.0) {
        // Off the ends, the offset is the perpendicular component only.
        best.offset = cross(d, p - a) / len;
      }
    }
  }
  return best;
}

double Terrain::lateral_offset(Vec2 p) const {
  const Projection proj = project(p);
  if (proj.overshoot < -1e-9 || proj.overshoot > 1e-9) {
    throw RangeError("position (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                     ") lies beyond the terrain ends by " + std::to_string(proj.overshoot) + " m");
  }
  return proj.offset;
}

double Terrain::start_yaw() const { return yaw_of(centerline_[1] - centerline_[0]); }

std::string serialize_terrain(const Terrain& terrain) {
  const TerrainConfig& c = terrain.config();
  nlohmann::ordered_json j;
  j["format"] = "TDGTERRAIN";
  j["version"] = 1;
  j["seed"] = terrain.seed();
  j["config"] = {{"length", c.length},
                 {"half_width", c.half_width},
                 {"width_variation", c.width_variation},
                 {"curviness", c.curviness},
                 {"min_radius", c.min_radius},
                 {"wall_height", c.wall_height},
                 {"sample_spacing", c.sample_spacing},
                 {"segment_min", c.segment_min},
                 {"segment_max", c.segment_max},
                 {"section_count", c.section_count},
                 {"roughness_deg", c.roughness_deg}};
  const Roughness& r = terrain.roughness();
  j["roughness"] = {{"amplitude_deg", r.amplitude_deg},
                    {"phase", {r.phase[0], r.phase[1], r.phase[2], r.phase[3]}}};
  auto xs = nlohmann::json::array(), ys = nlohmann::json::array();
  for (const Vec2& p : terrain.centerline()) {
    xs.push_back(p.x);
    ys.push_back(p.y);
  }
  j["centerline_x"] = std::move(xs);
  j["centerline_y"] = std::move(ys);
  j["half_width"] = terrain.half_widths();
  return j.dump(1) + "\n";
}

Terrain deserialize_terrain(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("terrain file is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || j.value("format", "") != "TDGTERRAIN") {
    throw FormatError("terrain file: missing format tag TDGTERRAIN");
  }
  if (j.value("version", 0) != 1) throw FormatError("terrain file: unsupported version");
  try {
    const auto& jc = j.at("config");
    TerrainConfig c;
    c.length = jc.at("length");
    c.half_width = jc.at("half_width");
    c.width_variation = jc.at("width_variation");
    c.curviness = jc.at("curviness");
    c.min_radius = jc.at("min_radius");
    c.wall_height = jc.at("wall_height");
    c.sample_spacing = jc.at("sample_spacing");
    c.segment_min = jc.at("segment_min");
    c.segment_max = jc.at("segment_max");
    c.section_count = jc.at("section_count");
    c.roughness_deg = jc.at("roughness_deg");
    Roughness r;
    r.amplitude_deg = j.at("roughness").at("amplitude_deg");
    for (int k = 0; k < 4; ++k) r.phase[k] = j.at("roughness").at("phase").at(k);
    const auto xs = j.at("centerline_x").get<std::vector<double>>();
    const auto ys = j.at("centerline_y").get<std::vector<double>>();
    if (xs.size() != ys.size()) throw FormatError("terrain file: centerline arrays differ in length");
    std::vector<Vec2> pts(xs.size());
    for (std::size_t k = 0; k < xs.size(); ++k) pts[k] = {xs[k], ys[k]};
    return Terrain(j.at("seed").get<std::uint64_t>(), c, std::move(pts),
                   j.at("half_width").get<std::vector<double>>(), r);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("terrain file: ") + e.what());
  }
}

}  // namespace tdg::sim
