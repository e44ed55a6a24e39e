#include "tdg/cli/config.hpp"

#include <cmath>
#include <limits>
#include <set>
#include <type_traits>

#include <json.hpp>

#include "tdg/binary_io.hpp"
#include "tdg/error.hpp"

namespace tdg::cli {

using nlohmann::json;
using nlohmann::ordered_json;

cvae::CvaeConfig ModelSettings::for_role(cvae::Role role) const {
  cvae::CvaeConfig c = cvae::CvaeConfig::for_role(role, linear_width, hidden);
  c.beta = beta;
  c.mode = mode;
  c.literal_variance = literal_variance;
  return c;
}

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

// Reads the keys of one JSON object into fields, remembering which keys were
// consumed so leftovers can be reported.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + ": expected an object");
  }

  template <typename T>
  void read(const std::string& key, T& out) {
    const json* v = find(key);
    if (!v) return;
    const std::string p = join(path_, key);
    if constexpr (std::is_same_v<T, bool>) {
      if (!v->is_boolean()) throw ConfigError(p + ": expected true or false");
      out = v->get<bool>();
    } else if constexpr (std::is_integral_v<T> && std::is_unsigned_v<T>) {
      if (!v->is_number_unsigned()) {
        throw ConfigError(p + ": expected a non-negative integer");
      }
      const auto u = v->get<std::uint64_t>();
      if (u > std::numeric_limits<T>::max()) throw ConfigError(p + ": value too large");
      out = static_cast<T>(u);
    } else if constexpr (std::is_integral_v<T>) {
      if (!v->is_number_integer()) throw ConfigError(p + ": expected an integer");
      const auto i = v->get<std::int64_t>();
      if (i < std::numeric_limits<T>::min() || i > std::numeric_limits<T>::max()) {
        throw ConfigError(p + ": value out of range");
      }
      out = static_cast<T>(i);
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v->is_number()) throw ConfigError(p + ": expected a number");
      out = v->get<double>();
    } else {
      if (!v->is_string()) throw ConfigError(p + ": expected a string");
      out = v->get<std::string>();
    }
  }

  template <typename F>
  void read_with(const std::string& key, F&& parse) {
    if (const json* v = find(key)) parse(*v, join(path_, key));
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.count(it.key())) throw ConfigError(join(path_, it.key()) + ": unknown key");
    }
  }

 private:
  const json* find(const std::string& key) {
    used_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }
  std::string where() const { return path_.empty() ? "top level" : path_; }

  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

template <typename E, typename Conv>
void read_enum(ObjectReader& r, const std::string& key, E& out, Conv conv) {
  r.read_with(key, [&](const json& v, const std::string& path) {
    if (!v.is_string()) throw ConfigError(path + ": expected a string");
    try {
      out = conv(v.get<std::string>());
    } catch (const ConfigError& e) {
      throw ConfigError(path + ": " + e.what());
    }
  });
}

void read_terrain(const json& j, const std::string& path, sim::TerrainConfig& t) {
  ObjectReader r(j, path);
  r.read("length", t.length);
  r.read("half_width", t.half_width);
  r.read("width_variation", t.width_variation);
  r.read("curviness", t.curviness);
  r.read("min_radius", t.min_radius);
  r.read("wall_height", t.wall_height);
  r.read("sample_spacing", t.sample_spacing);
  r.read("segment_min", t.segment_min);
  r.read("segment_max", t.segment_max);
  r.read("section_count", t.section_count);
  r.read("roughness_deg", t.roughness_deg);
  r.finish();
}

void read_sim(const json& j, const std::string& path, sim::SimConfig& s) {
  ObjectReader r(j, path);
  r.read("finish_radius", s.finish_radius);
  r.read_with("vehicle", [&](const json& v, const std::string& p) {
    ObjectReader rv(v, p);
    rv.read("wheelbase", s.vehicle.wheelbase);
    rv.read("max_steer_deg", s.vehicle.max_steer_deg);
    rv.read("max_accel", s.vehicle.max_accel);
    rv.read("max_brake", s.vehicle.max_brake);
    rv.read("drag", s.vehicle.drag);
    rv.read("radius", s.vehicle.radius);
    rv.finish();
  });
  r.read_with("lidar", [&](const json& v, const std::string& p) {
    ObjectReader rl(v, p);
    rl.read("channels", s.lidar.channels);
    rl.read("min_elevation_deg", s.lidar.min_elevation_deg);
    rl.read("max_elevation_deg", s.lidar.max_elevation_deg);
    rl.read("azimuth_step_deg", s.lidar.azimuth_step_deg);
    rl.read("max_range", s.lidar.max_range);
    rl.read("sensor_height", s.lidar.sensor_height);
    rl.read("quantum", s.lidar.quantum);
    rl.finish();
  });
  r.finish();
}

void read_drivers(const json& j, const std::string& path, std::vector<drivers::DriverProfile>& out) {
  if (!j.is_array()) throw ConfigError(path + ": expected an array of driver profiles");
  out.clear();
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string p = path + "[" + std::to_string(i) + "]";
    ObjectReader r(j[i], p);
    drivers::DriverProfile d;
    r.read("name", d.name);
    read_enum(r, "group", d.group, drivers::group_from_string);
    r.read("lookahead", d.lookahead);
    r.read("target_speed", d.target_speed);
    r.read("steer_noise_sd", d.steer_noise_sd);
    r.read("pedal_noise_sd", d.pedal_noise_sd);
    r.read("reaction_lag", d.reaction_lag);
    r.read("seed", d.seed);
    r.finish();
    out.push_back(d);
  }
}

ordered_json terrain_json(const sim::TerrainConfig& t) {
  return {{"length", t.length},
          {"half_width", t.half_width},
          {"width_variation", t.width_variation},
          {"curviness", t.curviness},
          {"min_radius", t.min_radius},
          {"wall_height", t.wall_height},
          {"sample_spacing", t.sample_spacing},
          {"segment_min", t.segment_min},
          {"segment_max", t.segment_max},
          {"section_count", t.section_count},
          {"roughness_deg", t.roughness_deg}};
}

ordered_json sim_json(const sim::SimConfig& s) {
  return {{"finish_radius", s.finish_radius},
          {"vehicle",
           {{"wheelbase", s.vehicle.wheelbase},
            {"max_steer_deg", s.vehicle.max_steer_deg},
            {"max_accel", s.vehicle.max_accel},
            {"max_brake", s.vehicle.max_brake},
            {"drag", s.vehicle.drag},
            {"radius", s.vehicle.radius}}},
          {"lidar",
           {{"channels", s.lidar.channels},
            {"min_elevation_deg", s.lidar.min_elevation_deg},
            {"max_elevation_deg", s.lidar.max_elevation_deg},
            {"azimuth_step_deg", s.lidar.azimuth_step_deg},
            {"max_range", s.lidar.max_range},
            {"sensor_height", s.lidar.sensor_height},
            {"quantum", s.lidar.quantum}}}};
}

void positive(double v, const std::string& path) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(path + " must be a finite value > 0");
}

void non_negative(double v, const std::string& path) {
  if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError(path + " must be a finite value >= 0");
}

}  // namespace

void Config::validate() const {
  positive(terrain.length, "terrain.length");
  if (terrain.length < 100.0) throw ConfigError("terrain.length must be >= 100");
  positive(terrain.half_width, "terrain.half_width");
  non_negative(terrain.width_variation, "terrain.width_variation");
  if (!(terrain.curviness >= 0.0 && terrain.curviness <= 1.0)) throw ConfigError("terrain.curviness must be in [0, 1]");
  positive(terrain.min_radius, "terrain.min_radius");
  positive(terrain.wall_height, "terrain.wall_height");
  positive(terrain.sample_spacing, "terrain.sample_spacing");
  positive(terrain.segment_min, "terrain.segment_min");
  if (!(terrain.segment_max >= terrain.segment_min)) throw ConfigError("terrain.segment_max must be >= segment_min");
  if (terrain.section_count < 1) throw ConfigError("terrain.section_count must be >= 1");
  non_negative(terrain.roughness_deg, "terrain.roughness_deg");

  positive(sim.finish_radius, "sim.finish_radius");
  positive(sim.vehicle.wheelbase, "sim.vehicle.wheelbase");
  positive(sim.vehicle.max_steer_deg, "sim.vehicle.max_steer_deg");
  if (sim.vehicle.max_steer_deg >= 90.0) throw ConfigError("sim.vehicle.max_steer_deg must be < 90");
  positive(sim.vehicle.max_accel, "sim.vehicle.max_accel");
  positive(sim.vehicle.max_brake, "sim.vehicle.max_brake");
  non_negative(sim.vehicle.drag, "sim.vehicle.drag");
  positive(sim.vehicle.radius, "sim.vehicle.radius");
  if (sim.lidar.channels < 1) throw ConfigError("sim.lidar.channels must be >= 1");
  if (!(sim.lidar.max_elevation_deg >= sim.lidar.min_elevation_deg)) {
    throw ConfigError("sim.lidar.max_elevation_deg must be >= min_elevation_deg");
  }
  positive(sim.lidar.azimuth_step_deg, "sim.lidar.azimuth_step_deg");
  positive(sim.lidar.max_range, "sim.lidar.max_range");
  positive(sim.lidar.sensor_height, "sim.lidar.sensor_height");
  positive(sim.lidar.quantum, "sim.lidar.quantum");

  if (drivers.empty()) throw ConfigError("drivers must list at least one profile");
  std::set<std::string> names;
  for (std::size_t i = 0; i < drivers.size(); ++i) {
    const std::string p = "drivers[" + std::to_string(i) + "]";
    if (drivers[i].name.empty()) throw ConfigError(p + ".name must not be empty");
    if (!names.insert(drivers[i].name).second) throw ConfigError(p + ".name '" + drivers[i].name + "' is repeated");
    try {
      drivers[i].validate();
    } catch (const ConfigError& e) {
      throw ConfigError(p + ": " + e.what());
    }
  }

  collect.validate();
  if (model.linear_width < 1) throw ConfigError("model.linear_width must be >= 1");
  if (model.hidden < 1) throw ConfigError("model.hidden must be >= 1");
  model.for_role(cvae::Role::forward).validate();
  training.validate();
  rollout.validate();
}

Config default_config() { return Config{}; }

Config parse_config(const std::string& text, const std::string& source) {
  Config c;
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) return c;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(source + ": malformed JSON: " + e.what());
  }
  try {
    ObjectReader r(j, "");
    r.read("seed", c.seed);
    r.read_with("terrain", [&](const json& v, const std::string& p) { read_terrain(v, p, c.terrain); });
    r.read_with("sim", [&](const json& v, const std::string& p) { read_sim(v, p, c.sim); });
    r.read_with("drivers", [&](const json& v, const std::string& p) { read_drivers(v, p, c.drivers); });
    r.read_with("collect", [&](const json& v, const std::string& p) {
      ObjectReader rc(v, p);
      rc.read("runs_per_profile", c.collect.runs_per_profile);
      rc.read("tick_limit", c.collect.tick_limit);
      rc.finish();
    });
    r.read_with("model", [&](const json& v, const std::string& p) {
      ObjectReader rm(v, p);
      rm.read("linear_width", c.model.linear_width);
      rm.read("hidden", c.model.hidden);
      rm.read("beta", c.model.beta);
      read_enum(rm, "mode", c.model.mode, cvae::mode_from_string);
      rm.read("literal_variance", c.model.literal_variance);
      rm.finish();
    });
    r.read_with("training", [&](const json& v, const std::string& p) {
      ObjectReader rt(v, p);
      rt.read("epochs", c.training.epochs);
      rt.read("batch_size", c.training.batch_size);
      rt.read("initial_lr", c.training.initial_lr);
      rt.read("decay_period", c.training.decay_period);
      rt.read("decay_factor", c.training.decay_factor);
      rt.read("validation_fraction", c.training.validation_fraction);
      read_enum(rt, "optimizer", c.training.optimizer, pipeline::optimizer_from_string);
      rt.read("max_windows", c.training.max_windows);
      rt.read("ground_truth_perception", c.training.ground_truth_perception);
      rt.finish();
    });
    r.read_with("rollout", [&](const json& v, const std::string& p) {
      ObjectReader rr(v, p);
      rr.read("tick_limit", c.rollout.tick_limit);
      rr.read("runs", c.rollout.runs);
      rr.read("warmup_ticks", c.rollout.warmup_ticks);
      rr.read("hallucinated_perception", c.rollout.hallucinated_perception);
      rr.finish();
    });
    r.finish();
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
  c.collect.sim = c.sim;
  c.rollout.sim = c.sim;
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return c;
}

Config load_config(const std::string& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    throw ConfigError("cannot read config file " + path + ": " + e.what());
  }
  return parse_config(text, path);
}

std::string serialize_config(const Config& c) {
  ordered_json drivers = ordered_json::array();
  for (const auto& d : c.drivers) {
    drivers.push_back({{"name", d.name},
                       {"group", drivers::to_string(d.group)},
                       {"lookahead", d.lookahead},
                       {"target_speed", d.target_speed},
                       {"steer_noise_sd", d.steer_noise_sd},
                       {"pedal_noise_sd", d.pedal_noise_sd},
                       {"reaction_lag", d.reaction_lag},
                       {"seed", d.seed}});
  }
  ordered_json j = {
      {"seed", c.seed},
      {"terrain", terrain_json(c.terrain)},
      {"sim", sim_json(c.sim)},
      {"drivers", drivers},
      {"collect", {{"runs_per_profile", c.collect.runs_per_profile}, {"tick_limit", c.collect.tick_limit}}},
      {"model",
       {{"linear_width", c.model.linear_width},
        {"hidden", c.model.hidden},
        {"beta", c.model.beta},
        {"mode", cvae::to_string(c.model.mode)},
        {"literal_variance", c.model.literal_variance}}},
      {"training",
       {{"epochs", c.training.epochs},
        {"batch_size", c.training.batch_size},
        {"initial_lr", c.training.initial_lr},
        {"decay_period", c.training.decay_period},
        {"decay_factor", c.training.decay_factor},
        {"validation_fraction", c.training.validation_fraction},
        {"optimizer", pipeline::to_string(c.training.optimizer)},
        {"max_windows", c.training.max_windows},
        {"ground_truth_perception", c.training.ground_truth_perception}}},
      {"rollout",
       {{"tick_limit", c.rollout.tick_limit},
        {"runs", c.rollout.runs},
        {"warmup_ticks", c.rollout.warmup_ticks},
        {"hallucinated_perception", c.rollout.hallucinated_perception}}},
  };
  return j.dump(2) + "\n";
}

}  // namespace tdg::cli
