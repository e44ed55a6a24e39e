#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tdg/cvae/model.hpp"
#include "tdg/drivers/scripted.hpp"
#include "tdg/pipeline/collect.hpp"
#include "tdg/pipeline/rollout.hpp"
#include "tdg/pipeline/training.hpp"
#include "tdg/sim/episode.hpp"
#include "tdg/sim/terrain.hpp"

namespace tdg::cli {

// Layer sizes and loss settings shared by both roles; dims come from the
// preprocessing layout.
struct ModelSettings {
  std::size_t linear_width = 64;
  std::size_t hidden = 64;
  double beta = 0.01;
  cvae::Mode mode = cvae::Mode::noise_encoder;
  bool literal_variance = false;

  cvae::CvaeConfig for_role(cvae::Role role) const;
  friend bool operator==(const ModelSettings&, const ModelSettings&) = default;
};

// The full configuration tree. Seeds of individual stages derive from
// `seed`; per-stage `threads` fields are filled from the command line.
struct Config {
  std::uint64_t seed = 1;
  sim::TerrainConfig terrain;
  sim::SimConfig sim;
  std::vector<drivers::DriverProfile> drivers = drivers::default_population();
  pipeline::CollectConfig collect;
  ModelSettings model;
  pipeline::TrainConfig training;
  pipeline::RolloutConfig rollout;

  // Throws ConfigError naming the offending key path.
  void validate() const;
  friend bool operator==(const Config&, const Config&) = default;
};

Config default_config();

// JSON text; absent keys keep their defaults, unknown keys are rejected.
// Empty or whitespace-only text is the default tree. `source` prefixes
// error messages.
Config parse_config(const std::string& text, const std::string& source = "config");
Config load_config(const std::string& path);
std::string serialize_config(const Config& config);

}  // namespace tdg::cli
