#pragma once

#include <string>

#include "tdg/sim/episode.hpp"

namespace tdg::sim {

// Line-delimited text log, one record per tick:
//
//   TDGEPISODE 1 tick time steer accel brake x y yaw roll pitch speed n px py pz ...
//   meta terrain_id=<id> driver_id=<id> seed=<n> completed=<0|1> collisions=<n> records=<n>
//   <tick> <time> <steer> ... <speed> <n> <x0> <y0> <z0> <x1> ...
//
// Reals use the shortest representation that round-trips exactly, so a
// read-back episode compares equal to the one written.
inline constexpr int kEpisodeLogVersion = 1;

std::string serialize_episode(const Episode& episode);
Episode deserialize_episode(const std::string& text);

void save_episode(const std::string& path, const Episode& episode);
Episode load_episode(const std::string& path);

}  // namespace tdg::sim
