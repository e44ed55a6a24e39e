#include "tdg/sim/episode_log.hpp"

#include <charconv>
#include <sstream>
#include <string_view>

#include "tdg/binary_io.hpp"
#include "tdg/error.hpp"

namespace tdg::sim {
namespace {

constexpr std::string_view kHeader =
    "TDGEPISODE 1 tick time steer accel brake x y yaw roll pitch speed n px py pz ...";

void put_real(std::string& out, double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, end);
}

class Fields {
 public:
  Fields(std::string_view line, std::size_t line_no) : line_(line), line_no_(line_no) {}

  std::string_view next() {
    while (pos_ < line_.size() && line_[pos_] == ' ') ++pos_;
    if (pos_ >= line_.size()) fail("missing field");
    const std::size_t start = pos_;
    while (pos_ < line_.size() && line_[pos_] != ' ') ++pos_;
    return line_.substr(start, pos_ - start);
  }

  double real() {
    auto tok = next();
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) fail("bad number '" + std::string(tok) + "'");
    return v;
  }

  template <typename T>
  T integer() {
    auto tok = next();
    T v{};
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) fail("bad integer '" + std::string(tok) + "'");
    return v;
  }

  bool done() {
    while (pos_ < line_.size() && line_[pos_] == ' ') ++pos_;
    return pos_ >= line_.size();
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw FormatError("episode log line " + std::to_string(line_no_) + ": " + what);
  }

 private:
  std::string_view line_;
  std::size_t line_no_;
  std::size_t pos_ = 0;
};

std::string meta_value(std::string_view tok, std::string_view key, std::size_t line_no) {
  if (!tok.starts_with(key) || tok.size() <= key.size() || tok[key.size()] != '=') {
    throw FormatError("episode log line " + std::to_string(line_no) + ": expected " + std::string(key) + "=");
  }
  return std::string(tok.substr(key.size() + 1));
}

}  // namespace

std::string serialize_episode(const Episode& ep) {
  std::string out;
  out.reserve(ep.records.size() * 64);
  out += kHeader;
  out += "\nmeta terrain_id=" + ep.terrain_id + " driver_id=" + ep.driver_id +
         " seed=" + std::to_string(ep.seed) + " completed=" + (ep.completed ? "1" : "0") +
         " collisions=" + std::to_string(ep.collision_count) +
         " records=" + std::to_string(ep.records.size()) + "\n";
  for (const TimestepRecord& r : ep.records) {
    out += std::to_string(r.tick_index);
    for (double v : {r.time, r.raw_control.steer, r.raw_control.accel, r.raw_control.brake,
                     r.vehicle_state.position.x, r.vehicle_state.position.y, r.vehicle_state.yaw,
                     r.vehicle_state.roll, r.vehicle_state.pitch, r.vehicle_state.speed}) {
      out += ' ';
      put_real(out, v);
    }
    out += ' ';
    out += std::to_string(r.lidar_points.size());
    for (const Vec3& p : r.lidar_points) {
      for (double v : {p.x, p.y, p.z}) {
        out += ' ';
        put_real(out, v);
      }
    }
    out += '\n';
  }
  return out;
}

Episode deserialize_episode(const std::string& text) {
  std::size_t pos = 0, line_no = 0;
  auto next_line = [&]() -> std::string_view {
    if (pos >= text.size()) throw FormatError("episode log: unexpected end of file");
    const std::size_t end = text.find('\n', pos);
    const std::size_t stop = end == std::string::npos ? text.size() : end;
    std::string_view line(text.data() + pos, stop - pos);
    pos = stop + 1;
    ++line_no;
    return line;
  };

  const std::string_view header = next_line();
  if (!header.starts_with("TDGEPISODE ")) throw FormatError("episode log: missing TDGEPISODE header");
  if (header != kHeader) throw FormatError("episode log: unsupported schema version");

  Episode ep;
  Fields meta(next_line(), line_no);
  if (meta.next() != "meta") meta.fail("expected meta line");
  ep.terrain_id = meta_value(meta.next(), "terrain_id", line_no);
  ep.driver_id = meta_value(meta.next(), "driver_id", line_no);
  ep.seed = std::stoull(meta_value(meta.next(), "seed", line_no));
  ep.completed = meta_value(meta.next(), "completed", line_no) == "1";
  ep.collision_count = std::stoi(meta_value(meta.next(), "collisions", line_no));
  const std::size_t count = std::stoull(meta_value(meta.next(), "records", line_no));

  ep.records.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    Fields f(next_line(), line_no);
    TimestepRecord r;
    r.tick_index = f.integer<std::int64_t>();
    r.time = f.real();
    r.raw_control.steer = f.real();
    r.raw_control.accel = f.real();
    r.raw_control.brake = f.real();
    r.vehicle_state.position.x = f.real();
    r.vehicle_state.position.y = f.real();
    r.vehicle_state.yaw = f.real();
    r.vehicle_state.roll = f.real();
    r.vehicle_state.pitch = f.real();
    r.vehicle_state.speed = f.real();
    const auto n = f.integer<std::size_t>();
    r.lidar_points.resize(n);
    for (Vec3& p : r.lidar_points) {
      p.x = f.real();
      p.y = f.real();
      p.z = f.real();
    }
    if (!f.done()) f.fail("trailing fields");
    if (!ep.records.empty() && r.tick_index <= ep.records.back().tick_index) {
      f.fail("tick indices not strictly increasing");
    }
    ep.records.push_back(std::move(r));
  }
  if (pos < text.size()) throw FormatError("episode log: more lines than the declared record count");
  return ep;
}

void save_episode(const std::string& path, const Episode& episode) {
  write_file(path, serialize_episode(episode));
}

Episode load_episode(const std::string& path) { return deserialize_episode(read_file(path)); }

}  // namespace tdg::sim
