#include "tdg/cli/manifest.hpp"

#include <json.hpp>

#include "tdg/error.hpp"
#include "tdg/sim/episode_log.hpp"

namespace tdg::cli {

using nlohmann::json;
using nlohmann::ordered_json;

std::map<std::string, int> format_versions() {
  return {{"checkpoint", 1}, {"config", 1}, {"dataset", 1}, {"episode_log", sim::kEpisodeLogVersion},
          {"manifest", 1},   {"model", 1},  {"report", 1},  {"terrain", 1}};
}

std::string serialize_manifest(const RunManifest& m) {
  ordered_json j;
  j["format"] = "TDGMANIFEST";
  j["version"] = 1;
  j["command"] = m.command;
  j["arguments"] = m.arguments;
  j["config_hash"] = m.config_hash;
  j["seeds"] = m.seeds;
  j["inputs"] = m.inputs;
  j["outputs"] = m.outputs;
  j["versions"] = m.versions;
  j["tool_version"] = m.tool_version;
  j["duration_seconds"] = m.duration_seconds;
  return j.dump(2) + "\n";
}

RunManifest parse_manifest(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.at("format") != "TDGMANIFEST") throw FormatError("not a run manifest");
    if (j.at("version") != 1) throw FormatError("unsupported manifest version " + j.at("version").dump());
    RunManifest m;
    m.command = j.at("command").get<std::string>();
    m.arguments = j.at("arguments").get<std::vector<std::string>>();
    m.config_hash = j.at("config_hash").get<std::string>();
    m.seeds = j.at("seeds").get<std::map<std::string, std::uint64_t>>();
    m.inputs = j.at("inputs").get<std::map<std::string, std::string>>();
    m.outputs = j.at("outputs").get<std::map<std::string, std::string>>();
    m.versions = j.at("versions").get<std::map<std::string, int>>();
    m.tool_version = j.at("tool_version").get<std::string>();
    m.duration_seconds = j.at("duration_seconds").get<double>();
    return m;
  } catch (const json::exception& e) {
    throw FormatError(std::string("run manifest: ") + e.what());
  }
}

}  // namespace tdg::cli
