#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace tdg::cli {

inline constexpr const char* kToolVersion = "0.1.0";

// Written as manifest.json beside every command's outputs.
struct RunManifest {
  std::string command;
  std::vector<std::string> arguments;
  std::string config_hash;                       // fingerprint of the serialized config
  std::map<std::string, std::uint64_t> seeds;    // root and derived stage seeds
  std::map<std::string, std::string> inputs;     // path -> fingerprint
  std::map<std::string, std::string> outputs;    // path relative to --out -> fingerprint
  std::map<std::string, int> versions;           // file format versions
  std::string tool_version = kToolVersion;
  double duration_seconds = 0.0;

  friend bool operator==(const RunManifest&, const RunManifest&) = default;
};

// Format versions of every file the tool writes.
std::map<std::string, int> format_versions();

std::string serialize_manifest(const RunManifest& m);
RunManifest parse_manifest(const std::string& text);

}  // namespace tdg::cli
