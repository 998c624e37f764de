#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace refgov {

/// Record of one CLI command: inputs, hashes, and every artifact written.
struct RunManifest {
  std::string command;
  std::string config_path;
  std::string config_sha256;
  std::uint64_t seed = 0;
  std::string plant;
  std::string governor;
  std::string profile;
  std::vector<std::string> outputs;
  std::map<std::string, double> wall_clock;  // seconds per phase
  std::map<std::string, std::string> notes;
  std::map<std::string, std::vector<int>> indices;  // e.g. training split

  std::string to_json() const;
  void write(const std::filesystem::path& path) const;
};

}  // namespace refgov
