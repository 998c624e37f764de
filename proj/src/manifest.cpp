#include "refgov/manifest.hpp"

#include <json.hpp>

#include "refgov/csv.hpp"

namespace refgov {

std::string RunManifest::to_json() const {
  nlohmann::json j;
  j["command"] = command;
  j["config"] = {{"path", config_path}, {"sha256", config_sha256}};
  j["seed"] = seed;
  j["plant"] = plant;
  j["governor"] = governor;
  j["profile"] = profile;
  j["outputs"] = outputs;
  j["wall_clock_s"] = wall_clock;
  j["notes"] = notes;
  j["indices"] = indices;
  return j.dump(2) + "\n";
}

void RunManifest::write(const std::filesystem::path& path) const {
  write_file_atomic(path, to_json());
}

}  // namespace refgov
