#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace holo::cli {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kManifestName = "run_manifest.json";

std::uint64_t fnv1a(std::string_view data, std::uint64_t h = 0xcbf29ce484222325ull);
std::string hex64(std::uint64_t v);

/// Content hash of one file. Timing columns of CSV files (seconds, seconds_per_epoch,
/// wall_seconds) and "wall_seconds" keys of JSON files are left out.
std::string file_hash(const std::filesystem::path& path);
/// Relative path -> file hash for every regular file below `root`, except run manifests.
std::map<std::string, std::string> tree_hashes(const std::filesystem::path& root);
/// One hash over a tree_hashes() listing.
std::string tree_hash(const std::filesystem::path& root);

struct RunManifest {
  std::string command;
  std::vector<std::string> argv;  // without the program name
  std::string cwd;
  nlohmann::json config = nlohmann::json::object();
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> inputs;
  std::string out;
  std::map<std::string, std::string> outputs;
  std::string version = kToolVersion;
  double wall_seconds = 0.0;

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static RunManifest load(const std::filesystem::path& path);
};

}  // namespace holo::cli
