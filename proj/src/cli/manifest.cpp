#include "holo/cli/manifest.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>

#include "holo/error.hpp"

namespace holo::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::uint64_t fnv1a(std::string_view data, std::uint64_t h) {
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

namespace {

bool is_timing_key(const std::string& k) { return k == "seconds" || k == "seconds_per_epoch" || k == "wall_seconds"; }

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, ',')) out.push_back(cur);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string strip_csv_timing(const std::string& text) {
  std::istringstream in(text);
  std::string line, out;
  std::vector<bool> keep;
  bool header = true;
  while (std::getline(in, line)) {
    const auto fields = split_line(line);
    if (header) {
      for (const auto& f : fields) keep.push_back(!is_timing_key(f));
      header = false;
    }
    for (std::size_t i = 0; i < fields.size(); ++i)
      if (i >= keep.size() || keep[i]) out += fields[i] + ",";
    out += "\n";
  }
  return out;
}

void strip_json_timing(json& j) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end();) {
      if (is_timing_key(it.key())) {
        it = j.erase(it);
      } else {
        strip_json_timing(*it);
        ++it;
      }
    }
  } else if (j.is_array()) {
    for (auto& e : j) strip_json_timing(e);
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

std::string file_hash(const fs::path& path) {
  std::string data = read_file(path);
  const auto ext = path.extension().string();
  if (ext == ".csv") {
    data = strip_csv_timing(data);
  } else if (ext == ".json") {
    try {
      json j = json::parse(data);
      strip_json_timing(j);
      data = j.dump();
    } catch (const json::exception&) {
      // not JSON after all: hash the raw bytes
    }
  }
  return hex64(fnv1a(data));
}

std::map<std::string, std::string> tree_hashes(const fs::path& root) {
  std::map<std::string, std::string> out;
  if (fs::is_regular_file(root)) {
    out[root.filename().string()] = file_hash(root);
    return out;
  }
  if (!fs::is_directory(root)) throw InputError("not found: " + root.string());
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file() || e.path().filename() == kManifestName) continue;
    out[fs::relative(e.path(), root).generic_string()] = file_hash(e.path());
  }
  return out;
}

std::string tree_hash(const fs::path& root) {
  std::uint64_t h = fnv1a("");
  for (const auto& [name, hash] : tree_hashes(root)) {
    h = fnv1a(name, h);
    h = fnv1a(hash, h);
  }
  return hex64(h);
}

json RunManifest::to_json() const {
  return {{"command", command}, {"argv", argv},     {"cwd", cwd},         {"config", config},
          {"seeds", seeds},     {"inputs", inputs}, {"out", out},         {"outputs", outputs},
          {"version", version}, {"wall_seconds", wall_seconds}};
}

RunManifest RunManifest::from_json(const json& j) {
  RunManifest m;
  try {
    m.command = j.at("command").get<std::string>();
    m.argv = j.at("argv").get<std::vector<std::string>>();
    m.cwd = j.value("cwd", std::string());
    m.config = j.value("config", json::object());
    m.seeds = j.value("seeds", std::vector<std::uint64_t>{});
    m.inputs = j.value("inputs", std::vector<std::string>{});
    m.out = j.value("out", std::string());
    m.outputs = j.value("outputs", std::map<std::string, std::string>{});
    m.version = j.value("version", std::string());
    m.wall_seconds = j.value("wall_seconds", 0.0);
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed run manifest: ") + e.what());
  }
  return m;
}

void RunManifest::save(const fs::path& path) const {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << to_json().dump(2) << "\n";
}

RunManifest RunManifest::load(const fs::path& path) {
  try {
    return from_json(json::parse(read_file(path)));
  } catch (const json::exception& e) {
    throw InputError("malformed run manifest " + path.string() + ": " + e.what());
  }
}

}  // namespace holo::cli
