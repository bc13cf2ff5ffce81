#include "holo/nn/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <iterator>

#include "holo/error.hpp"
#include "json.hpp"

namespace holo::nn {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kDiscPrefix = "disc.";

void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

class Reader {
 public:
  explicit Reader(std::string data) : data_(std::move(data)) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw InputError("params.bin is truncated");
  }
  std::string data_;
  std::size_t pos_ = 0;
};

void write_file(const fs::path& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary);
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw InputError("write failed for " + path.string());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

json read_json(const fs::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw InputError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

void append_params(std::string& buf, const ParameterSet& ps, const std::string& prefix, json& tags) {
  for (const Parameter& p : ps.items()) {
    const std::string name = prefix + p.name;
    put_u32(buf, static_cast<std::uint32_t>(name.size()));
    buf += name;
    put_u32(buf, static_cast<std::uint32_t>(p.value.rank()));
    for (int d : p.value.shape()) put_u32(buf, static_cast<std::uint32_t>(d));
    for (double v : p.value.values()) put_u32(buf, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    tags.push_back({{"name", name}, {"tag", p.tag}, {"frozen", p.frozen()}});
  }
}

}  // namespace

void save_checkpoint(const fs::path& dir, const Checkpoint& ck) {
  fs::create_directories(dir);
  std::string buf;
  put_u32(buf, static_cast<std::uint32_t>(ck.gen.size() + ck.disc.size()));
  json tags = json::array();
  append_params(buf, ck.gen, "", tags);
  append_params(buf, ck.disc, kDiscPrefix, tags);
  write_file(dir / "params.bin", buf);
  write_file(dir / "tags.json", tags.dump(2) + "\n");

  json extra;
  try {
    extra = json::parse(ck.extra_json);
  } catch (const json::exception& e) {
    throw InputError(std::string("checkpoint extra settings are not valid JSON: ") + e.what());
  }
  const json cfg = {{"model",
                     {{"base_channels", ck.model.base_channels},
                      {"in_channels", ck.model.in_channels},
                      {"out_channels", ck.model.out_channels},
                      {"leaky_slope", ck.model.leaky_slope}}},
                    {"extra", extra}};
  write_file(dir / "config.json", cfg.dump(2) + "\n");
}

Checkpoint load_checkpoint(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw InputError("checkpoint directory not found: " + dir.string());
  Checkpoint ck;
  const json cfg = read_json(dir / "config.json");
  try {
    const json& m = cfg.at("model");
    ck.model.base_channels = m.at("base_channels").get<int>();
    ck.model.in_channels = m.at("in_channels").get<int>();
    ck.model.out_channels = m.at("out_channels").get<int>();
    ck.model.leaky_slope = m.at("leaky_slope").get<double>();
    ck.extra_json = cfg.value("extra", json::object()).dump();
  } catch (const json::exception& e) {
    throw InputError("config.json: " + std::string(e.what()));
  }

  const json tags = read_json(dir / "tags.json");
  require(tags.is_array(), "tags.json must hold an array");
  Reader rd(read_file(dir / "params.bin"));
  const std::uint32_t count = rd.u32();
  require(count == tags.size(), "params.bin and tags.json disagree on the tensor count");
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = rd.bytes(rd.u32());
    const std::uint32_t rank = rd.u32();
    require(rank >= 1 && rank <= 8, "params.bin: implausible rank for " + name);
    Shape shape;
    for (std::uint32_t d = 0; d < rank; ++d) shape.push_back(static_cast<int>(rd.u32()));
    std::vector<double> values(numel(shape));
    for (double& v : values) v = static_cast<double>(std::bit_cast<float>(rd.u32()));

    const json& t = tags[i];
    require(t.value("name", std::string()) == name, "tags.json entry " + std::to_string(i) + " does not match " + name);
    const std::string tag = t.value("tag", std::string());
    const bool frozen = t.value("frozen", false);
    const bool is_disc = name.rfind(kDiscPrefix, 0) == 0;
    ParameterSet& ps = is_disc ? ck.disc : ck.gen;
    if (is_disc) name = name.substr(std::char_traits<char>::length(kDiscPrefix));
    ps.add(name, tag, shape, std::move(values));
    ps.at(name).set_frozen(frozen);
  }
  require(rd.done(), "params.bin has trailing bytes");
  return ck;
}

}  // namespace holo::nn
