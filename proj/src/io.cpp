#include "holo/io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

#include "json.hpp"

namespace holo {

using nlohmann::json;

namespace {

void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

void put_f64(std::string& buf, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((bits >> (8 * i)) & 0xFFu));
}

std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}

double get_f64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return std::bit_cast<double>(v);
}

std::string read_all(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_all(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InputError("write failed for " + path.string());
}

json read_json(const fs::path& path) {
  try {
    return json::parse(read_all(path));
  } catch (const json::exception& e) {
    throw InputError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& j) { write_all(path, j.dump(2) + "\n"); }

template <typename T>
T json_get(const json& j, const char* key, const fs::path& src) {
  if (!j.contains(key)) throw InputError(src.string() + ": missing key '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw InputError(src.string() + ": bad value for '" + key + "'");
  }
}

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

fs::path sidecar_path(const fs::path& data_path) {
  fs::path p = data_path;
  p.replace_extension(".json");
  return p;
}

void save_field(const fs::path& path, const ComplexField& field, std::optional<double> z2_um) {
  validate(field);
  std::string buf;
  buf.reserve(24 + field.size() * 16);
  buf.append(kFieldMagic, sizeof(kFieldMagic));
  put_u32(buf, kFieldVersion);
  put_u32(buf, 0);
  put_u32(buf, static_cast<std::uint32_t>(field.rows()));
  put_u32(buf, static_cast<std::uint32_t>(field.cols()));
  for (const cplx& v : field.data()) {
    put_f64(buf, v.real());
    put_f64(buf, v.imag());
  }
  write_all(path, buf);

  json side = {{"pixel_pitch_um", field.pixel_pitch_um}, {"wavelength_um", field.wavelength_um}};
  if (z2_um) side["z2_um"] = *z2_um;
  write_json(sidecar_path(path), side);
}

ComplexField load_field(const fs::path& path, std::optional<double>* z2_um) {
  const std::string bytes = read_all(path);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < 24) throw InputError(path.string() + ": truncated header");
  if (std::memcmp(p, kFieldMagic, sizeof(kFieldMagic)) != 0) throw InputError(path.string() + ": bad magic");
  const std::uint32_t version = get_u32(p + 8);
  if (version != kFieldVersion)
    throw InputError(path.string() + ": unsupported version " + std::to_string(version));
  const std::uint64_t rows = get_u32(p + 16);
  const std::uint64_t cols = get_u32(p + 20);
  const std::uint64_t expected = 24 + rows * cols * 16;
  if (bytes.size() != expected)
    throw InputError(path.string() + ": payload size " + std::to_string(bytes.size()) +
                     " does not match " + std::to_string(rows) + "x" + std::to_string(cols));

  const json side = read_json(sidecar_path(path));
  ComplexField f(static_cast<int>(rows), static_cast<int>(cols), json_get<double>(side, "pixel_pitch_um", path),
                 json_get<double>(side, "wavelength_um", path));
  const unsigned char* q = p + 24;
  for (std::size_t i = 0; i < f.size(); ++i, q += 16) f[i] = cplx(get_f64(q), get_f64(q + 8));
  if (z2_um) *z2_um = side.contains("z2_um") ? std::optional<double>(side.at("z2_um").get<double>()) : std::nullopt;
  validate(f);
  return f;
}

void save_intensity_png(const fs::path& path, const IntensityImage& img, const PngMapping& mapping) {
  validate(img);
  require(mapping.bit_depth == 8 || mapping.bit_depth == 16, "PNG bit depth must be 8 or 16");
  require(mapping.full_scale > 0.0, "PNG full scale must be positive");
  const double levels = std::ldexp(1.0, mapping.bit_depth) - 1.0;
  const int bytes_per = mapping.bit_depth / 8;

  FilePtr fp(std::fopen(path.string().c_str(), "wb"));
  if (!fp) throw InputError("cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw InputError("libpng initialisation failed");
  }
  std::vector<unsigned char> row(static_cast<std::size_t>(img.cols()) * bytes_per);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw InputError("PNG encode failed for " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.cols()), static_cast<png_uint_32>(img.rows()),
               mapping.bit_depth, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int r = 0; r < img.rows(); ++r) {
    for (int c = 0; c < img.cols(); ++c) {
      const double code = std::clamp(std::round(img(r, c) / mapping.full_scale * levels), 0.0, levels);
      const auto v = static_cast<unsigned>(code);
      if (bytes_per == 1) {
        row[c] = static_cast<unsigned char>(v);
      } else {
        row[2 * c] = static_cast<unsigned char>(v >> 8);  // PNG samples are big-endian
        row[2 * c + 1] = static_cast<unsigned char>(v & 0xFFu);
      }
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);

  write_json(sidecar_path(path), {{"pixel_pitch_um", img.pixel_pitch_um},
                                  {"bit_depth", mapping.bit_depth},
                                  {"full_scale", mapping.full_scale},
                                  {"mapping", "linear"}});
}

namespace {

// Raw grey codes of a PNG, kept apart from any JSON handling because of setjmp.
std::vector<unsigned> decode_gray_png(const fs::path& path, int expected_depth, png_uint_32& width,
                                      png_uint_32& height) {
  FilePtr fp(std::fopen(path.string().c_str(), "rb"));
  if (!fp) throw InputError("cannot open " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw InputError("libpng initialisation failed");
  }
  std::vector<unsigned char> row;
  std::vector<unsigned> codes;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw InputError("PNG decode failed for " + path.string());
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);
  width = png_get_image_width(png, info);
  height = png_get_image_height(png, info);
  const int depth = png_get_bit_depth(png, info);
  const int color = png_get_color_type(png, info);
  if (color != PNG_COLOR_TYPE_GRAY || depth != expected_depth) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw InputError(path.string() + ": expected " + std::to_string(expected_depth) + "-bit greyscale PNG");
  }
  codes.resize(static_cast<std::size_t>(width) * height);
  row.resize(png_get_rowbytes(png, info));
  for (png_uint_32 r = 0; r < height; ++r) {
    png_read_row(png, row.data(), nullptr);
    for (png_uint_32 c = 0; c < width; ++c)
      codes[static_cast<std::size_t>(r) * width + c] =
          depth == 8 ? row[c] : (static_cast<unsigned>(row[2 * c]) << 8) | row[2 * c + 1];
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return codes;
}

}  // namespace

IntensityImage load_intensity_png(const fs::path& path, PngMapping* mapping_out) {
  const json side = read_json(sidecar_path(path));
  PngMapping mapping{json_get<int>(side, "bit_depth", path), json_get<double>(side, "full_scale", path)};
  const double pitch = json_get<double>(side, "pixel_pitch_um", path);
  require(mapping.bit_depth == 8 || mapping.bit_depth == 16, "PNG bit depth must be 8 or 16");

  png_uint_32 width = 0, height = 0;
  const std::vector<unsigned> codes = decode_gray_png(path, mapping.bit_depth, width, height);
  const double levels = std::ldexp(1.0, mapping.bit_depth) - 1.0;
  IntensityImage img(static_cast<int>(height), static_cast<int>(width), pitch);
  for (std::size_t i = 0; i < codes.size(); ++i) img[i] = codes[i] / levels * mapping.full_scale;
  if (mapping_out) *mapping_out = mapping;
  return img;
}

void save_stack(const fs::path& dir, const HologramStack& stack, const PngMapping& mapping) {
  validate(stack);
  fs::create_directories(dir);
  json frames = json::array();
  for (std::size_t i = 0; i < stack.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "holo_%02zu.png", i);
    const Hologram& h = stack.holograms[i];
    save_intensity_png(dir / name, h.image, mapping);
    frames.push_back({{"file", name}, {"z2_um", h.z2_um}, {"shift_dx", h.shift_dx}, {"shift_dy", h.shift_dy}});
  }
  write_json(dir / "stack.json", {{"wavelength_um", stack.wavelength_um}, {"holograms", frames}});
}

HologramStack load_stack(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw InputError("stack directory not found: " + dir.string());
  const fs::path meta = dir / "stack.json";
  const json j = read_json(meta);
  HologramStack stack;
  stack.wavelength_um = json_get<double>(j, "wavelength_um", meta);
  if (!j.contains("holograms") || !j["holograms"].is_array()) throw InputError(meta.string() + ": no hologram list");
  for (const json& e : j["holograms"]) {
    Hologram h;
    h.image = load_intensity_png(dir / json_get<std::string>(e, "file", meta));
    h.z2_um = json_get<double>(e, "z2_um", meta);
    h.shift_dx = e.value("shift_dx", 0.0);
    h.shift_dy = e.value("shift_dy", 0.0);
    stack.holograms.push_back(std::move(h));
  }
  validate(stack);
  return stack;
}

}  // namespace holo
