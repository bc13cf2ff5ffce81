#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "holo/field.hpp"

namespace holo {

namespace fs = std::filesystem;

inline constexpr char kFieldMagic[8] = {'H', 'O', 'L', 'O', 'F', 'L', 'D', '\0'};
inline constexpr std::uint32_t kFieldVersion = 1;

/// `<dir>/<stem>.json` next to a data file.
fs::path sidecar_path(const fs::path& data_path);

/// Field file: 16-byte header (8-byte magic, u32 version, u32 reserved), u32 rows, u32 cols,
/// then rows*cols interleaved (re, im) float64, all little-endian. Metadata goes to the sidecar.
void save_field(const fs::path& path, const ComplexField& field, std::optional<double> z2_um = {});
ComplexField load_field(const fs::path& path, std::optional<double>* z2_um = nullptr);

/// Linear grey-level mapping: intensity = code / (2^bit_depth - 1) * full_scale.
struct PngMapping {
  int bit_depth = 16;
  double full_scale = 1.0;
};

/// Intensities above full_scale are clipped. Writes the mapping and pixel pitch to the sidecar.
void save_intensity_png(const fs::path& path, const IntensityImage& img, const PngMapping& mapping);
IntensityImage load_intensity_png(const fs::path& path, PngMapping* mapping = nullptr);

/// Stack directory: `stack.json` (wavelength, per-frame file, z2, lateral shift) and one
/// PNG + sidecar per frame.
void save_stack(const fs::path& dir, const HologramStack& stack, const PngMapping& mapping);
HologramStack load_stack(const fs::path& dir);

}  // namespace holo
