#pragma once

#include <filesystem>
#include <vector>

#include "holo/field.hpp"

namespace holo {

/// Lateral offset in low-resolution pixels. Convention: moving(p) ~ reference(p - shift),
/// i.e. the moving frame is the reference translated by (dx, dy); dx is along columns.
struct Shift {
  double dx = 0.0;
  double dy = 0.0;
};

struct ShiftTable {
  std::vector<Shift> shifts;
  int reference = 0;
};

/// Cross-correlation peak of two mean-removed images, refined to 1/upsample pixel with a
/// matrix-multiply DFT evaluated on a 1.5 x 1.5 pixel neighbourhood of the integer peak.
Shift estimate_shift(const IntensityImage& ref, const IntensityImage& moving, int upsample);

/// Shifts of every frame relative to `reference` (whose entry is exactly zero).
ShiftTable estimate_shifts(const std::vector<Hologram>& frames, int reference, int upsample);

/// Shift table taken from the frames' recorded lateral shifts, re-referenced to `reference`.
ShiftTable recorded_shifts(const std::vector<Hologram>& frames, int reference = 0);

/// Deposits every low-resolution sample onto a factor-times finer grid at its shifted position
/// (rounded to the nearest fine pixel), averages by hit count, then fills unhit fine pixels by
/// bilinear interpolation from hit neighbours (row pass, then column pass).
IntensityImage shift_and_add(const std::vector<Hologram>& frames, const ShiftTable& shifts, int factor);

/// Per-fine-pixel deposit counts for frames of size rows x cols under `shifts`.
Grid<int> deposit_hits(int rows, int cols, const ShiftTable& shifts, int factor);

void save_shift_table(const std::filesystem::path& path, const ShiftTable& table);
ShiftTable load_shift_table(const std::filesystem::path& path);

/// Fourier (sub-pixel, circular) translation of a real image by (dx, dy) pixels, same
/// convention as Shift: out(p) = img(p - shift).
IntensityImage fourier_shift(const IntensityImage& img, double dx, double dy);

}  // namespace holo
