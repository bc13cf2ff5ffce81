#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "holo/error.hpp"

namespace holo {

using cplx = std::complex<double>;

/// Row-major 2-D array. Base for every image-like value in the library.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int rows, int cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(checked_size(rows, cols), fill) {}
  Grid(int rows, int cols, std::vector<T> data) : rows_(rows), cols_(cols), data_(std::move(data)) {
    require(data_.size() == checked_size(rows, cols), "grid payload does not match dimensions");
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool same_shape(const Grid& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
  template <typename U>
  bool same_shape(const Grid<U>& o) const { return rows_ == o.rows() && cols_ == o.cols(); }

  T& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  const T& operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  std::vector<T>& storage() { return data_; }
  const std::vector<T>& storage() const { return data_; }

  bool operator==(const Grid& o) const = default;

 private:
  static std::size_t checked_size(int rows, int cols) {
    require(rows >= 0 && cols >= 0, "grid dimensions must be non-negative");
    return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<T> data_;
};

using RealImage = Grid<double>;

/// Complex optical field sampled on a square grid. Lengths are in micrometres.
class ComplexField : public Grid<cplx> {
 public:
  ComplexField() = default;
  ComplexField(int rows, int cols, double pixel_pitch_um, double wavelength_um)
      : Grid<cplx>(rows, cols), pixel_pitch_um(pixel_pitch_um), wavelength_um(wavelength_um) {}
  ComplexField(Grid<cplx> grid, double pixel_pitch_um, double wavelength_um)
      : Grid<cplx>(std::move(grid)), pixel_pitch_um(pixel_pitch_um), wavelength_um(wavelength_um) {}

  double pixel_pitch_um = 1.12;
  double wavelength_um = 0.530;

  RealImage amplitude() const;
  RealImage phase() const;
  RealImage real() const;
  RealImage imag() const;

  bool operator==(const ComplexField&) const = default;
};

/// Nonnegative intensity image (a recorded hologram frame).
class IntensityImage : public Grid<double> {
 public:
  IntensityImage() = default;
  IntensityImage(int rows, int cols, double pixel_pitch_um, double fill = 0.0)
      : Grid<double>(rows, cols, fill), pixel_pitch_um(pixel_pitch_um) {}
  IntensityImage(Grid<double> grid, double pixel_pitch_um)
      : Grid<double>(std::move(grid)), pixel_pitch_um(pixel_pitch_um) {}

  double pixel_pitch_um = 1.12;

  double mean() const;
  bool operator==(const IntensityImage&) const = default;
};

struct Hologram {
  IntensityImage image;
  double z2_um = 0.0;
  // Lateral offset in low-resolution pixels, for pixel super-resolution frames.
  double shift_dx = 0.0;
  double shift_dy = 0.0;
};

struct HologramStack {
  std::vector<Hologram> holograms;
  double wavelength_um = 0.530;

  std::size_t size() const { return holograms.size(); }
  double pixel_pitch_um() const;
};

/// Imaging geometry. All lengths in micrometres; z1 of 7.5 cm is stored as 75000.
struct OpticalConfig {
  double wavelength_um = 0.530;
  double pixel_pitch_um = 1.12;
  double z1_um = 75000.0;
  double z2_min_um = 400.0;
  double z2_max_um = 600.0;
  double zbar2_um = 500.0;
};

void validate(const ComplexField& f);
void validate(const IntensityImage& img);
void validate(const Hologram& h);
void validate(const HologramStack& s);
void validate(const OpticalConfig& c);

/// Amplitude = sqrt(intensity), phase = 0.
ComplexField field_from_intensity(const IntensityImage& img, double wavelength_um);

/// |field|^2 as an intensity image.
IntensityImage intensity_of(const ComplexField& f);

/// Non-overlapping row-major tiles; trailing rows/cols that do not fill a tile are dropped.
std::vector<ComplexField> crop_patches(const ComplexField& field, int patch);

/// Copy of a rectangular sub-region.
ComplexField crop(const ComplexField& field, int row0, int col0, int rows, int cols);

}  // namespace holo
