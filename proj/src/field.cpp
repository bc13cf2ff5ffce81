#include "holo/field.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace holo {

namespace {

template <typename F>
RealImage map_field(const ComplexField& f, F fn) {
  RealImage out(f.rows(), f.cols());
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = fn(f[i]);
  return out;
}

}  // namespace

RealImage ComplexField::amplitude() const { return map_field(*this, [](cplx v) { return std::abs(v); }); }
RealImage ComplexField::phase() const { return map_field(*this, [](cplx v) { return std::arg(v); }); }
RealImage ComplexField::real() const { return map_field(*this, [](cplx v) { return v.real(); }); }
RealImage ComplexField::imag() const { return map_field(*this, [](cplx v) { return v.imag(); }); }

double IntensityImage::mean() const {
  if (size() == 0) return 0.0;
  return std::accumulate(data().begin(), data().end(), 0.0) / static_cast<double>(size());
}

double HologramStack::pixel_pitch_um() const {
  require(!holograms.empty(), "hologram stack is empty");
  return holograms.front().image.pixel_pitch_um;
}

void validate(const ComplexField& f) {
  require(f.rows() >= 2 && f.cols() >= 2, "field must be at least 2x2");
  require(f.pixel_pitch_um > 0.0 && std::isfinite(f.pixel_pitch_um), "pixel pitch must be positive");
  require(f.wavelength_um > 0.0 && std::isfinite(f.wavelength_um), "wavelength must be positive");
  for (const cplx& v : f.data()) {
    require(std::isfinite(v.real()) && std::isfinite(v.imag()), "field contains non-finite samples");
  }
}

void validate(const IntensityImage& img) {
  require(img.rows() >= 1 && img.cols() >= 1, "intensity image is empty");
  require(img.pixel_pitch_um > 0.0 && std::isfinite(img.pixel_pitch_um), "pixel pitch must be positive");
  for (double v : img.data()) {
    require(std::isfinite(v), "intensity contains non-finite samples");
    require(v >= 0.0, "intensity contains negative samples");
  }
}

void validate(const Hologram& h) {
  validate(h.image);
  require(h.z2_um > 0.0 && std::isfinite(h.z2_um), "hologram z2 must be positive");
}

void validate(const HologramStack& s) {
  require(!s.holograms.empty(), "hologram stack is empty");
  require(s.wavelength_um > 0.0, "wavelength must be positive");
  const auto& first = s.holograms.front().image;
  for (const auto& h : s.holograms) {
    validate(h);
    require(h.image.same_shape(first), "stack images differ in dimensions");
    require(h.image.pixel_pitch_um == first.pixel_pitch_um, "stack images differ in pixel pitch");
  }
}

void validate(const OpticalConfig& c) {
  require(c.wavelength_um > 0.0, "wavelength must be positive");
  require(c.pixel_pitch_um > 0.0, "pixel pitch must be positive");
  require(c.z1_um > 0.0, "z1 must be positive");
  require(c.z2_min_um > 0.0 && c.z2_min_um < c.z2_max_um, "z2 range must satisfy 0 < min < max");
  require(c.zbar2_um > 0.0, "zbar2 must be positive");
}

ComplexField field_from_intensity(const IntensityImage& img, double wavelength_um) {
  validate(img);
  require(wavelength_um > 0.0, "wavelength must be positive");
  ComplexField f(img.rows(), img.cols(), img.pixel_pitch_um, wavelength_um);
  for (std::size_t i = 0; i < img.size(); ++i) f[i] = cplx(std::sqrt(img[i]), 0.0);
  return f;
}

IntensityImage intensity_of(const ComplexField& f) {
  IntensityImage img(f.rows(), f.cols(), f.pixel_pitch_um);
  for (std::size_t i = 0; i < f.size(); ++i) img[i] = std::norm(f[i]);
  return img;
}

ComplexField crop(const ComplexField& field, int row0, int col0, int rows, int cols) {
  require(row0 >= 0 && col0 >= 0 && rows > 0 && cols > 0, "invalid crop window");
  require(row0 + rows <= field.rows() && col0 + cols <= field.cols(), "crop window outside field");
  ComplexField out(rows, cols, field.pixel_pitch_um, field.wavelength_um);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) out(r, c) = field(row0 + r, col0 + c);
  return out;
}

std::vector<ComplexField> crop_patches(const ComplexField& field, int patch) {
  require(patch > 0, "patch size must be positive");
  require(patch <= field.rows() && patch <= field.cols(),
          "patch size " + std::to_string(patch) + " exceeds field dimensions");
  std::vector<ComplexField> tiles;
  const int nr = field.rows() / patch;
  const int nc = field.cols() / patch;
  tiles.reserve(static_cast<std::size_t>(nr) * nc);
  for (int i = 0; i < nr; ++i)
    for (int j = 0; j < nc; ++j) tiles.push_back(crop(field, i * patch, j * patch, patch, patch));
  return tiles;
}

}  // namespace holo
