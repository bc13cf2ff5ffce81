#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "holo/field.hpp"

namespace holo::test {

inline ComplexField random_field(int rows, int cols, std::uint64_t seed, double pitch = 1.12, double lambda = 0.530) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  ComplexField f(rows, cols, pitch, lambda);
  for (auto& v : f.storage()) v = {n(rng), n(rng)};
  return f;
}

inline IntensityImage random_image(int rows, int cols, std::uint64_t seed, double pitch = 1.12) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  IntensityImage img(rows, cols, pitch);
  for (auto& v : img.storage()) v = u(rng);
  return img;
}

template <typename A, typename B>
double rms_diff(const A& a, const B& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::norm(a[i] - b[i]);
  return std::sqrt(s / static_cast<double>(a.size()));
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("holo_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace holo::test

#include "holo/propagation.hpp"

namespace holo::test {

/// Positive random texture with no content above `cutoff` cycles per pixel.
inline IntensityImage smooth_texture(int rows, int cols, std::uint64_t seed, double cutoff) {
  ComplexField f = random_field(rows, cols, seed, 1.0, 1.0 / cutoff);
  for (auto& v : f.storage()) v = v.real();
  f = band_limit(f);
  double lo = 1e300, hi = -1e300;
  for (const cplx& v : f.storage()) {
    lo = std::min(lo, v.real());
    hi = std::max(hi, v.real());
  }
  IntensityImage img(rows, cols, 1.0);
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = 0.2 + (f[i].real() - lo) / (hi - lo);
  return img;
}

}  // namespace holo::test

namespace holo::test {

/// Bilinear upsampling of one low-resolution frame whose sample (i, j) sits at fine position
/// (factor * (i - dy) + (factor - 1) / 2, factor * (j - dx) + (factor - 1) / 2); clamped at the borders.
inline IntensityImage bilinear_upsample(const IntensityImage& lo, int factor, double dx, double dy) {
  const int rows = lo.rows() * factor, cols = lo.cols() * factor;
  IntensityImage out(rows, cols, lo.pixel_pitch_um / factor);
  auto coord = [&](int fine, double d, int n) {
    double u = (fine - 0.5 * (factor - 1)) / factor + d;
    u = std::clamp(u, 0.0, static_cast<double>(n - 1));
    const int i0 = std::min(static_cast<int>(std::floor(u)), n - 2 < 0 ? 0 : n - 2);
    return std::pair<int, double>(i0, u - i0);
  };
  for (int r = 0; r < rows; ++r) {
    auto [i0, ty] = coord(r, dy, lo.rows());
    const int i1 = std::min(i0 + 1, lo.rows() - 1);
    for (int c = 0; c < cols; ++c) {
      auto [j0, tx] = coord(c, dx, lo.cols());
      const int j1 = std::min(j0 + 1, lo.cols() - 1);
      out(r, c) = (1 - ty) * ((1 - tx) * lo(i0, j0) + tx * lo(i0, j1)) + ty * ((1 - tx) * lo(i1, j0) + tx * lo(i1, j1));
    }
  }
  return out;
}

inline double image_rmse(const IntensityImage& a, const IntensityImage& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s / static_cast<double>(a.size()));
}

}  // namespace holo::test
