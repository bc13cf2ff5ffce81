#include "doctest.h"

#include <cmath>
#include <limits>

#include "holo/simulator.hpp"
#include "holo/superres.hpp"
#include "support.hpp"

using namespace holo;

namespace {

IntensityImage circular_shift(const IntensityImage& img, int dx, int dy) {
  IntensityImage out(img.rows(), img.cols(), img.pixel_pitch_um);
  for (int r = 0; r < img.rows(); ++r)
    for (int c = 0; c < img.cols(); ++c)
      out((r + dy + img.rows()) % img.rows(), (c + dx + img.cols()) % img.cols()) = img(r, c);
  return out;
}

double fused_rmse(const IntensityImage& hires, const std::vector<Hologram>& all, const std::vector<int>& pick) {
  std::vector<Hologram> frames;
  for (int i : pick) frames.push_back(all[i]);
  return test::image_rmse(shift_and_add(frames, recorded_shifts(frames), 6), hires);
}

}  // namespace

TEST_CASE("identical images give a zero shift") {
  IntensityImage a = test::smooth_texture(64, 64, 1, 0.15);
  Shift s = estimate_shift(a, a, 20);
  CHECK(s.dx == 0.0);
  CHECK(s.dy == 0.0);
}

TEST_CASE("an integer circular shift is found exactly") {
  IntensityImage a = test::smooth_texture(64, 64, 2, 0.15);
  Shift s = estimate_shift(a, circular_shift(a, 3, -2), 20);
  CHECK(s.dx == 3.0);
  CHECK(s.dy == -2.0);
}

TEST_CASE("a Fourier sub-pixel shift is found within 0.05 px") {
  IntensityImage a = test::smooth_texture(64, 64, 3, 0.15);
  Shift s = estimate_shift(a, fourier_shift(a, 0.50, -0.25), 20);
  CHECK(std::abs(s.dx - 0.50) < 0.05);
  CHECK(std::abs(s.dy + 0.25) < 0.05);
}

TEST_CASE("swapping the images negates the shift") {
  for (std::uint64_t seed = 10; seed < 15; ++seed) {
    IntensityImage a = test::smooth_texture(64, 64, seed, 0.15);
    IntensityImage b = fourier_shift(a, -1.37, 0.61);
    Shift ab = estimate_shift(a, b, 20), ba = estimate_shift(b, a, 20);
    CHECK(std::abs(ab.dx + ba.dx) <= 1.0 / 20 + 1e-12);
    CHECK(std::abs(ab.dy + ba.dy) <= 1.0 / 20 + 1e-12);
  }
}

TEST_CASE("a constant image has no defined correlation") {
  IntensityImage flat(16, 16, 1.0, 0.5);
  CHECK_THROWS_AS(estimate_shift(flat, test::smooth_texture(16, 16, 1, 0.2), 10), NumericalError);
  CHECK_THROWS_AS(estimate_shift(flat, IntensityImage(8, 16, 1.0, 0.5), 10), InputError);
}

TEST_CASE("a single unshifted frame at factor 1 is returned unchanged") {
  IntensityImage a = test::smooth_texture(16, 16, 4, 0.2);
  std::vector<Hologram> frames{{a, 500.0}};
  IntensityImage out = shift_and_add(frames, recorded_shifts(frames), 1);
  CHECK(static_cast<const Grid<double>&>(out) == static_cast<const Grid<double>&>(a));
}

TEST_CASE("36 sub-pixel frames beat every single bilinearly upsampled frame") {
  IntensityImage hires = test::smooth_texture(192, 192, 5, 0.12);
  auto frames = sim::psr_frames(hires, 6);
  REQUIRE(frames.size() == 36);
  const double fused = test::image_rmse(shift_and_add(frames, recorded_shifts(frames), 6), hires);
  double best_single = std::numeric_limits<double>::infinity();
  for (const Hologram& h : frames)
    best_single = std::min(best_single, test::image_rmse(test::bilinear_upsample(h.image, 6, h.shift_dx, h.shift_dy), hires));
  CHECK(fused < best_single);
}

TEST_CASE("36 identical unshifted frames reduce to interpolating one frame") {
  IntensityImage a = test::smooth_texture(16, 16, 6, 0.2);
  std::vector<Hologram> frames(36, Hologram{a, 500.0});
  ShiftTable zero = recorded_shifts(frames);
  IntensityImage out = shift_and_add(frames, zero, 6);
  IntensityImage once = shift_and_add({frames[0]}, recorded_shifts({frames[0]}), 6);
  CHECK(out.rows() == 96);
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == doctest::Approx(once[i]).epsilon(1e-14));
  CHECK(shift_and_add(frames, zero, 6) == out);
}

TEST_CASE("fusion conserves the mean of the deposited samples") {
  IntensityImage hires = test::smooth_texture(96, 96, 7, 0.12);
  auto frames = sim::psr_frames(hires, 6);
  ShiftTable t = recorded_shifts(frames);
  IntensityImage out = shift_and_add(frames, t, 6);
  Grid<int> hits = deposit_hits(16, 16, t, 6);
  double out_sum = 0.0, in_sum = 0.0;
  std::size_t out_n = 0, in_n = 0;
  for (std::size_t i = 0; i < out.size(); ++i)
    if (hits[i] > 0) {
      out_sum += out[i];
      ++out_n;
    }
  for (const Hologram& h : frames)
    for (double v : h.image.data()) {
      in_sum += v;
      ++in_n;
    }
  CHECK(std::abs(out_sum / out_n - in_sum / in_n) / (in_sum / in_n) < 0.01);
}

TEST_CASE("fusion error falls as frames go from 1 to 4 to 36") {
  double e1 = 0.0, e4 = 0.0, e36 = 0.0;
  std::vector<int> all(36);
  for (int i = 0; i < 36; ++i) all[i] = i;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    IntensityImage hires = test::smooth_texture(96, 96, 100 + seed, 0.15);
    auto frames = sim::psr_frames(hires, 6);
    e1 += fused_rmse(hires, frames, {0});
    e4 += fused_rmse(hires, frames, {0, 3, 18, 21});
    e36 += fused_rmse(hires, frames, all);
  }
  CHECK(e4 < e1);
  CHECK(e36 < e4);
}

TEST_CASE("estimated shifts of synthesised frames match the recorded ones") {
  IntensityImage hires = test::smooth_texture(192, 192, 8, 0.08);
  auto frames = sim::psr_frames(hires, 6);
  ShiftTable est = estimate_shifts(frames, 0, 20);
  ShiftTable rec = recorded_shifts(frames);
  CHECK(est.shifts[0].dx == 0.0);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    CHECK(std::abs(est.shifts[i].dx - rec.shifts[i].dx) < 0.1);
    CHECK(std::abs(est.shifts[i].dy - rec.shifts[i].dy) < 0.1);
  }
}

TEST_CASE("shift tables round-trip through CSV") {
  auto dir = test::scratch_dir("shifts");
  ShiftTable t{{{0.0, 0.0}, {0.5, -0.25}, {1.0 / 3.0, 2.0}}, 0};
  save_shift_table(dir / "s.csv", t);
  ShiftTable u = load_shift_table(dir / "s.csv");
  REQUIRE(u.shifts.size() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(u.shifts[i].dx == t.shifts[i].dx);
    CHECK(u.shifts[i].dy == t.shifts[i].dy);
  }
}
