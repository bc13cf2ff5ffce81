#include "holo/superres.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include "holo/fft.hpp"

namespace holo {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Grid<cplx> spectrum_of(const IntensityImage& img, bool remove_mean) {
  const double m = remove_mean ? img.mean() : 0.0;
  Grid<cplx> g(img.rows(), img.cols());
  for (std::size_t i = 0; i < img.size(); ++i) g[i] = img[i] - m;
  fft::forward(g);
  return g;
}

double centered_energy(const IntensityImage& img) {
  const double m = img.mean();
  double e = 0.0;
  for (double v : img.data()) e += (v - m) * (v - m);
  return e;
}

// Cross-correlation sampled on an n x n grid of offsets (i - n/2) / upsample around
// (row0, col0): K_rows * X * K_cols with the kernels built from signed DFT frequencies.
Grid<cplx> upsampled_correlation(const Grid<cplx>& xspec, int n, int upsample, double row0, double col0) {
  const int rows = xspec.rows(), cols = xspec.cols();
  const int center = n / 2;
  Grid<cplx> krow(n, rows), kcol(cols, n);
  for (int i = 0; i < n; ++i) {
    const double y = row0 + static_cast<double>(i - center) / upsample;
    for (int k = 0; k < rows; ++k) krow(i, k) = std::polar(1.0, kTwoPi * fft::signed_index(k, rows) * y / rows);
  }
  for (int k = 0; k < cols; ++k) {
    for (int j = 0; j < n; ++j) {
      const double x = col0 + static_cast<double>(j - center) / upsample;
      kcol(k, j) = std::polar(1.0, kTwoPi * fft::signed_index(k, cols) * x / cols);
    }
  }
  Grid<cplx> tmp(n, cols);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < rows; ++k) {
      const cplx a = krow(i, k);
      for (int c = 0; c < cols; ++c) tmp(i, c) += a * xspec(k, c);
    }
  Grid<cplx> out(n, n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < cols; ++k) {
      const cplx a = tmp(i, k);
      for (int j = 0; j < n; ++j) out(i, j) += a * kcol(k, j);
    }
  return out;
}

}  // namespace

IntensityImage fourier_shift(const IntensityImage& img, double dx, double dy) {
  Grid<cplx> g = spectrum_of(img, false);
  for (int ky = 0; ky < g.rows(); ++ky) {
    const double fy = static_cast<double>(fft::signed_index(ky, g.rows())) / g.rows();
    for (int kx = 0; kx < g.cols(); ++kx) {
      const double fx = static_cast<double>(fft::signed_index(kx, g.cols())) / g.cols();
      g(ky, kx) *= std::polar(1.0, -kTwoPi * (fx * dx + fy * dy));
    }
  }
  fft::inverse(g);
  IntensityImage out(img.rows(), img.cols(), img.pixel_pitch_um);
  for (std::size_t i = 0; i < g.size(); ++i) out[i] = g[i].real();
  return out;
}

Shift estimate_shift(const IntensityImage& ref, const IntensityImage& moving, int upsample) {
  require(ref.same_shape(moving), "shift estimation needs equal image dimensions");
  require(upsample >= 1, "upsample factor must be >= 1");
  require(ref.rows() >= 2 && ref.cols() >= 2, "images too small for shift estimation");
  if (centered_energy(ref) <= 0.0 || centered_energy(moving) <= 0.0)
    throw NumericalError("correlation undefined for a constant image");

  const Grid<cplx> fr = spectrum_of(ref, true);
  Grid<cplx> xspec = spectrum_of(moving, true);
  for (std::size_t i = 0; i < xspec.size(); ++i) xspec[i] *= std::conj(fr[i]);

  Grid<cplx> cc = xspec;
  fft::inverse(cc);
  std::size_t best = 0;
  for (std::size_t i = 1; i < cc.size(); ++i)
    if (cc[i].real() > cc[best].real()) best = i;
  const int rows = ref.rows(), cols = ref.cols();
  double row0 = fft::signed_index(static_cast<int>(best / cols), rows);
  double col0 = fft::signed_index(static_cast<int>(best % cols), cols);
  if (upsample == 1) return {col0, row0};

  const int n = static_cast<int>(std::ceil(1.5 * upsample));
  const Grid<cplx> up = upsampled_correlation(xspec, n, upsample, row0, col0);
  int bi = n / 2, bj = n / 2;
  double bv = std::abs(up(bi, bj));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (std::abs(up(i, j)) > bv) {
        bv = std::abs(up(i, j));
        bi = i;
        bj = j;
      }
  return {col0 + static_cast<double>(bj - n / 2) / upsample, row0 + static_cast<double>(bi - n / 2) / upsample};
}

ShiftTable estimate_shifts(const std::vector<Hologram>& frames, int reference, int upsample) {
  require(!frames.empty(), "no frames");
  require(reference >= 0 && reference < static_cast<int>(frames.size()), "reference frame out of range");
  ShiftTable t;
  t.reference = reference;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (static_cast<int>(i) == reference) {
      t.shifts.push_back({0.0, 0.0});
    } else {
      t.shifts.push_back(estimate_shift(frames[reference].image, frames[i].image, upsample));
    }
  }
  return t;
}

ShiftTable recorded_shifts(const std::vector<Hologram>& frames, int reference) {
  require(!frames.empty(), "no frames");
  require(reference >= 0 && reference < static_cast<int>(frames.size()), "reference frame out of range");
  ShiftTable t;
  t.reference = reference;
  const Hologram& r = frames[reference];
  for (const Hologram& h : frames) t.shifts.push_back({h.shift_dx - r.shift_dx, h.shift_dy - r.shift_dy});
  t.shifts[reference] = {0.0, 0.0};
  return t;
}

namespace {

// Fine-grid index of low-res sample j under shift d: centre of the sample footprint in the
// reference frame, rounded to the nearest fine pixel.
int fine_index(int j, double d, int factor) {
  return static_cast<int>(std::floor(factor * (j - d) + 0.5 * (factor - 1) + 0.5));
}

}  // namespace

Grid<int> deposit_hits(int rows, int cols, const ShiftTable& shifts, int factor) {
  require(factor >= 1, "super-resolution factor must be >= 1");
  Grid<int> hits(rows * factor, cols * factor, 0);
  for (const Shift& s : shifts.shifts) {
    for (int r = 0; r < rows; ++r) {
      const int fr = fine_index(r, s.dy, factor);
      if (fr < 0 || fr >= hits.rows()) continue;
      for (int c = 0; c < cols; ++c) {
        const int fc = fine_index(c, s.dx, factor);
        if (fc >= 0 && fc < hits.cols()) ++hits(fr, fc);
      }
    }
  }
  return hits;
}

IntensityImage shift_and_add(const std::vector<Hologram>& frames, const ShiftTable& shifts, int factor) {
  require(!frames.empty(), "no frames to fuse");
  require(factor >= 1, "super-resolution factor must be >= 1");
  require(shifts.shifts.size() == frames.size(), "shift table length does not match frame count");
  const IntensityImage& first = frames.front().image;
  for (const Hologram& h : frames) {
    validate(h.image);
    require(h.image.same_shape(first), "frames differ in dimensions");
  }

  const int rows = first.rows() * factor, cols = first.cols() * factor;
  Grid<double> acc(rows, cols, 0.0);
  Grid<int> hits(rows, cols, 0);
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const Shift s = shifts.shifts[f];
    const IntensityImage& img = frames[f].image;
    for (int r = 0; r < img.rows(); ++r) {
      const int fr = fine_index(r, s.dy, factor);
      if (fr < 0 || fr >= rows) continue;
      for (int c = 0; c < img.cols(); ++c) {
        const int fc = fine_index(c, s.dx, factor);
        if (fc < 0 || fc >= cols) continue;
        acc(fr, fc) += img(r, c);
        ++hits(fr, fc);
      }
    }
  }

  IntensityImage out(rows, cols, first.pixel_pitch_um / factor);
  Grid<char> filled(rows, cols, 0);
  std::vector<char> row_has(rows, 0);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      if (hits(r, c) > 0) {
        out(r, c) = acc(r, c) / hits(r, c);
        filled(r, c) = 1;
        row_has[r] = 1;
      }
  if (std::find(row_has.begin(), row_has.end(), 1) == row_has.end())
    throw InputError("no frame sample landed on the output grid");

  // Row pass: interpolate between hit pixels, hold the end values outward.
  for (int r = 0; r < rows; ++r) {
    if (!row_has[r]) continue;
    int prev = -1;
    for (int c = 0; c <= cols; ++c) {
      if (c < cols && !filled(r, c)) continue;
      if (prev < 0) {
        for (int k = 0; k < c && c < cols; ++k) out(r, k) = out(r, c);
      } else if (c == cols) {
        for (int k = prev + 1; k < cols; ++k) out(r, k) = out(r, prev);
      } else {
        for (int k = prev + 1; k < c; ++k) {
          const double t = static_cast<double>(k - prev) / (c - prev);
          out(r, k) = (1.0 - t) * out(r, prev) + t * out(r, c);
        }
      }
      prev = c;
    }
  }
  // Column pass over rows without any hit.
  int prev = -1;
  for (int r = 0; r <= rows; ++r) {
    if (r < rows && !row_has[r]) continue;
    for (int c = 0; c < cols; ++c) {
      if (prev < 0) {
        for (int k = 0; k < r && r < rows; ++k) out(k, c) = out(r, c);
      } else if (r == rows) {
        for (int k = prev + 1; k < rows; ++k) out(k, c) = out(prev, c);
      } else {
        for (int k = prev + 1; k < r; ++k) {
          const double t = static_cast<double>(k - prev) / (r - prev);
          out(k, c) = (1.0 - t) * out(prev, c) + t * out(r, c);
        }
      }
    }
    prev = r;
  }
  return out;
}

void save_shift_table(const std::filesystem::path& path, const ShiftTable& table) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out.precision(17);
  out << "frame_index,dx_px,dy_px\n";
  for (std::size_t i = 0; i < table.shifts.size(); ++i)
    out << i << ',' << table.shifts[i].dx << ',' << table.shifts[i].dy << '\n';
}

ShiftTable load_shift_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line.rfind("frame_index,dx_px,dy_px", 0) != 0) throw InputError(path.string() + ": bad shift table header");
  ShiftTable t;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string a, b, c;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, c, ','))
      throw InputError(path.string() + ": malformed row '" + line + "'");
    try {
      if (std::stoul(a) != t.shifts.size()) throw InputError(path.string() + ": frame indices out of order");
      t.shifts.push_back({std::stod(b), std::stod(c)});
    } catch (const std::logic_error&) {
      throw InputError(path.string() + ": malformed row '" + line + "'");
    }
  }
  for (std::size_t i = 0; i < t.shifts.size(); ++i)
    if (t.shifts[i].dx == 0.0 && t.shifts[i].dy == 0.0) {
      t.reference = static_cast<int>(i);
      break;
    }
  return t;
}

}  // namespace holo
