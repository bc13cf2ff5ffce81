#include "holo/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "holo/fft.hpp"
#include "holo/io.hpp"
#include "holo/propagation.hpp"
#include "json.hpp"

namespace holo::sim {

namespace {

constexpr double kPi = std::numbers::pi;

// Low-pass a real map: Gaussian roll-off of width `sigma_px` (0 = none), hard cut at a quarter
// of the sampling frequency, Nyquist bins dropped.
RealImage band_limit_map(const RealImage& map, double sigma_px) {
  Grid<cplx> g(map.rows(), map.cols());
  for (std::size_t i = 0; i < map.size(); ++i) g[i] = map[i];
  fft::forward(g);
  for (int ky = 0; ky < g.rows(); ++ky) {
    const double fy = static_cast<double>(fft::signed_index(ky, g.rows())) / g.rows();
    for (int kx = 0; kx < g.cols(); ++kx) {
      const double fx = static_cast<double>(fft::signed_index(kx, g.cols())) / g.cols();
      const double f2 = fx * fx + fy * fy;
      const bool nyquist = (g.rows() % 2 == 0 && ky == g.rows() / 2) || (g.cols() % 2 == 0 && kx == g.cols() / 2);
      if (nyquist || f2 >= 0.25 * 0.25) {
        g(ky, kx) = 0.0;
      } else if (sigma_px > 0.0) {
        g(ky, kx) *= std::exp(-2.0 * kPi * kPi * sigma_px * sigma_px * f2);
      }
    }
  }
  fft::inverse(g);
  RealImage out(map.rows(), map.cols());
  for (std::size_t i = 0; i < g.size(); ++i) out[i] = g[i].real();
  return out;
}

// Affine map onto [lo, hi]; a flat input maps to the midpoint.
void normalise(RealImage& map, double lo, double hi) {
  const auto [mn, mx] = std::minmax_element(map.data().begin(), map.data().end());
  const double a = *mn, b = *mx;
  for (double& v : map.storage()) v = b > a ? lo + (hi - lo) * (v - a) / (b - a) : 0.5 * (lo + hi);
}

RealImage noise_map(int rows, int cols, double feature_px, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  RealImage m(rows, cols);
  for (double& v : m.storage()) v = n(rng);
  return band_limit_map(m, 0.5 * feature_px);
}

RealImage blob_map(int rows, int cols, double feature_px, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int count = std::max(4, static_cast<int>(rows * cols / (16.0 * feature_px * feature_px)));
  RealImage m(rows, cols, 0.0);
  for (int b = 0; b < count; ++b) {
    const double cy = u(rng) * rows, cx = u(rng) * cols;
    const double radius = feature_px * (0.75 + 1.5 * u(rng));
    const double sign = u(rng) < 0.5 ? -1.0 : 1.0;
    for (int r = 0; r < rows; ++r) {
      double dy = std::abs(r - cy);
      dy = std::min(dy, rows - dy);
      for (int c = 0; c < cols; ++c) {
        double dx = std::abs(c - cx);
        dx = std::min(dx, cols - dx);
        m(r, c) += sign * std::exp(-(dx * dx + dy * dy) / (2.0 * radius * radius));
      }
    }
  }
  return band_limit_map(m, 0.0);
}

RealImage bar_map(int rows, int cols, double feature_px, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RealImage m(rows, cols, 0.0);
  const int groups = std::max(3, static_cast<int>(rows * cols / (36.0 * feature_px * feature_px * 4.0)));
  for (int g = 0; g < groups; ++g) {
    const double w = feature_px * (1.0 + std::floor(u(rng) * 3.0) * 0.5);
    const bool vertical = u(rng) < 0.5;
    const int r0 = static_cast<int>(u(rng) * rows), c0 = static_cast<int>(u(rng) * cols);
    const int len = static_cast<int>(5.0 * w);
    for (int bar = 0; bar < 3; ++bar) {
      const int off = static_cast<int>(bar * 2.0 * w);
      for (int a = 0; a < len; ++a)
        for (int t = 0; t < static_cast<int>(w); ++t) {
          const int r = vertical ? r0 + a : r0 + off + t;
          const int c = vertical ? c0 + off + t : c0 + a;
          m(((r % rows) + rows) % rows, ((c % cols) + cols) % cols) = 1.0;
        }
    }
  }
  return band_limit_map(m, 0.25 * feature_px);
}

IntensityImage box_downsample(const IntensityImage& img, int k) {
  IntensityImage out(img.rows() / k, img.cols() / k, img.pixel_pitch_um * k);
  const double inv = 1.0 / (k * k);
  for (int r = 0; r < out.rows(); ++r)
    for (int c = 0; c < out.cols(); ++c) {
      double s = 0.0;
      for (int u = 0; u < k; ++u)
        for (int v = 0; v < k; ++v) s += img(r * k + u, c * k + v);
      out(r, c) = s * inv;
    }
  return out;
}

IntensityImage roll(const IntensityImage& img, int dy, int dx) {
  IntensityImage out(img.rows(), img.cols(), img.pixel_pitch_um);
  for (int r = 0; r < img.rows(); ++r)
    for (int c = 0; c < img.cols(); ++c) {
      const int sr = ((r - dy) % img.rows() + img.rows()) % img.rows();
      const int sc = ((c - dx) % img.cols() + img.cols()) % img.cols();
      out(r, c) = img(sr, sc);
    }
  return out;
}

// Field translated by (dx, dy) pixels through its spectrum: out(p) = in(p - shift).
ComplexField fourier_shift_field(const ComplexField& f, double dx, double dy) {
  Grid<cplx> g = f;
  fft::forward(g);
  for (int ky = 0; ky < g.rows(); ++ky) {
    const double fy = static_cast<double>(fft::signed_index(ky, g.rows())) / g.rows();
    for (int kx = 0; kx < g.cols(); ++kx) {
      const double fx = static_cast<double>(fft::signed_index(kx, g.cols())) / g.cols();
      g(ky, kx) *= std::polar(1.0, -2.0 * kPi * (fx * dx + fy * dy));
    }
  }
  fft::inverse(g);
  return ComplexField(std::move(g), f.pixel_pitch_um, f.wavelength_um);
}

void degrade(IntensityImage& img, const AcquisitionSpec& acq, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  const double read_sigma = acq.noise_sigma * img.mean();
  if (acq.noise_sigma > 0.0 || acq.shot_scale > 0.0) {
    for (double& v : img.storage()) {
      double noisy = v;
      if (acq.noise_sigma > 0.0) noisy += read_sigma * n(rng);
      if (acq.shot_scale > 0.0) noisy += std::sqrt(acq.shot_scale * v) * n(rng);
      v = std::max(0.0, noisy);
    }
  }
  if (acq.bit_depth > 0) {
    const double levels = std::ldexp(1.0, acq.bit_depth) - 1.0;
    for (double& v : img.storage()) {
      const double code = std::clamp(std::round(v / acq.full_scale * levels), 0.0, levels);
      v = code / levels * acq.full_scale;
    }
  }
}

}  // namespace

std::string to_string(SceneKind k) {
  switch (k) {
    case SceneKind::phase_blobs: return "phase_blobs";
    case SceneKind::amplitude_bars: return "amplitude_bars";
    case SceneKind::mixed_texture: return "mixed_texture";
  }
  return "?";
}

SceneKind scene_kind_from_string(const std::string& s) {
  if (s == "phase_blobs") return SceneKind::phase_blobs;
  if (s == "amplitude_bars") return SceneKind::amplitude_bars;
  if (s == "mixed_texture") return SceneKind::mixed_texture;
  throw InputError("unknown scene kind '" + s + "'");
}

std::string to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "val") return Split::val;
  if (s == "test") return Split::test;
  throw InputError("unknown split '" + s + "'");
}

std::vector<double> default_z2_list() {
  std::vector<double> z;
  for (int i = 0; i < 8; ++i) z.push_back(450.0 + 15.0 * i);
  return z;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

ComplexField make_object(const SceneSpec& spec, int rows, int cols, const OpticalConfig& optical) {
  require(rows >= 2 && cols >= 2, "object must be at least 2x2");
  require(spec.amp_min > 0.0 && spec.amp_min <= spec.amp_max && spec.amp_max <= 1.0,
          "amplitude range must satisfy 0 < min <= max <= 1");
  require(spec.phase_max >= 0.0 && spec.phase_max <= kPi, "phase range must be within [0, pi]");
  require(spec.feature_px > 0.0, "feature scale must be positive");
  validate(optical);

  std::mt19937_64 rng(splitmix64(spec.seed));
  RealImage amp, phase;
  switch (spec.kind) {
    case SceneKind::phase_blobs:
      phase = blob_map(rows, cols, spec.feature_px, rng);
      amp = blob_map(rows, cols, 1.5 * spec.feature_px, rng);
      break;
    case SceneKind::amplitude_bars: {
      const RealImage bars = bar_map(rows, cols, spec.feature_px, rng);
      amp = bars;
      for (double& v : amp.storage()) v = -v;  // bars absorb
      phase = bars;
      break;
    }
    case SceneKind::mixed_texture:
      amp = noise_map(rows, cols, spec.feature_px, rng);
      phase = noise_map(rows, cols, spec.feature_px, rng);
      break;
  }
  normalise(amp, spec.amp_min, spec.amp_max);
  // Bars delay the phase against a zero-phase background.
  normalise(phase, spec.kind == SceneKind::amplitude_bars ? 0.0 : -spec.phase_max, spec.phase_max);

  ComplexField f(rows, cols, optical.pixel_pitch_um, optical.wavelength_um);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = std::polar(amp[i], phase[i]);
  return f;
}

HologramStack acquire(const ComplexField& object, const AcquisitionSpec& acq) {
  validate(object);
  require(!acq.z2_list.empty(), "acquisition needs at least one height");
  require(acq.noise_sigma >= 0.0 && acq.shot_scale >= 0.0, "noise levels must be non-negative");
  require(acq.bit_depth >= 0 && acq.bit_depth <= 16, "bit depth must be in [0, 16]");
  require(acq.full_scale > 0.0, "full scale must be positive");
  const int k = acq.psr_pattern;
  require(k >= 0, "sub-pixel pattern must be non-negative");
  if (k > 1) require(object.rows() % k == 0 && object.cols() % k == 0, "object size must be divisible by the pattern");
  for (double z : acq.z2_list)
    require(z > 0.0 && z >= acq.optical.z2_min_um && z <= acq.optical.z2_max_um,
            "height " + std::to_string(z) + " um outside the configured z2 range");

  HologramStack stack;
  stack.wavelength_um = object.wavelength_um;
  std::mt19937_64 rng(splitmix64(acq.seed ^ 0xA5A5A5A5ull));
  const PropagationPlan plan(object);
  for (double z : acq.z2_list) {
    const ComplexField u = plan.propagate(object, z);
    if (k <= 1) {
      Hologram h;
      h.image = intensity_of(u);
      h.z2_um = z;
      degrade(h.image, acq, rng);
      stack.holograms.push_back(std::move(h));
      continue;
    }
    for (int b = 0; b < k; ++b)
      for (int a = 0; a < k; ++a) {
        Hologram h;
        h.image = box_downsample(intensity_of(fourier_shift_field(u, a, b)), k);
        h.z2_um = z;
        h.shift_dx = static_cast<double>(a) / k;
        h.shift_dy = static_cast<double>(b) / k;
        degrade(h.image, acq, rng);
        stack.holograms.push_back(std::move(h));
      }
  }
  return stack;
}

std::vector<Hologram> psr_frames(const IntensityImage& hires, int factor) {
  require(factor >= 1, "factor must be >= 1");
  require(hires.rows() % factor == 0 && hires.cols() % factor == 0, "image size must be divisible by the factor");
  std::vector<Hologram> frames;
  for (int b = 0; b < factor; ++b)
    for (int a = 0; a < factor; ++a) {
      Hologram h;
      h.image = box_downsample(roll(hires, b, a), factor);
      h.z2_um = 1.0;
      h.shift_dx = static_cast<double>(a) / factor;
      h.shift_dy = static_cast<double>(b) / factor;
      frames.push_back(std::move(h));
    }
  return frames;
}

double snr_db(const IntensityImage& clean, const IntensityImage& noisy) {
  require(clean.same_shape(noisy), "SNR needs equal dimensions");
  double s = 0.0, n = 0.0;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    s += clean[i] * clean[i];
    n += (noisy[i] - clean[i]) * (noisy[i] - clean[i]);
  }
  if (n <= 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(s / n);
}

std::uint64_t fov_seed(std::uint64_t base, Split split, int index) {
  const std::uint64_t family = splitmix64(base ^ (0x1000003ull * (static_cast<std::uint64_t>(split) + 1)));
  return splitmix64(family + static_cast<std::uint64_t>(index));
}

std::vector<double> input_heights(const DatasetSpec& spec, int m_inputs) {
  require(m_inputs >= 1, "need at least one input hologram");
  if (!spec.input_z2.empty()) {
    require(static_cast<int>(spec.input_z2.size()) >= m_inputs, "not enough input heights configured");
    return {spec.input_z2.begin(), spec.input_z2.begin() + m_inputs};
  }
  const int n = static_cast<int>(spec.target_z2.size());
  require(m_inputs <= n, "more inputs than target heights; set input_z2 explicitly");
  if (m_inputs == 1) return {spec.target_z2.front()};
  std::vector<double> z;
  for (int i = 0; i < m_inputs; ++i) {
    const int idx = static_cast<int>(std::lround(static_cast<double>(i) * (n - 1) / (m_inputs - 1)));
    z.push_back(spec.target_z2[idx]);
  }
  return z;
}

std::vector<Sample> make_dataset(int n_fovs, int m_inputs, const DatasetSpec& spec, Split split) {
  require(n_fovs >= 1, "need at least one field of view");
  require(m_inputs >= 1, "need at least one input hologram");
  require(spec.target_z2.size() == 8, "targets are reconstructed from exactly 8 heights");
  const std::vector<double> in_z = input_heights(spec, m_inputs);

  std::vector<Sample> out;
  out.reserve(n_fovs);
  for (int i = 0; i < n_fovs; ++i) {
    const std::uint64_t seed = fov_seed(spec.seed, split, i);
    SceneSpec scene = spec.scene;
    scene.seed = seed;
    Sample s;
    s.seed = seed;
    s.split = split;
    s.object = make_object(scene, spec.rows, spec.cols, spec.optical);

    AcquisitionSpec acq;
    acq.optical = spec.optical;
    acq.noise_sigma = spec.noise_sigma;
    acq.bit_depth = spec.bit_depth;
    acq.z2_list = spec.target_z2;
    acq.seed = splitmix64(seed ^ 0x7417ull);
    s.target = mhpr(acquire(s.object, acq), spec.mhpr).sample_field;

    acq.z2_list = in_z;
    acq.seed = splitmix64(seed ^ 0x1397ull);
    s.inputs = back_propagate_stack(acquire(s.object, acq), spec.optical.zbar2_um);
    // Reference the inputs to the plane-wave carrier, as the MH-PR targets are.
    const cplx carrier = std::polar(1.0, 2.0 * std::numbers::pi * spec.optical.zbar2_um / spec.optical.wavelength_um);
    for (ComplexField& f : s.inputs)
      for (cplx& v : f.data()) v *= carrier;
    out.push_back(std::move(s));
  }
  return out;
}

ComplexField dihedral(const ComplexField& f, int element) {
  require(f.rows() == f.cols(), "dihedral transforms need square patches");
  require(element >= 0 && element < 8, "dihedral element must be in [0, 8)");
  const int n = f.rows();
  ComplexField cur = f;
  if (element >= 4) {
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) cur(r, c) = f(r, n - 1 - c);
  }
  for (int q = 0; q < element % 4; ++q) {
    ComplexField rot(n, n, f.pixel_pitch_um, f.wavelength_um);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) rot(r, c) = cur(c, n - 1 - r);  // 90 deg counter-clockwise
    cur = std::move(rot);
  }
  return cur;
}

std::array<Sample, 8> augment_8x(const Sample& s) {
  require(s.target.rows() == s.target.cols(), "augmentation needs square patches");
  std::array<Sample, 8> out;
  for (int t = 0; t < 8; ++t) {
    Sample a;
    a.seed = s.seed;
    a.split = s.split;
    for (const ComplexField& in : s.inputs) a.inputs.push_back(dihedral(in, t));
    a.target = dihedral(s.target, t);
    if (s.object.size() > 0) a.object = dihedral(s.object, t);
    out[t] = std::move(a);
  }
  return out;
}

void save_dataset(const std::filesystem::path& dir, const std::vector<Sample>& samples,
                  const std::string& manifest_json) {
  std::filesystem::create_directories(dir);
  nlohmann::json manifest = manifest_json.empty() ? nlohmann::json::object() : nlohmann::json::parse(manifest_json);
  nlohmann::json fovs = nlohmann::json::array();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "fov_%04zu", i);
    const auto fdir = dir / name;
    std::filesystem::create_directories(fdir);
    const Sample& s = samples[i];
    for (std::size_t m = 0; m < s.inputs.size(); ++m) {
      char in_name[32];
      std::snprintf(in_name, sizeof(in_name), "input_%02zu.fld", m);
      save_field(fdir / in_name, s.inputs[m]);
    }
    save_field(fdir / "target.fld", s.target);
    if (s.object.size() > 0) save_field(fdir / "object.fld", s.object);
    fovs.push_back({{"dir", name},
                    {"split", to_string(s.split)},
                    {"seed", s.seed},
                    {"inputs", s.inputs.size()}});
  }
  manifest["fovs"] = fovs;
  std::ofstream out(dir / "manifest.json");
  if (!out) throw InputError("cannot write dataset manifest in " + dir.string());
  out << manifest.dump(2) << "\n";
}

std::vector<Sample> load_dataset(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw InputError("dataset manifest not found in " + dir.string());
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed dataset manifest: ") + e.what());
  }
  if (!manifest.contains("fovs")) throw InputError("dataset manifest lists no fields of view");
  std::vector<Sample> samples;
  for (const auto& e : manifest["fovs"]) {
    const auto fdir = dir / e.at("dir").get<std::string>();
    Sample s;
    s.seed = e.at("seed").get<std::uint64_t>();
    s.split = split_from_string(e.at("split").get<std::string>());
    const int m = e.at("inputs").get<int>();
    for (int i = 0; i < m; ++i) {
      char in_name[32];
      std::snprintf(in_name, sizeof(in_name), "input_%02d.fld", i);
      s.inputs.push_back(load_field(fdir / in_name));
    }
    s.target = load_field(fdir / "target.fld");
    if (std::filesystem::exists(fdir / "object.fld")) s.object = load_field(fdir / "object.fld");
    samples.push_back(std::move(s));
  }
  return samples;
}

}  // namespace holo::sim
