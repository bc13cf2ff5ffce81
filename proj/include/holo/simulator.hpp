#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "holo/field.hpp"
#include "holo/phase_retrieval.hpp"

namespace holo::sim {

enum class SceneKind { phase_blobs, amplitude_bars, mixed_texture };

std::string to_string(SceneKind k);
SceneKind scene_kind_from_string(const std::string& s);

struct SceneSpec {
  SceneKind kind = SceneKind::mixed_texture;
  double amp_min = 0.5;
  double amp_max = 1.0;
  double phase_max = 1.0;  // rad; phase lies in [-phase_max, phase_max]
  double feature_px = 4.0;
  std::uint64_t seed = 0;
};

/// Default heights: 450..555 um in 15 um steps.
std::vector<double> default_z2_list();

struct AcquisitionSpec {
  OpticalConfig optical;
  std::vector<double> z2_list = default_z2_list();
  /// Gaussian read noise, standard deviation relative to the mean clean intensity.
  double noise_sigma = 0.0;
  /// Signal-dependent term: variance = shot_scale * intensity.
  double shot_scale = 0.0;
  /// k > 1 renders a k x k sub-pixel scan per height, box-integrated onto k-times coarser pixels.
  int psr_pattern = 0;
  /// 0 disables quantisation.
  int bit_depth = 0;
  double full_scale = 4.0;
  std::uint64_t seed = 0;
};

/// Deterministic object: amplitude in [amp_min, amp_max], phase in [-phase_max, phase_max],
/// both maps band-limited below half the Nyquist frequency. Pitch and wavelength from `optical`.
ComplexField make_object(const SceneSpec& spec, int rows, int cols, const OpticalConfig& optical);

/// Forward model: propagate by +z2, |.|^2, noise, quantisation. With a sub-pixel pattern each
/// frame is the field Fourier-shifted by (a, b) fine pixels, then box-integrated; its recorded
/// lateral shift is (a / k, b / k) coarse pixels.
HologramStack acquire(const ComplexField& object, const AcquisitionSpec& acq);

/// k x k box-integrated frames of a high-resolution image, frame (a, b) translated by (a, b)
/// fine pixels (circularly) first. Row-major over (b, a); shifts recorded in coarse pixels.
std::vector<Hologram> psr_frames(const IntensityImage& hires, int factor);

/// 10 log10(sum clean^2 / sum (noisy - clean)^2).
double snr_db(const IntensityImage& clean, const IntensityImage& noisy);

enum class Split { train, val, test };
std::string to_string(Split s);
Split split_from_string(const std::string& s);

struct DatasetSpec {
  SceneSpec scene;  // seed is replaced per field of view
  OpticalConfig optical;
  int rows = 64;
  int cols = 64;
  std::vector<double> target_z2 = default_z2_list();
  /// Input heights; empty means "spread m inputs across target_z2".
  std::vector<double> input_z2;
  double noise_sigma = 0.0;
  int bit_depth = 0;
  std::uint64_t seed = 0;
  MhprConfig mhpr;
};

struct Sample {
  std::vector<ComplexField> inputs;  // back-propagated by zbar2, carrier removed
  ComplexField target;               // MH-PR reconstruction from 8 heights
  ComplexField object;               // simulator truth
  std::uint64_t seed = 0;
  Split split = Split::train;
};

/// Per-field-of-view seed; splits draw from disjoint families.
std::uint64_t fov_seed(std::uint64_t base, Split split, int index);

/// The heights used for m network inputs.
std::vector<double> input_heights(const DatasetSpec& spec, int m_inputs);

std::vector<Sample> make_dataset(int n_fovs, int m_inputs, const DatasetSpec& spec, Split split);

/// Dihedral group D4 applied identically to inputs, target and object: element t rotates by
/// 90 deg * (t % 4) after an optional horizontal flip (t >= 4). Element 0 is the identity.
std::array<Sample, 8> augment_8x(const Sample& s);
ComplexField dihedral(const ComplexField& f, int element);

/// `fov_%04d/input_%02d.fld`, `target.fld`, `object.fld`, plus `manifest.json`.
void save_dataset(const std::filesystem::path& dir, const std::vector<Sample>& samples,
                  const std::string& manifest_json);
std::vector<Sample> load_dataset(const std::filesystem::path& dir);

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace holo::sim
