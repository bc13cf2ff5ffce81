#pragma once

#include <filesystem>
#include <vector>

#include "holo/field.hpp"

namespace holo {

struct MhprConfig {
  int iterations = 30;
  /// New amplitude = (1 - w) * current + w * measured; 0.5 is the plain average.
  double amplitude_weight = 0.5;
  bool record_residuals = true;
};

struct MhprResult {
  ComplexField sample_field;
  /// Per iteration: mean |(|U_j| - measured_j)| over all planes, taken before each update.
  std::vector<double> residual_trace;
};

/// Multi-height phase retrieval.
///
/// The first hologram's amplitude, with zero phase relative to the unscattered plane wave
/// (i.e. the carrier exp(i 2 pi z2 / lambda)), starts the iteration at the first plane. Each
/// iteration visits planes 1..M-1 and then plane 0 in stack order: the field is propagated to
/// the plane, its amplitude is averaged with the measured one and its phase kept. After the
/// last iteration the field at plane 0 is back-propagated to the sample plane (z = 0).
MhprResult mhpr(const HologramStack& stack, const MhprConfig& cfg = {});

/// Training target: mhpr with the default configuration on exactly eight holograms.
ComplexField make_ground_truth(const HologramStack& stack8);

void save_residuals_csv(const std::filesystem::path& path, const std::vector<double>& trace);

}  // namespace holo
