#pragma once

#include <utility>
#include <vector>

#include "holo/field.hpp"

namespace holo {

inline constexpr double kFocusTolerance = 0.1;
inline constexpr double kFocusPassband = 0.25;

struct FocusResult {
  double z_hat = 0.0;
  double score = 0.0;
  /// Every evaluated (z, score), coarse grid first, then refinement probes.
  std::vector<std::pair<double, double>> scan_trace;
  /// Coarse scores were all equal (e.g. a featureless hologram); z_hat is the range start.
  bool plateau = false;
  /// Golden-section refinement did not improve on the coarse maximum; z_hat is the coarse point.
  bool refinement_lost = false;
};

/// Edge-sparsity sharpness: Tamura coefficient sqrt(std / mean) of the central-difference
/// gradient magnitude of the complex field, |dU/dx|^2 + |dU/dy|^2 under the root, over interior
/// pixels. Using the complex gradient lets phase edges count. Returns 0 when the mean gradient is
/// zero up to round-off (below 1e-12 of the mean amplitude).
double sharpness(const ComplexField& field);

/// Coarse grid scan of sharpness(back-propagated hologram) over [z_min, z_max], then
/// golden-section refinement to 0.1 um around the best grid point. The hologram spectrum is
/// cut to radial frequencies below `passband` cycles/pixel first (values >= 0.71 keep
/// everything); the default 0.25 drops white sensor noise above the band where object detail
/// normally lives.
FocusResult autofocus(const Hologram& holo, double wavelength_um, double z_min_um, double z_max_um,
                      double coarse_step_um, double passband = kFocusPassband);

}  // namespace holo
