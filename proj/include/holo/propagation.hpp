#pragma once

#include <vector>

#include "holo/field.hpp"

namespace holo {

/// Angular-spectrum transfer function for one sampling geometry.
///
/// For spatial frequencies (fx, fy) on the DFT grid (fx = kx / (cols * pitch), negative
/// frequencies in the upper half) the kernel is
///   H = exp(i 2 pi dz / lambda * sqrt(1 - (lambda fx)^2 - (lambda fy)^2))
/// on the propagating disc and 0 for evanescent components. The square-root table is
/// computed once; dz is applied per call.
class PropagationPlan {
 public:
  /// With `pad_pow2`, fields are zero-padded to the next power of two >= 2x each side
  /// before transforming, which removes circular wraparound.
  PropagationPlan(int rows, int cols, double pixel_pitch_um, double wavelength_um, bool pad_pow2 = false);
  explicit PropagationPlan(const ComplexField& like, bool pad_pow2 = false)
      : PropagationPlan(like.rows(), like.cols(), like.pixel_pitch_um, like.wavelength_um, pad_pow2) {}

  ComplexField propagate(const ComplexField& field, double dz_um) const;
  /// Applies the transfer function to an already transformed spectrum (unpadded plans only).
  void apply_to_spectrum(Grid<cplx>& spectrum, double dz_um) const;

  bool matches(const ComplexField& f) const;
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool padded() const { return pad_rows_ != rows_ || pad_cols_ != cols_; }

  /// Kernel value at DFT index (ky, kx) of the (possibly padded) grid.
  cplx transfer(int ky, int kx, double dz_um) const;

 private:
  int rows_, cols_;
  int pad_rows_, pad_cols_;
  double pitch_, wavelength_;
  // 2*pi/lambda * sqrt(1 - (lambda f)^2) per frequency; negative marks evanescent.
  std::vector<double> kz_;
};

/// Propagates `field` by the signed distance dz (negative = back-propagation).
ComplexField propagate(const ComplexField& field, double dz_um, bool pad_pow2 = false);

/// Network input preparation: each hologram as a zero-phase field, back-propagated by dz.
std::vector<ComplexField> back_propagate_stack(const HologramStack& stack, double dz_um);

/// Removes all frequency content outside the propagating disc (and optionally outside a
/// fraction of it), leaving a field that propagation maps without loss.
ComplexField band_limit(const ComplexField& field, double fraction_of_cutoff = 1.0);

}  // namespace holo
