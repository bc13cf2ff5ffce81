#include "holo/autofocus.hpp"

#include <cmath>

#include "holo/fft.hpp"
#include "holo/propagation.hpp"

namespace holo {

double sharpness(const ComplexField& field) {
  require(field.rows() >= 3 && field.cols() >= 3, "sharpness needs at least a 3x3 field");
  double sum = 0.0, sum_sq = 0.0, amp_sum = 0.0;
  std::size_t n = 0;
  for (int r = 1; r + 1 < field.rows(); ++r) {
    for (int c = 1; c + 1 < field.cols(); ++c) {
      const cplx gx = 0.5 * (field(r, c + 1) - field(r, c - 1));
      const cplx gy = 0.5 * (field(r + 1, c) - field(r - 1, c));
      const double g = std::sqrt(std::norm(gx) + std::norm(gy));
      sum += g;
      sum_sq += g * g;
      amp_sum += std::abs(field(r, c));
      ++n;
    }
  }
  const double mean = sum / static_cast<double>(n);
  // Gradients at round-off level (a propagated plane wave) count as a flat field.
  if (mean <= 1e-12 * amp_sum / static_cast<double>(n)) return 0.0;
  const double var = std::max(0.0, sum_sq / static_cast<double>(n) - mean * mean);
  return std::sqrt(std::sqrt(var) / mean);
}

FocusResult autofocus(const Hologram& holo, double wavelength_um, double z_min_um, double z_max_um,
                      double coarse_step_um, double passband) {
  validate(holo.image);
  require(std::isfinite(z_min_um) && std::isfinite(z_max_um), "focus range must be finite");
  require(z_max_um - z_min_um > kFocusTolerance, "degenerate focus range");
  require(coarse_step_um > 0.0 && coarse_step_um < z_max_um - z_min_um,
          "coarse step must be positive and smaller than the range");

  // Transform once; every probe distance is a single kernel multiply + inverse FFT.
  const ComplexField base = field_from_intensity(holo.image, wavelength_um);
  const PropagationPlan plan(base);
  require(std::isfinite(passband) && passband > 0.0, "passband must be positive");
  Grid<cplx> spectrum = base;
  fft::forward(spectrum);
  for (int ky = 0; ky < spectrum.rows(); ++ky) {
    const double fy = static_cast<double>(fft::signed_index(ky, spectrum.rows())) / spectrum.rows();
    for (int kx = 0; kx < spectrum.cols(); ++kx) {
      const double fx = static_cast<double>(fft::signed_index(kx, spectrum.cols())) / spectrum.cols();
      if (fx * fx + fy * fy > passband * passband) spectrum(ky, kx) = 0.0;
    }
  }

  FocusResult res;
  auto score_at = [&](double z) {
    Grid<cplx> work = spectrum;
    plan.apply_to_spectrum(work, -z);
    fft::inverse(work);
    const double s = sharpness(ComplexField(std::move(work), base.pixel_pitch_um, base.wavelength_um));
    res.scan_trace.emplace_back(z, s);
    return s;
  };

  const int steps = static_cast<int>(std::floor((z_max_um - z_min_um) / coarse_step_um + 1e-9));
  double best_z = z_min_um, best_s = -1.0, worst_s = 0.0;
  for (int i = 0; i <= steps; ++i) {
    const double z = z_min_um + i * coarse_step_um;
    const double s = score_at(z);
    if (s > best_s) {  // strict: ties stay at the smaller z
      best_s = s;
      best_z = z;
    }
    worst_s = i == 0 ? s : std::min(worst_s, s);
  }
  if (steps * coarse_step_um < z_max_um - z_min_um - 1e-9) {
    const double s = score_at(z_max_um);
    if (s > best_s) {
      best_s = s;
      best_z = z_max_um;
    }
    worst_s = std::min(worst_s, s);
  }
  res.z_hat = best_z;
  res.score = best_s;
  if (best_s == worst_s) {
    res.plateau = true;
    return res;
  }

  // Golden-section search for the maximum inside the neighbouring grid cells.
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = std::max(z_min_um, best_z - coarse_step_um);
  double b = std::min(z_max_um, best_z + coarse_step_um);
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = score_at(c), fd = score_at(d);
  while (b - a > kFocusTolerance) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = score_at(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = score_at(d);
    }
  }
  const double z_ref = fc >= fd ? c : d;
  const double s_ref = std::max(fc, fd);
  if (s_ref >= best_s) {
    res.z_hat = z_ref;
    res.score = s_ref;
  } else {
    res.refinement_lost = true;
  }
  return res;
}

}  // namespace holo
