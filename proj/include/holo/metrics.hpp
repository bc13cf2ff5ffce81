#pragma once

#include <array>
#include <string>
#include <vector>

#include "holo/field.hpp"

namespace holo {

/// Multiscale SSIM weights and stabilisers. Per scale s the contrast and structure factors
/// carry exponents beta[s] and gamma[s]; the luminance factor is taken at the coarsest scale
/// with exponent alpha.
struct SsimConstants {
  int scales = 5;
  std::array<double, 5> beta{0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
  std::array<double, 5> gamma{0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
  double alpha = 0.1333;
  double dynamic_range = 255.0;

  double c1() const { return (0.01 * dynamic_range) * (0.01 * dynamic_range); }
  double c2() const { return (0.03 * dynamic_range) * (0.03 * dynamic_range); }
  double c3() const { return c2() / 2.0; }
  double beta_sum() const;
  /// Smallest image side with `scales` dyadic levels: 2^(scales-1) * 16.
  int min_side() const { return (1 << (scales - 1)) * 16; }
};

/// The five-scale constants (L = 255).
SsimConstants standard_ssim_constants();

/// First `scales` weights of the five-scale set, renormalised to sum to one, with the
/// coarsest retained weight reused as the luminance exponent. For small patches.
SsimConstants truncated_ssim_constants(int scales, double dynamic_range);

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;

/// Normalised 11-tap Gaussian (sigma 1.5); the 2-D window is its outer product.
std::array<double, kSsimWindow> ssim_gaussian_taps();

double rmse(const RealImage& x, const RealImage& y);
/// Re<x, y> / (|x| |y|), conjugating x.
double ecc(const Grid<cplx>& x, const Grid<cplx>& y);
/// Plain sum of absolute differences.
double mae(const RealImage& x, const RealImage& y);
/// Sum of absolute differences divided by the pixel count.
double mae_mean(const RealImage& x, const RealImage& y);

/// Per scale: mean over valid 11x11 Gaussian windows of the contrast-structure product
/// (2 sigma_xy + C2) / (sigma_x^2 + sigma_y^2 + C2) (exact for C3 = C2 / 2 and beta = gamma),
/// then 2x2 mean-pool to the next scale. The luminance mean is taken at the last scale.
/// Negative per-scale factors are clamped to zero before exponentiation.
double ms_ssim(const RealImage& x, const RealImage& y, const SsimConstants& k = standard_ssim_constants());

struct MetricReport {
  double rmse = 0.0;      // amplitude
  double ecc = 0.0;       // complex
  double mae = 0.0;       // amplitude, plain sum
  double mae_mean = 0.0;  // amplitude, per pixel
  double ms_ssim = 0.0;   // amplitude rescaled to [0, 255] by the ground-truth maximum
  int ms_ssim_scales = 0;

  std::string to_json() const;
  /// Fixed table with 6 significant digits.
  std::string to_table() const;
};

/// Metrics of `out` against ground truth `gt`. MS-SSIM uses five scales when the image is
/// large enough and otherwise the largest truncated scale count that fits (recorded in the report).
MetricReport report(const ComplexField& out, const ComplexField& gt);

/// 2x2 mean pooling; odd trailing rows/cols are dropped.
RealImage mean_pool2(const RealImage& img);

}  // namespace holo
