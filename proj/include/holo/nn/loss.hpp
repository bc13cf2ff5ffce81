#pragma once

#include "holo/metrics.hpp"
#include "holo/nn/tensor.hpp"

namespace holo::nn {

struct LossWeights {
  double alpha = 3.0;  // MAE
  double beta = 1.0;   // 1 - MS-SSIM
  double gamma = 0.3;  // adversarial
};

/// Differentiable MS-SSIM of two [1, H, W] images; same definition and constants as holo::ms_ssim.
Tensor ms_ssim(const Tensor& x, const Tensor& y, const SsimConstants& k);

/// Largest scale count (at most 3) whose minimum side fits min(H, W).
int loss_ssim_scales(int rows, int cols);

/// Sum over channels of the per-pixel mean absolute error.
Tensor mae_loss(const Tensor& pred, const Tensor& target);
/// Sum over channels of 1 - MS-SSIM. Channel 0 (amplitude) uses dynamic range 1; channel 1
/// (phase) is offset by pi and uses dynamic range 2 pi.
Tensor ssim_loss(const Tensor& pred, const Tensor& target);

struct GeneratorLoss {
  Tensor mae, ssim, adv, total;
};

/// adv = (D(pred) - 1)^2; total = alpha mae + beta ssim + gamma adv. Without a critic output
/// (undefined d_fake) the adversarial term is zero.
GeneratorLoss generator_loss(const Tensor& pred, const Tensor& target, const Tensor& d_fake,
                             const LossWeights& w = {});
/// 0.5 D(pred)^2 + 0.5 (D(target) - 1)^2.
Tensor discriminator_loss(const Tensor& d_fake, const Tensor& d_real);

}  // namespace holo::nn
