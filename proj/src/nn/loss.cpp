#include "holo/nn/loss.hpp"

#include <algorithm>
#include <numbers>

#include "holo/error.hpp"
#include "holo/nn/ops.hpp"

namespace holo::nn {

Tensor ms_ssim(const Tensor& x, const Tensor& y, const SsimConstants& k) {
  require(x.shape() == y.shape(), "ms_ssim: shape mismatch " + shape_str(x.shape()) + " vs " + shape_str(y.shape()));
  require(x.rank() == 3 && x.dim(0) == 1, "ms_ssim: expected [1,H,W], got " + shape_str(x.shape()));
  require(k.scales >= 1 && k.scales <= 5, "MS-SSIM scale count must be in [1, 5]");
  require(x.dim(1) >= k.min_side() && x.dim(2) >= k.min_side(),
          "image too small for " + std::to_string(k.scales) + "-scale MS-SSIM");
  const double c1 = k.c1(), c2 = k.c2();
  Tensor xs = x, ys = y;
  Tensor result;
  for (int s = 0; s < k.scales; ++s) {
    if (s > 0) {
      xs = mean_pool2(xs);
      ys = mean_pool2(ys);
    }
    const Tensor mx = gaussian_filter_valid(xs);
    const Tensor my = gaussian_filter_valid(ys);
    const Tensor mx2 = square(mx), my2 = square(my), mxmy = mul(mx, my);
    const Tensor vx = sub(gaussian_filter_valid(square(xs)), mx2);
    const Tensor vy = sub(gaussian_filter_valid(square(ys)), my2);
    const Tensor cxy = sub(gaussian_filter_valid(mul(xs, ys)), mxmy);
    const Tensor cs = mean(div(add_scalar(scale(cxy, 2.0), c2), add_scalar(add(vx, vy), c2)));
    Tensor factor = pow_scalar(clamp_min(cs, 0.0), k.beta[s]);
    if (s == k.scales - 1) {
      const Tensor l = mean(div(add_scalar(scale(mxmy, 2.0), c1), add_scalar(add(mx2, my2), c1)));
      factor = mul(factor, pow_scalar(clamp_min(l, 0.0), k.alpha));
    }
    result = s == 0 ? factor : mul(result, factor);
  }
  return result;
}

int loss_ssim_scales(int rows, int cols) {
  const int side = std::min(rows, cols);
  int s = 3;
  while (s > 1 && side < (1 << (s - 1)) * 16) --s;
  require(side >= 16, "patch too small for the SSIM loss (need 16 px per side)");
  return s;
}

Tensor mae_loss(const Tensor& pred, const Tensor& target) {
  require(pred.shape() == target.shape(),
          "mae_loss: shape mismatch " + shape_str(pred.shape()) + " vs " + shape_str(target.shape()));
  require(pred.rank() == 3, "mae_loss: expected [C,H,W]");
  Tensor total;
  for (int c = 0; c < pred.dim(0); ++c) {
    const Tensor term = mean(abs(sub(slice_channels(pred, c, 1), slice_channels(target, c, 1))));
    total = c == 0 ? term : add(total, term);
  }
  return total;
}

Tensor ssim_loss(const Tensor& pred, const Tensor& target) {
  require(pred.shape() == target.shape(),
          "ssim_loss: shape mismatch " + shape_str(pred.shape()) + " vs " + shape_str(target.shape()));
  require(pred.rank() == 3 && pred.dim(0) == 2, "ssim_loss: expected [2,H,W] (amplitude, phase)");
  const int scales = loss_ssim_scales(pred.dim(1), pred.dim(2));
  const Tensor amp = ms_ssim(slice_channels(pred, 0, 1), slice_channels(target, 0, 1),
                             truncated_ssim_constants(scales, 1.0));
  const double pi = std::numbers::pi;
  const Tensor phase = ms_ssim(add_scalar(slice_channels(pred, 1, 1), pi), add_scalar(slice_channels(target, 1, 1), pi),
                               truncated_ssim_constants(scales, 2.0 * pi));
  return add_scalar(scale(add(amp, phase), -1.0), 2.0);
}

GeneratorLoss generator_loss(const Tensor& pred, const Tensor& target, const Tensor& d_fake, const LossWeights& w) {
  GeneratorLoss g;
  g.mae = mae_loss(pred, target);
  g.ssim = ssim_loss(pred, target);
  if (d_fake.defined()) {
    require(d_fake.numel() == 1, "critic output must be a scalar");
    g.adv = square(add_scalar(d_fake, -1.0));
  } else {
    g.adv = Tensor::scalar(0.0);
  }
  g.total = add(add(scale(g.mae, w.alpha), scale(g.ssim, w.beta)), scale(g.adv, w.gamma));
  return g;
}

Tensor discriminator_loss(const Tensor& d_fake, const Tensor& d_real) {
  require(d_fake.numel() == 1 && d_real.numel() == 1, "critic outputs must be scalars");
  return add(scale(square(d_fake), 0.5), scale(square(add_scalar(d_real, -1.0)), 0.5));
}

}  // namespace holo::nn
