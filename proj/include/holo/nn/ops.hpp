#pragma once

#include <vector>

#include "holo/nn/tensor.hpp"

namespace holo::nn {

// Element-wise, equal shapes.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

Tensor scale(const Tensor& x, double s);
Tensor add_scalar(const Tensor& x, double s);
Tensor square(const Tensor& x);
Tensor abs(const Tensor& x);
/// x^p for x >= 0. The derivative at x = 0 is taken as 0.
Tensor pow_scalar(const Tensor& x, double p);
Tensor clamp_min(const Tensor& x, double lo);

Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor leaky_relu(const Tensor& x, double slope = 0.2);

/// Scalar [1].
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

// [C, H, W] layout.
Tensor concat_channels(const std::vector<Tensor>& parts);
Tensor slice_channels(const Tensor& x, int start, int count);
/// 2x2 average; odd trailing rows/columns are dropped.
Tensor mean_pool2(const Tensor& x);
/// [C, H, W] -> [C, 1, 1].
Tensor spatial_mean(const Tensor& x);
/// Per-channel separable filter with the 11-tap SSIM Gaussian, valid mode.
Tensor gaussian_filter_valid(const Tensor& x);

/// x [Cin, H, W], w [Cout, Cin, k, k] with odd k, b [Cout] (or undefined). Zero padding
/// (k - 1) / 2, output [Cout, ceil(H / stride), ceil(W / stride)].
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride = 1);
/// Kernel 2, stride 2 transposed convolution: x [Cin, H, W], w [Cin, Cout, 2, 2], b [Cout];
/// output [Cout, 2H, 2W].
Tensor conv_transpose2x2(const Tensor& x, const Tensor& w, const Tensor& b);

}  // namespace holo::nn
