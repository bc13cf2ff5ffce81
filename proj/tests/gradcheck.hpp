#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "holo/nn/tensor.hpp"

namespace holo::test {

inline nn::Tensor random_tensor(const nn::Shape& shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0,
                                bool requires_grad = true) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(nn::numel(shape));
  for (double& x : v) x = u(rng);
  return nn::Tensor::from(shape, std::move(v), requires_grad);
}

/// Relative error ||analytic - numeric|| / max(||analytic||, ||numeric||) of the gradient of
/// `f` with respect to each tensor in `wrt`, over at most `max_coords` coordinates per tensor.
inline double gradcheck(const std::function<nn::Tensor()>& f, const std::vector<nn::Tensor>& wrt,
                        std::size_t max_coords = 64, double h = 1e-6, std::uint64_t seed = 1) {
  for (const nn::Tensor& t : wrt) t.node()->grad.clear();
  f().backward();
  std::vector<std::vector<double>> analytic;
  for (const nn::Tensor& t : wrt) {
    std::vector<double> g(t.grad().begin(), t.grad().end());
    if (g.empty()) g.assign(t.numel(), 0.0);
    analytic.push_back(std::move(g));
  }
  std::mt19937_64 rng(seed);
  double diff = 0.0, na = 0.0, nn_ = 0.0;
  for (std::size_t k = 0; k < wrt.size(); ++k) {
    nn::Tensor t = wrt[k];
    std::vector<std::size_t> coords(t.numel());
    for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
    if (coords.size() > max_coords) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(max_coords);
    }
    for (std::size_t i : coords) {
      const double keep = t.values()[i];
      t.values()[i] = keep + h;
      const double up = f().item();
      t.values()[i] = keep - h;
      const double down = f().item();
      t.values()[i] = keep;
      const double num = (up - down) / (2.0 * h);
      diff += (num - analytic[k][i]) * (num - analytic[k][i]);
      na += analytic[k][i] * analytic[k][i];
      nn_ += num * num;
    }
  }
  const double denom = std::sqrt(std::max(na, nn_));
  return denom > 0.0 ? std::sqrt(diff) / denom : std::sqrt(diff);
}

}  // namespace holo::test
