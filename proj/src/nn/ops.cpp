#include "holo/nn/ops.hpp"

#include <Eigen/Core>
#include <cmath>

#include "holo/error.hpp"
#include "holo/metrics.hpp"

namespace holo::nn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CMapMat = Eigen::Map<const RowMat>;

// Eigen's kernels peel loops to the operand alignment, so results on heap buffers would vary
// by address in the last bit. Products therefore run on Eigen-owned (aligned) copies.
RowMat aligned(const double* p, int rows, int cols) { return CMapMat(p, rows, cols); }

void add_into(std::vector<double>& dst, const RowMat& m) {
  const double* src = m.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

double row_sum(const double* p, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += p[i];
  return s;
}

void require_same(const Tensor& a, const Tensor& b, const char* op) {
  require(a.defined() && b.defined(), std::string(op) + ": undefined operand");
  require(a.shape() == b.shape(),
          std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

void require_chw(const Tensor& x, const char* op) {
  require(x.defined() && x.rank() == 3, std::string(op) + ": expected [C,H,W], got " +
                                            (x.defined() ? shape_str(x.shape()) : std::string("undefined")));
}

// Accumulates g into the gradient of n if n participates in differentiation.
template <class F>
void accumulate(Node* n, F&& per_element) {
  if (!n->requires_grad) return;
  auto& g = n->grad_buffer();
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += per_element(i);
}

// y = f(x) with dy/dx = d(x, y).
template <class F, class D>
Tensor unary(const Tensor& x, F f, D d) {
  std::vector<double> v(x.numel());
  const auto xv = x.values();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = f(xv[i]);
  Tensor out = make_result(x.shape(), std::move(v), {x});
  if (out.requires_grad()) {
    Node* self = out.node();
    Node* px = x.node();
    self->backward = [self, px, d] {
      accumulate(px, [&](std::size_t i) { return self->grad[i] * d(px->value[i], self->value[i]); });
    };
  }
  return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same(a, b, "add");
  std::vector<double> v(a.numel());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.values()[i] + b.values()[i];
  Tensor out = make_result(a.shape(), std::move(v), {a, b});
  if (out.requires_grad()) {
    Node *self = out.node(), *pa = a.node(), *pb = b.node();
    self->backward = [self, pa, pb] {
      accumulate(pa, [&](std::size_t i) { return self->grad[i]; });
      accumulate(pb, [&](std::size_t i) { return self->grad[i]; });
    };
  }
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same(a, b, "sub");
  std::vector<double> v(a.numel());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.values()[i] - b.values()[i];
  Tensor out = make_result(a.shape(), std::move(v), {a, b});
  if (out.requires_grad()) {
    Node *self = out.node(), *pa = a.node(), *pb = b.node();
    self->backward = [self, pa, pb] {
      accumulate(pa, [&](std::size_t i) { return self->grad[i]; });
      accumulate(pb, [&](std::size_t i) { return -self->grad[i]; });
    };
  }
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same(a, b, "mul");
  std::vector<double> v(a.numel());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.values()[i] * b.values()[i];
  Tensor out = make_result(a.shape(), std::move(v), {a, b});
  if (out.requires_grad()) {
    Node *self = out.node(), *pa = a.node(), *pb = b.node();
    self->backward = [self, pa, pb] {
      accumulate(pa, [&](std::size_t i) { return self->grad[i] * pb->value[i]; });
      accumulate(pb, [&](std::size_t i) { return self->grad[i] * pa->value[i]; });
    };
  }
  return out;
}

Tensor div(const Tensor& a, const Tensor& b) {
  require_same(a, b, "div");
  std::vector<double> v(a.numel());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.values()[i] / b.values()[i];
  Tensor out = make_result(a.shape(), std::move(v), {a, b});
  if (out.requires_grad()) {
    Node *self = out.node(), *pa = a.node(), *pb = b.node();
    self->backward = [self, pa, pb] {
      accumulate(pa, [&](std::size_t i) { return self->grad[i] / pb->value[i]; });
      accumulate(pb, [&](std::size_t i) { return -self->grad[i] * self->value[i] / pb->value[i]; });
    };
  }
  return out;
}

Tensor scale(const Tensor& x, double s) {
  return unary(x, [s](double v) { return s * v; }, [s](double, double) { return s; });
}

Tensor add_scalar(const Tensor& x, double s) {
  return unary(x, [s](double v) { return v + s; }, [](double, double) { return 1.0; });
}

Tensor square(const Tensor& x) {
  return unary(x, [](double v) { return v * v; }, [](double v, double) { return 2.0 * v; });
}

Tensor abs(const Tensor& x) {
  return unary(
      x, [](double v) { return std::abs(v); }, [](double v, double) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

Tensor pow_scalar(const Tensor& x, double p) {
  for (double v : x.values()) require(v >= 0.0, "pow_scalar: negative base");
  return unary(
      x, [p](double v) { return std::pow(v, p); },
      [p](double v, double) { return v > 0.0 ? p * std::pow(v, p - 1.0) : 0.0; });
}

Tensor clamp_min(const Tensor& x, double lo) {
  return unary(
      x, [lo](double v) { return v < lo ? lo : v; }, [lo](double v, double) { return v < lo ? 0.0 : 1.0; });
}

Tensor sigmoid(const Tensor& x) {
  return unary(
      x, [](double v) { return 1.0 / (1.0 + std::exp(-v)); }, [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh(const Tensor& x) {
  return unary(x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor leaky_relu(const Tensor& x, double slope) {
  return unary(
      x, [slope](double v) { return v > 0.0 ? v : slope * v; },
      [slope](double v, double) { return v > 0.0 ? 1.0 : slope; });
}

Tensor sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.values()) s += v;
  Tensor out = make_result({1}, {s}, {x});
  if (out.requires_grad()) {
    Node *self = out.node(), *px = x.node();
    self->backward = [self, px] { accumulate(px, [&](std::size_t) { return self->grad[0]; }); };
  }
  return out;
}

Tensor mean(const Tensor& x) {
  require(x.numel() > 0, "mean of an empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(x.numel()));
}

Tensor concat_channels(const std::vector<Tensor>& parts) {
  require(!parts.empty(), "concat_channels: no operands");
  for (const Tensor& p : parts) require_chw(p, "concat_channels");
  const int h = parts[0].dim(1), w = parts[0].dim(2);
  int c = 0;
  for (const Tensor& p : parts) {
    require(p.dim(1) == h && p.dim(2) == w, "concat_channels: spatial mismatch " + shape_str(parts[0].shape()) +
                                                " vs " + shape_str(p.shape()));
    c += p.dim(0);
  }
  std::vector<double> v;
  v.reserve(static_cast<std::size_t>(c) * h * w);
  for (const Tensor& p : parts) v.insert(v.end(), p.values().begin(), p.values().end());
  Tensor out = make_result({c, h, w}, std::move(v), parts);
  if (out.requires_grad()) {
    Node* self = out.node();
    std::vector<Node*> ps;
    for (const Tensor& p : parts) ps.push_back(p.node());
    self->backward = [self, ps] {
      std::size_t off = 0;
      for (Node* p : ps) {
        accumulate(p, [&](std::size_t i) { return self->grad[off + i]; });
        off += p->value.size();
      }
    };
  }
  return out;
}

Tensor slice_channels(const Tensor& x, int start, int count) {
  require_chw(x, "slice_channels");
  require(start >= 0 && count > 0 && start + count <= x.dim(0), "slice_channels: range out of bounds");
  const std::size_t plane = static_cast<std::size_t>(x.dim(1)) * x.dim(2);
  const std::size_t off = plane * start;
  std::vector<double> v(x.values().begin() + off, x.values().begin() + off + plane * count);
  Tensor out = make_result({count, x.dim(1), x.dim(2)}, std::move(v), {x});
  if (out.requires_grad()) {
    Node *self = out.node(), *px = x.node();
    self->backward = [self, px, off] {
      if (!px->requires_grad) return;
      auto& g = px->grad_buffer();
      for (std::size_t i = 0; i < self->grad.size(); ++i) g[off + i] += self->grad[i];
    };
  }
  return out;
}

Tensor mean_pool2(const Tensor& x) {
  require_chw(x, "mean_pool2");
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2), oh = h / 2, ow = w / 2;
  std::vector<double> v(static_cast<std::size_t>(c) * oh * ow);
  const auto xv = x.values();
  auto at = [&](int ch, int r, int col) { return (static_cast<std::size_t>(ch) * h + r) * w + col; };
  for (int ch = 0; ch < c; ++ch)
    for (int r = 0; r < oh; ++r)
      for (int col = 0; col < ow; ++col)
        v[(static_cast<std::size_t>(ch) * oh + r) * ow + col] =
            0.25 * (xv[at(ch, 2 * r, 2 * col)] + xv[at(ch, 2 * r, 2 * col + 1)] + xv[at(ch, 2 * r + 1, 2 * col)] +
                    xv[at(ch, 2 * r + 1, 2 * col + 1)]);
  Tensor out = make_result({c, oh, ow}, std::move(v), {x});
  if (out.requires_grad()) {
    Node *self = out.node(), *px = x.node();
    self->backward = [self, px, c, h, w, oh, ow] {
      if (!px->requires_grad) return;
      auto& g = px->grad_buffer();
      for (int ch = 0; ch < c; ++ch)
        for (int r = 0; r < oh; ++r)
          for (int col = 0; col < ow; ++col) {
            const double q = 0.25 * self->grad[(static_cast<std::size_t>(ch) * oh + r) * ow + col];
            const std::size_t base = (static_cast<std::size_t>(ch) * h + 2 * r) * w + 2 * col;
            g[base] += q;
            g[base + 1] += q;
            g[base + w] += q;
            g[base + w + 1] += q;
          }
    };
  }
  return out;
}

Tensor spatial_mean(const Tensor& x) {
  require_chw(x, "spatial_mean");
  const int c = x.dim(0);
  const std::size_t plane = static_cast<std::size_t>(x.dim(1)) * x.dim(2);
  std::vector<double> v(c, 0.0);
  for (int ch = 0; ch < c; ++ch) {
    for (std::size_t i = 0; i < plane; ++i) v[ch] += x.values()[ch * plane + i];
    v[ch] /= static_cast<double>(plane);
  }
  Tensor out = make_result({c, 1, 1}, std::move(v), {x});
  if (out.requires_grad()) {
    Node *self = out.node(), *px = x.node();
    self->backward = [self, px, plane] {
      accumulate(px, [&](std::size_t i) { return self->grad[i / plane] / static_cast<double>(plane); });
    };
  }
  return out;
}

Tensor gaussian_filter_valid(const Tensor& x) {
  require_chw(x, "gaussian_filter_valid");
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  const int k = kSsimWindow;
  require(h >= k && w >= k, "gaussian_filter_valid: input smaller than the window");
  const int oh = h - k + 1, ow = w - k + 1;
  const auto taps = ssim_gaussian_taps();
  std::vector<double> v(static_cast<std::size_t>(c) * oh * ow);
  std::vector<double> tmp(static_cast<std::size_t>(h) * ow);
  const auto xv = x.values();
  for (int ch = 0; ch < c; ++ch) {
    const double* src = xv.data() + static_cast<std::size_t>(ch) * h * w;
    for (int r = 0; r < h; ++r)
      for (int col = 0; col < ow; ++col) {
        double s = 0.0;
        for (int t = 0; t < k; ++t) s += taps[t] * src[r * w + col + t];
        tmp[static_cast<std::size_t>(r) * ow + col] = s;
      }
    double* dst = v.data() + static_cast<std::size_t>(ch) * oh * ow;
    for (int r = 0; r < oh; ++r)
      for (int col = 0; col < ow; ++col) {
        double s = 0.0;
        for (int t = 0; t < k; ++t) s += taps[t] * tmp[static_cast<std::size_t>(r + t) * ow + col];
        dst[r * ow + col] = s;
      }
  }
  Tensor out = make_result({c, oh, ow}, std::move(v), {x});
  if (out.requires_grad()) {
    Node *self = out.node(), *px = x.node();
    self->backward = [self, px, c, h, w, oh, ow, taps] {
      if (!px->requires_grad) return;
      auto& g = px->grad_buffer();
      std::vector<double> tmp(static_cast<std::size_t>(h) * ow);
      for (int ch = 0; ch < c; ++ch) {
        const double* go = self->grad.data() + static_cast<std::size_t>(ch) * oh * ow;
        std::fill(tmp.begin(), tmp.end(), 0.0);
        for (int r = 0; r < oh; ++r)
          for (int col = 0; col < ow; ++col)
            for (int t = 0; t < kSsimWindow; ++t)
              tmp[static_cast<std::size_t>(r + t) * ow + col] += taps[t] * go[r * ow + col];
        double* gi = g.data() + static_cast<std::size_t>(ch) * h * w;
        for (int r = 0; r < h; ++r)
          for (int col = 0; col < ow; ++col)
            for (int t = 0; t < kSsimWindow; ++t) gi[r * w + col + t] += taps[t] * tmp[static_cast<std::size_t>(r) * ow + col];
      }
    };
  }
  return out;
}

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride) {
  require_chw(x, "conv2d");
  require(w.defined() && w.rank() == 4, "conv2d: weight must be [Cout,Cin,k,k]");
  const int cin = x.dim(0), h = x.dim(1), wd = x.dim(2);
  const int cout = w.dim(0), k = w.dim(2);
  require(w.dim(1) == cin, "conv2d: input has " + std::to_string(cin) + " channels, weight expects " +
                               std::to_string(w.dim(1)));
  require(w.dim(3) == k && k % 2 == 1, "conv2d: kernel must be square and odd");
  require(stride == 1 || stride == 2, "conv2d: stride must be 1 or 2");
  if (b.defined()) require(b.rank() == 1 && b.dim(0) == cout, "conv2d: bias must be [Cout]");
  const int pad = (k - 1) / 2;
  const int oh = (h + stride - 1) / stride, ow = (wd + stride - 1) / stride;
  const int rows = cin * k * k, n = oh * ow;

  // im2col; a 1x1 stride-1 convolution reads the input directly.
  const bool direct = k == 1 && stride == 1;
  auto cols = std::make_shared<RowMat>();
  if (direct) {
    *cols = aligned(x.values().data(), rows, n);
  } else {
    cols->setZero(rows, n);
    const auto xv = x.values();
    for (int ci = 0; ci < cin; ++ci)
      for (int ki = 0; ki < k; ++ki)
        for (int kj = 0; kj < k; ++kj) {
          double* dst = cols->data() + static_cast<std::size_t>((ci * k + ki) * k + kj) * n;
          for (int oy = 0; oy < oh; ++oy) {
            const int iy = oy * stride + ki - pad;
            if (iy < 0 || iy >= h) continue;
            for (int ox = 0; ox < ow; ++ox) {
              const int ix = ox * stride + kj - pad;
              if (ix >= 0 && ix < wd) dst[oy * ow + ox] = xv[(static_cast<std::size_t>(ci) * h + iy) * wd + ix];
            }
          }
        }
  }

  const RowMat prod = aligned(w.values().data(), cout, rows) * *cols;
  std::vector<double> v(prod.data(), prod.data() + prod.size());
  if (b.defined())
    for (int o = 0; o < cout; ++o)
      for (int p = 0; p < n; ++p) v[static_cast<std::size_t>(o) * n + p] += b.values()[o];

  std::vector<Tensor> inputs{x, w};
  if (b.defined()) inputs.push_back(b);
  Tensor out = make_result({cout, oh, ow}, std::move(v), inputs);
  if (out.requires_grad()) {
    Node* self = out.node();
    Node* px = x.node();
    Node* pw = w.node();
    Node* pb = b.defined() ? b.node() : nullptr;
    self->backward = [=] {
      const RowMat go = aligned(self->grad.data(), cout, n);
      if (pw->requires_grad) add_into(pw->grad_buffer(), go * cols->transpose());
      if (pb && pb->requires_grad) {
        auto& gb = pb->grad_buffer();
        for (int o = 0; o < cout; ++o) gb[o] += row_sum(go.data() + static_cast<std::size_t>(o) * n, n);
      }
      if (!px->requires_grad) return;
      auto& gx = px->grad_buffer();
      const RowMat gcols = aligned(pw->value.data(), cout, rows).transpose() * go;
      if (direct) {
        add_into(gx, gcols);
        return;
      }
      for (int ci = 0; ci < cin; ++ci)
        for (int ki = 0; ki < k; ++ki)
          for (int kj = 0; kj < k; ++kj) {
            const double* src = gcols.data() + static_cast<std::size_t>((ci * k + ki) * k + kj) * n;
            for (int oy = 0; oy < oh; ++oy) {
              const int iy = oy * stride + ki - pad;
              if (iy < 0 || iy >= h) continue;
              for (int ox = 0; ox < ow; ++ox) {
                const int ix = ox * stride + kj - pad;
                if (ix >= 0 && ix < wd) gx[(static_cast<std::size_t>(ci) * h + iy) * wd + ix] += src[oy * ow + ox];
              }
            }
          }
    };
  }
  return out;
}

Tensor conv_transpose2x2(const Tensor& x, const Tensor& w, const Tensor& b) {
  require_chw(x, "conv_transpose2x2");
  require(w.defined() && w.rank() == 4 && w.dim(2) == 2 && w.dim(3) == 2,
          "conv_transpose2x2: weight must be [Cin,Cout,2,2]");
  const int cin = x.dim(0), h = x.dim(1), wd = x.dim(2), cout = w.dim(1);
  require(w.dim(0) == cin, "conv_transpose2x2: input has " + std::to_string(cin) + " channels, weight expects " +
                               std::to_string(w.dim(0)));
  if (b.defined()) require(b.rank() == 1 && b.dim(0) == cout, "conv_transpose2x2: bias must be [Cout]");
  const int n = h * wd, taps = cout * 4;

  // z[(o, a, b), p] = sum_c w[c, (o, a, b)] x[c, p]
  const RowMat z = aligned(w.values().data(), cin, taps).transpose() * aligned(x.values().data(), cin, n);
  const int oh = 2 * h, ow = 2 * wd;
  std::vector<double> v(static_cast<std::size_t>(cout) * oh * ow);
  for (int o = 0; o < cout; ++o) {
    const double bias = b.defined() ? b.values()[o] : 0.0;
    for (int a = 0; a < 2; ++a)
      for (int bb = 0; bb < 2; ++bb) {
        const double* src = z.data() + static_cast<std::size_t>(o * 4 + a * 2 + bb) * n;
        for (int i = 0; i < h; ++i)
          for (int j = 0; j < wd; ++j)
            v[(static_cast<std::size_t>(o) * oh + 2 * i + a) * ow + 2 * j + bb] = src[i * wd + j] + bias;
      }
  }
  std::vector<Tensor> inputs{x, w};
  if (b.defined()) inputs.push_back(b);
  Tensor out = make_result({cout, oh, ow}, std::move(v), inputs);
  if (out.requires_grad()) {
    Node* self = out.node();
    Node* px = x.node();
    Node* pw = w.node();
    Node* pb = b.defined() ? b.node() : nullptr;
    self->backward = [=] {
      RowMat gz(taps, n);
      for (int o = 0; o < cout; ++o)
        for (int a = 0; a < 2; ++a)
          for (int bb = 0; bb < 2; ++bb) {
            double* dst = gz.data() + static_cast<std::size_t>(o * 4 + a * 2 + bb) * n;
            for (int i = 0; i < h; ++i)
              for (int j = 0; j < wd; ++j)
                dst[i * wd + j] = self->grad[(static_cast<std::size_t>(o) * oh + 2 * i + a) * ow + 2 * j + bb];
          }
      if (pb && pb->requires_grad) {
        auto& gb = pb->grad_buffer();
        for (int o = 0; o < cout; ++o) gb[o] += row_sum(gz.data() + static_cast<std::size_t>(o) * 4 * n, 4 * static_cast<std::size_t>(n));
      }
      if (pw->requires_grad) add_into(pw->grad_buffer(), aligned(px->value.data(), cin, n) * gz.transpose());
      if (px->requires_grad) add_into(px->grad_buffer(), aligned(pw->value.data(), cin, taps) * gz);
    };
  }
  return out;
}

}  // namespace holo::nn
