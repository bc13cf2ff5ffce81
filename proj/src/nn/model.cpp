#include "holo/nn/model.hpp"

#include <cmath>
#include <random>

#include "holo/error.hpp"
#include "holo/nn/ops.hpp"

namespace holo::nn {

Tensor ParameterSet::add(const std::string& name, const std::string& tag, const Shape& shape,
                         std::vector<double> values) {
  require(!contains(name), "duplicate parameter name: " + name);
  Tensor t = Tensor::from(shape, std::move(values), true);
  index_[name] = items_.size();
  items_.push_back(Parameter{name, tag, t});
  return t;
}

const Tensor& ParameterSet::get(const std::string& name) const { return at(name).value; }

Parameter& ParameterSet::at(const std::string& name) {
  auto it = index_.find(name);
  require(it != index_.end(), "unknown parameter: " + name);
  return items_[it->second];
}

const Parameter& ParameterSet::at(const std::string& name) const {
  auto it = index_.find(name);
  require(it != index_.end(), "unknown parameter: " + name);
  return items_[it->second];
}

int ParameterSet::set_frozen_by_tag(const std::string& prefix, bool frozen) {
  int n = 0;
  for (Parameter& p : items_)
    if (p.tag.rfind(prefix, 0) == 0) {
      p.set_frozen(frozen);
      ++n;
    }
  return n;
}

void ParameterSet::set_all_frozen(bool frozen) {
  for (Parameter& p : items_) p.set_frozen(frozen);
}

ParameterSet ParameterSet::clone() const {
  ParameterSet out;
  for (const Parameter& p : items_) {
    const auto v = p.value.values();
    out.add(p.name, p.tag, p.value.shape(), std::vector<double>(v.begin(), v.end()));
    out.items_.back().set_frozen(p.frozen());
  }
  return out;
}

void ParameterSet::copy_values_from(const ParameterSet& src) {
  require(src.size() == size(), "parameter sets differ in size");
  for (Parameter& p : items_) {
    const Parameter& q = src.at(p.name);
    require(q.value.shape() == p.value.shape(), "shape mismatch for parameter " + p.name);
    std::copy(q.value.values().begin(), q.value.values().end(), p.value.values().begin());
  }
}

void ParameterSet::zero_grad() {
  for (Parameter& p : items_) p.value.zero_grad();
}

ParamSummary count_parameters(const ParameterSet& params) {
  ParamSummary s;
  for (const Parameter& p : params.items()) {
    const std::size_t n = p.value.numel();
    s.total += n;
    (p.frozen() ? s.frozen : s.trainable) += n;
    s.per_block[p.tag] += n;
  }
  return s;
}

std::vector<std::string> rhm_block_tags() {
  std::vector<std::string> tags;
  for (int k = 1; k <= kDepth; ++k) tags.push_back("down_conv_" + std::to_string(k));
  for (int k = 1; k <= kDepth; ++k) tags.push_back("rnn_" + std::to_string(k));
  for (int k = 1; k <= kDepth; ++k) tags.push_back("up_conv_" + std::to_string(k));
  tags.push_back("head");
  return tags;
}

namespace {

int channels_at(const ModelConfig& cfg, int k) { return cfg.base_channels << (k - 1); }

class Initializer {
 public:
  Initializer(ParameterSet& ps, std::uint64_t seed) : ps_(ps), rng_(seed) {}

  void conv(const std::string& name, const std::string& tag, int cout, int cin, int k, double gain = 2.0) {
    normal(name + ".w", tag, {cout, cin, k, k}, std::sqrt(gain / (cin * k * k)));
    ps_.add(name + ".b", tag, {cout}, std::vector<double>(cout, 0.0));
  }

  void tconv(const std::string& name, const std::string& tag, int cin, int cout) {
    normal(name + ".w", tag, {cin, cout, 2, 2}, std::sqrt(2.0 / cin));
    ps_.add(name + ".b", tag, {cout}, std::vector<double>(cout, 0.0));
  }

  void gru(const std::string& name, const std::string& tag, int cin, int hidden) {
    for (const char* gate : {"z", "r", "h"}) conv(name + "." + gate, tag, hidden, cin + hidden, 3, 1.0);
  }

 private:
  void normal(const std::string& name, const std::string& tag, const Shape& shape, double sd) {
    std::normal_distribution<double> dist(0.0, sd);
    std::vector<double> v(numel(shape));
    for (double& x : v) x = dist(rng_);
    ps_.add(name, tag, shape, std::move(v));
  }

  ParameterSet& ps_;
  std::mt19937_64 rng_;
};

void check_config(const ModelConfig& cfg) {
  require(cfg.base_channels >= 1, "base_channels must be positive");
  require(cfg.in_channels >= 1 && cfg.out_channels >= 1, "channel counts must be positive");
}

Tensor conv_block(const Tensor& x, const ParameterSet& ps, const std::string& name, double slope, int stride = 1) {
  return leaky_relu(conv2d(x, ps.get(name + ".w"), ps.get(name + ".b"), stride), slope);
}

}  // namespace

ParameterSet init_rhm(const ModelConfig& cfg, std::uint64_t seed) {
  check_config(cfg);
  ParameterSet ps;
  Initializer init(ps, seed);
  for (int k = 1; k <= kDepth; ++k) {
    const std::string tag = "down_conv_" + std::to_string(k);
    const int c = channels_at(cfg, k);
    const int cprev = k == 1 ? cfg.in_channels : channels_at(cfg, k - 1);
    init.conv(tag + ".conv_a", tag, c, cprev, 3);
    init.conv(tag + ".conv_b", tag, c, c, 3);
  }
  for (int k = 1; k <= kDepth; ++k) {
    const std::string tag = "rnn_" + std::to_string(k);
    const int c = channels_at(cfg, k);
    init.gru(tag + ".gru1", tag, c, c);
    init.gru(tag + ".gru2", tag, c, c);
    init.conv(tag + ".proj", tag, c, c, 1);
  }
  for (int k = kDepth; k >= 1; --k) {
    const std::string tag = "up_conv_" + std::to_string(k);
    const int c = channels_at(cfg, k);
    const int cin = k == kDepth ? c : 2 * c;  // upsampled features + skip
    const int cout = k == 1 ? c : c / 2;
    init.conv(tag + ".conv", tag, c, cin, 3);
    init.tconv(tag + ".up", tag, c, cout);
    if (k == 1) init.conv(tag + ".refine", tag, c, c, 3);
  }
  init.conv("head.conv", "head", cfg.out_channels, cfg.base_channels, 1, 1.0);
  return ps;
}

ParameterSet init_discriminator(const ModelConfig& cfg, std::uint64_t seed) {
  check_config(cfg);
  ParameterSet ps;
  Initializer init(ps, seed);
  int cin = cfg.out_channels;
  for (int k = 1; k <= kDepth; ++k) {
    const int c = channels_at(cfg, k);
    init.conv("conv_" + std::to_string(k), "disc", c, cin, 3);
    cin = c;
  }
  init.conv("out", "disc", 1, cin, 1, 1.0);
  return ps;
}

GruWeights gru_weights(const ParameterSet& ps, const std::string& prefix) {
  return GruWeights{ps.get(prefix + ".z.w"), ps.get(prefix + ".z.b"), ps.get(prefix + ".r.w"),
                    ps.get(prefix + ".r.b"), ps.get(prefix + ".h.w"), ps.get(prefix + ".h.b")};
}

Tensor conv_gru_step(const Tensor& x, const Tensor& h, const GruWeights& w) {
  require(x.rank() == 3 && h.rank() == 3, "conv_gru_step: expected [C,H,W] operands");
  require(x.dim(1) == h.dim(1) && x.dim(2) == h.dim(2),
          "conv_gru_step: spatial mismatch " + shape_str(x.shape()) + " vs " + shape_str(h.shape()));
  const Tensor xh = concat_channels({x, h});
  const Tensor z = sigmoid(conv2d(xh, w.wz, w.bz));
  const Tensor r = sigmoid(conv2d(xh, w.wr, w.br));
  require(z.shape() == h.shape(), "conv_gru_step: gate width does not match hidden state");
  const Tensor cand = tanh(conv2d(concat_channels({x, mul(r, h)}), w.wh, w.bh));
  return add(h, mul(z, sub(cand, h)));
}

Tensor rhm_forward(const std::vector<Tensor>& inputs, const ParameterSet& ps, const ModelConfig& cfg) {
  require(!inputs.empty(), "rhm_forward: need at least one input");
  const Shape& s0 = inputs[0].shape();
  require(s0.size() == 3 && s0[0] == cfg.in_channels,
          "rhm_forward: inputs must be [" + std::to_string(cfg.in_channels) + ",H,W], got " + shape_str(s0));
  const int div = 1 << kDepth;
  require(s0[1] % div == 0 && s0[2] % div == 0,
          "rhm_forward: height and width must be divisible by " + std::to_string(div) + ", got " + shape_str(s0));
  for (const Tensor& t : inputs) require(t.shape() == s0, "rhm_forward: inputs differ in shape");
  const double a = cfg.leaky_slope;

  // Encode each sequence element; features[k][t].
  std::vector<std::vector<Tensor>> features(kDepth);
  for (const Tensor& x : inputs) {
    Tensor f = x;
    for (int k = 1; k <= kDepth; ++k) {
      const std::string tag = "down_conv_" + std::to_string(k);
      f = conv_block(f, ps, tag + ".conv_a", a, k == 1 ? 1 : 2);
      f = conv_block(f, ps, tag + ".conv_b", a, k == 1 ? 2 : 1);
      features[k - 1].push_back(f);
    }
  }

  // Recurrent aggregation per scale; the last hidden state is the skip.
  std::vector<Tensor> skips(kDepth);
  for (int k = 1; k <= kDepth; ++k) {
    const std::string tag = "rnn_" + std::to_string(k);
    const GruWeights g1 = gru_weights(ps, tag + ".gru1");
    const GruWeights g2 = gru_weights(ps, tag + ".gru2");
    Tensor h1 = Tensor::zeros(features[k - 1][0].shape());
    Tensor h2 = h1;
    for (const Tensor& f : features[k - 1]) {
      h1 = conv_gru_step(f, h1, g1);
      h2 = conv_gru_step(h1, h2, g2);
    }
    skips[k - 1] = conv2d(h2, ps.get(tag + ".proj.w"), ps.get(tag + ".proj.b"));
  }

  Tensor u = skips[kDepth - 1];
  for (int k = kDepth; k >= 1; --k) {
    const std::string tag = "up_conv_" + std::to_string(k);
    if (k < kDepth) u = concat_channels({u, skips[k - 1]});
    u = conv_block(u, ps, tag + ".conv", a);
    u = leaky_relu(conv_transpose2x2(u, ps.get(tag + ".up.w"), ps.get(tag + ".up.b")), a);
    if (k == 1) u = conv_block(u, ps, tag + ".refine", a);
  }
  return conv2d(u, ps.get("head.conv.w"), ps.get("head.conv.b"));
}

Tensor disc_forward(const Tensor& image, const ParameterSet& ps, const ModelConfig& cfg) {
  require(image.rank() == 3 && image.dim(0) == cfg.out_channels,
          "disc_forward: expected [" + std::to_string(cfg.out_channels) + ",H,W], got " + shape_str(image.shape()));
  Tensor f = image;
  for (int k = 1; k <= kDepth; ++k) f = conv_block(f, ps, "conv_" + std::to_string(k), cfg.leaky_slope, 2);
  return sum(conv2d(spatial_mean(f), ps.get("out.w"), ps.get("out.b")));
}

Tensor field_to_input(const ComplexField& f) {
  const std::size_t n = f.size();
  std::vector<double> v(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = f[i].real();
    v[n + i] = f[i].imag();
  }
  return Tensor::from({2, f.rows(), f.cols()}, std::move(v));
}

Tensor field_to_target(const ComplexField& f) {
  const std::size_t n = f.size();
  std::vector<double> v(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = std::abs(f[i]);
    v[n + i] = std::arg(f[i]);
  }
  return Tensor::from({2, f.rows(), f.cols()}, std::move(v));
}

ComplexField output_to_field(const Tensor& out, double pixel_pitch_um, double wavelength_um) {
  require(out.rank() == 3 && out.dim(0) == 2, "expected [2,H,W] (amplitude, phase), got " + shape_str(out.shape()));
  ComplexField f(out.dim(1), out.dim(2), pixel_pitch_um, wavelength_um);
  const std::size_t n = f.size();
  for (std::size_t i = 0; i < n; ++i) f[i] = std::polar(std::max(out.values()[i], 0.0), out.values()[n + i]);
  return f;
}

ComplexField rhm_forward(const std::vector<ComplexField>& inputs, const ParameterSet& params,
                         const ModelConfig& cfg) {
  require(!inputs.empty(), "rhm_forward: need at least one input");
  NoGradGuard no_grad;
  std::vector<Tensor> xs;
  for (const ComplexField& f : inputs) xs.push_back(field_to_input(f));
  return output_to_field(rhm_forward(xs, params, cfg), inputs[0].pixel_pitch_um, inputs[0].wavelength_um);
}

}  // namespace holo::nn
