#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "holo/field.hpp"
#include "holo/nn/tensor.hpp"

namespace holo::nn {

struct Parameter {
  std::string name;
  std::string tag;
  Tensor value;

  /// A frozen parameter takes no gradient and is skipped by the optimiser.
  bool frozen() const { return !value.requires_grad(); }
  void set_frozen(bool on) { value.set_requires_grad(!on); }
};

/// Ordered named parameters. Insertion order defines serialisation and optimiser order.
class ParameterSet {
 public:
  Tensor add(const std::string& name, const std::string& tag, const Shape& shape, std::vector<double> values);

  bool contains(const std::string& name) const { return index_.count(name) > 0; }
  const Tensor& get(const std::string& name) const;
  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;

  std::vector<Parameter>& items() { return items_; }
  const std::vector<Parameter>& items() const { return items_; }
  std::size_t size() const { return items_.size(); }

  /// Freeze (or thaw) every parameter whose tag starts with `prefix`; returns how many matched.
  int set_frozen_by_tag(const std::string& prefix, bool frozen);
  void set_all_frozen(bool frozen);

  /// Independent copy of values, tags and frozen flags.
  ParameterSet clone() const;
  /// Overwrite values from `src`, which must hold the same names and shapes.
  void copy_values_from(const ParameterSet& src);
  void zero_grad();

 private:
  std::vector<Parameter> items_;
  std::map<std::string, std::size_t> index_;
};

struct ParamSummary {
  std::size_t total = 0;
  std::size_t trainable = 0;
  std::size_t frozen = 0;
  std::map<std::string, std::size_t> per_block;
  double trainable_fraction() const { return total ? static_cast<double>(trainable) / total : 0.0; }
};

ParamSummary count_parameters(const ParameterSet& params);

struct ModelConfig {
  int base_channels = 8;
  int in_channels = 2;   // real, imaginary
  int out_channels = 2;  // amplitude, phase
  double leaky_slope = 0.2;
};

inline constexpr int kDepth = 4;

/// Block tags of the generator: down_conv_k, rnn_k, up_conv_k (k = 1..4) and head.
std::vector<std::string> rhm_block_tags();

/// He-normal weights from a seeded generator, zero biases.
ParameterSet init_rhm(const ModelConfig& cfg, std::uint64_t seed);
/// Critic: four stride-2 conv + leaky-ReLU blocks, global mean, 1x1 conv to one value. Tag "disc".
ParameterSet init_discriminator(const ModelConfig& cfg, std::uint64_t seed);

struct GruWeights {
  Tensor wz, bz, wr, br, wh, bh;
};

/// z = sigmoid(Conv_z[x, h]), r = sigmoid(Conv_r[x, h]), h~ = tanh(Conv_h[x, r*h]),
/// h' = (1 - z) h + z h~. All gate convolutions are 3x3, stride 1.
Tensor conv_gru_step(const Tensor& x, const Tensor& h, const GruWeights& w);
GruWeights gru_weights(const ParameterSet& params, const std::string& prefix);

/// inputs: M tensors [in_channels, H, W], H and W divisible by 16. Returns [out_channels, H, W].
Tensor rhm_forward(const std::vector<Tensor>& inputs, const ParameterSet& params, const ModelConfig& cfg);
/// image [out_channels, H, W] -> [1].
Tensor disc_forward(const Tensor& image, const ParameterSet& params, const ModelConfig& cfg);

/// (real, imaginary) channels.
Tensor field_to_input(const ComplexField& f);
/// (amplitude, phase) channels.
Tensor field_to_target(const ComplexField& f);
ComplexField output_to_field(const Tensor& out, double pixel_pitch_um, double wavelength_um);

ComplexField rhm_forward(const std::vector<ComplexField>& inputs, const ParameterSet& params,
                         const ModelConfig& cfg);

}  // namespace holo::nn
