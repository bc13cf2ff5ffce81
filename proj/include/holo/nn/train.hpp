#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "holo/nn/loss.hpp"
#include "holo/nn/model.hpp"
#include "holo/simulator.hpp"

namespace holo::nn {

enum class Augment { none, expand8x, random_d4 };
std::string to_string(Augment a);
Augment augment_from_string(const std::string& s);

struct TrainConfig {
  double lr_g = 1e-5;
  double lr_d = 1e-6;
  /// Multiplier applied to both rates after every epoch.
  double lr_decay = 1.0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int max_epochs = 200;
  /// Stop after this many epochs without a new best validation MAE and restore the best
  /// generator; 0 disables.
  int patience = 0;
  int batch_size = 1;
  bool adversarial = true;
  LossWeights weights;
  Augment augment = Augment::none;
  std::uint64_t seed = 0;

  static TrainConfig pretrain_defaults();
  /// 2e-4 / 2e-5, decaying by 0.97 per epoch.
  static TrainConfig transfer_defaults();
};

/// One training example in network layout.
struct Pair {
  std::vector<Tensor> inputs;  // [2, H, W] (re, im) each
  Tensor target;               // [2, H, W] (amplitude, phase)
};

std::vector<Pair> to_pairs(const std::vector<sim::Sample>& samples);
/// D4 element applied to every channel of a [C, N, N] tensor; same convention as sim::dihedral.
Tensor dihedral(const Tensor& x, int element);

struct EpochRecord {
  int epoch = 0;
  double train_mae = 0.0;
  double val_mae = 0.0;
  double seconds = 0.0;
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  double best_val_mae = 0.0;
  bool early_stopped = false;
  bool stopped_by_callback = false;

  /// epoch,train_mae,val_mae,seconds
  std::string to_csv() const;
};

/// Return false to stop training after this epoch.
using EpochCallback = std::function<bool(const EpochRecord&)>;

class Adam {
 public:
  Adam(double beta1, double beta2, double eps) : b1_(beta1), b2_(beta2), eps_(eps) {}
  /// Updates every non-frozen parameter that holds a gradient; frozen ones are not touched.
  void step(ParameterSet& params, double lr);
  long steps() const { return t_; }

 private:
  struct Moments {
    std::vector<double> m, v;
  };
  double b1_, b2_, eps_;
  long t_ = 0;
  std::map<std::string, Moments> state_;
};

/// Mean over pairs of the summed per-channel MAE, no gradient.
double evaluate_mae(const ParameterSet& gen, const ModelConfig& cfg, const std::vector<Pair>& pairs);

/// Alternating generator / critic Adam steps over shuffled mini-batches. Validation MAE after
/// every epoch. A non-finite loss restores the state from the start of the failing epoch and
/// throws NumericalError.
TrainLog train(ParameterSet& gen, ParameterSet& disc, const ModelConfig& model, const std::vector<Pair>& train_set,
               const std::vector<Pair>& val_set, const TrainConfig& cfg, const EpochCallback& on_epoch = {});

struct TransferResult {
  ParameterSet gen;
  ParameterSet disc;
  TrainLog log;
  ParamSummary summary;
};

/// Starts from copies of the pretrained parameters. With freeze_backbone every rnn_k tensor is
/// frozen. `pretrained_disc` may be empty, in which case a fresh critic is drawn from cfg.seed.
TransferResult transfer(const ParameterSet& pretrained_gen, const ParameterSet& pretrained_disc, bool freeze_backbone,
                        const ModelConfig& model, const std::vector<Pair>& train_set, const std::vector<Pair>& val_set,
                        const TrainConfig& cfg, const EpochCallback& on_epoch = {});

/// Throws InputError unless `params` has exactly the names, shapes and tags of init_rhm(model).
void check_compatible(const ParameterSet& params, const ModelConfig& model);

}  // namespace holo::nn
