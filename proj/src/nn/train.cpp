#include "holo/nn/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>

#include "holo/error.hpp"
#include "holo/nn/ops.hpp"

namespace holo::nn {

std::string to_string(Augment a) {
  switch (a) {
    case Augment::none: return "none";
    case Augment::expand8x: return "expand8x";
    case Augment::random_d4: return "random_d4";
  }
  return "none";
}

Augment augment_from_string(const std::string& s) {
  if (s == "none") return Augment::none;
  if (s == "expand8x") return Augment::expand8x;
  if (s == "random_d4") return Augment::random_d4;
  throw InputError("unknown augmentation '" + s + "' (expected none, expand8x or random_d4)");
}

TrainConfig TrainConfig::pretrain_defaults() { return TrainConfig{}; }

TrainConfig TrainConfig::transfer_defaults() {
  TrainConfig c;
  c.lr_g = 2e-4;
  c.lr_d = 2e-5;
  c.lr_decay = 0.97;
  return c;
}

std::vector<Pair> to_pairs(const std::vector<sim::Sample>& samples) {
  std::vector<Pair> out;
  out.reserve(samples.size());
  for (const sim::Sample& s : samples) {
    Pair p;
    for (const ComplexField& f : s.inputs) p.inputs.push_back(field_to_input(f));
    p.target = field_to_target(s.target);
    out.push_back(std::move(p));
  }
  return out;
}

Tensor dihedral(const Tensor& x, int element) {
  require(x.rank() == 3 && x.dim(1) == x.dim(2), "dihedral needs a square [C,N,N] tensor");
  require(element >= 0 && element < 8, "dihedral element must be in [0, 8)");
  const int c = x.dim(0), n = x.dim(1);
  const std::size_t plane = static_cast<std::size_t>(n) * n;
  std::vector<double> cur(x.values().begin(), x.values().end());
  if (element >= 4)
    for (int ch = 0; ch < c; ++ch)
      for (int r = 0; r < n; ++r)
        for (int col = 0; col < n; ++col) cur[ch * plane + r * n + col] = x.values()[ch * plane + r * n + (n - 1 - col)];
  std::vector<double> rot(cur.size());
  for (int q = 0; q < element % 4; ++q) {
    for (int ch = 0; ch < c; ++ch)
      for (int r = 0; r < n; ++r)
        for (int col = 0; col < n; ++col) rot[ch * plane + r * n + col] = cur[ch * plane + col * n + (n - 1 - r)];
    std::swap(cur, rot);
  }
  return Tensor::from(x.shape(), std::move(cur));
}

std::string TrainLog::to_csv() const {
  std::string out = "epoch,train_mae,val_mae,seconds\n";
  char buf[128];
  for (const EpochRecord& e : epochs) {
    std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.4f\n", e.epoch, e.train_mae, e.val_mae, e.seconds);
    out += buf;
  }
  return out;
}

void Adam::step(ParameterSet& params, double lr) {
  ++t_;
  const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
  for (Parameter& p : params.items()) {
    if (p.frozen()) continue;
    const auto g = p.value.grad();
    if (g.empty()) continue;
    Moments& s = state_[p.name];
    if (s.m.empty()) {
      s.m.assign(g.size(), 0.0);
      s.v.assign(g.size(), 0.0);
    }
    auto w = p.value.values();
    for (std::size_t i = 0; i < g.size(); ++i) {
      s.m[i] = b1_ * s.m[i] + (1.0 - b1_) * g[i];
      s.v[i] = b2_ * s.v[i] + (1.0 - b2_) * g[i] * g[i];
      w[i] -= lr * (s.m[i] / c1) / (std::sqrt(s.v[i] / c2) + eps_);
    }
  }
}

double evaluate_mae(const ParameterSet& gen, const ModelConfig& cfg, const std::vector<Pair>& pairs) {
  require(!pairs.empty(), "evaluation set is empty");
  NoGradGuard no_grad;
  double total = 0.0;
  for (const Pair& p : pairs) total += mae_loss(rhm_forward(p.inputs, gen, cfg), p.target).item();
  return total / static_cast<double>(pairs.size());
}

namespace {

// Temporarily freezes every parameter of a set, restoring the previous flags on exit.
class FreezeScope {
 public:
  explicit FreezeScope(ParameterSet& ps) : ps_(ps) {
    for (const Parameter& p : ps.items()) flags_.push_back(p.frozen());
    ps.set_all_frozen(true);
  }
  ~FreezeScope() {
    for (std::size_t i = 0; i < flags_.size(); ++i) ps_.items()[i].set_frozen(flags_[i]);
  }

 private:
  ParameterSet& ps_;
  std::vector<bool> flags_;
};

bool finite(const Tensor& t) {
  return std::all_of(t.values().begin(), t.values().end(), [](double v) { return std::isfinite(v); });
}

}  // namespace

TrainLog train(ParameterSet& gen, ParameterSet& disc, const ModelConfig& model, const std::vector<Pair>& train_set,
               const std::vector<Pair>& val_set, const TrainConfig& cfg, const EpochCallback& on_epoch) {
  require(!train_set.empty(), "training split is empty");
  require(!val_set.empty(), "validation split is empty");
  require(cfg.max_epochs >= 1, "max_epochs must be at least 1");
  require(cfg.batch_size >= 1, "batch_size must be at least 1");
  require(cfg.lr_g >= 0.0 && cfg.lr_d >= 0.0 && cfg.lr_decay > 0.0, "learning rates must be non-negative");
  require(cfg.patience >= 0, "patience must be non-negative");
  if (cfg.adversarial) require(disc.size() > 0, "adversarial training needs a critic");

  std::vector<Pair> expanded;
  const std::vector<Pair>* pool = &train_set;
  if (cfg.augment == Augment::expand8x) {
    for (const Pair& p : train_set)
      for (int t = 0; t < 8; ++t) {
        Pair q;
        for (const Tensor& x : p.inputs) q.inputs.push_back(dihedral(x, t));
        q.target = dihedral(p.target, t);
        expanded.push_back(std::move(q));
      }
    pool = &expanded;
  }

  std::mt19937_64 rng(cfg.seed);
  Adam opt_g(cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
  Adam opt_d(cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
  std::vector<std::size_t> order(pool->size());
  std::iota(order.begin(), order.end(), 0);

  TrainLog log;
  ParameterSet best = gen.clone();
  log.best_val_mae = std::numeric_limits<double>::infinity();
  int since_best = 0;
  double lr_g = cfg.lr_g, lr_d = cfg.lr_d;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const ParameterSet gen_snapshot = gen.clone();
    const ParameterSet disc_snapshot = disc.clone();
    std::shuffle(order.begin(), order.end(), rng);

    double mae_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const double inv_b = 1.0 / static_cast<double>(stop - start);
      std::vector<Pair> batch;
      for (std::size_t i = start; i < stop; ++i) {
        const Pair& p = (*pool)[order[i]];
        if (cfg.augment == Augment::random_d4) {
          const int t = static_cast<int>(rng() % 8);
          Pair q;
          for (const Tensor& x : p.inputs) q.inputs.push_back(dihedral(x, t));
          q.target = dihedral(p.target, t);
          batch.push_back(std::move(q));
        } else {
          batch.push_back(p);
        }
      }

      // Generator step; the critic is held fixed so its weight gradients are not formed.
      std::vector<Tensor> preds;
      gen.zero_grad();
      {
        FreezeScope hold(disc);
        for (const Pair& p : batch) {
          const Tensor pred = rhm_forward(p.inputs, gen, model);
          const Tensor d_fake = cfg.adversarial ? disc_forward(pred, disc, model) : Tensor();
          const GeneratorLoss loss = generator_loss(pred, p.target, d_fake, cfg.weights);
          if (!finite(loss.total) || !finite(pred)) {
            gen.copy_values_from(gen_snapshot);
            disc.copy_values_from(disc_snapshot);
            throw NumericalError("non-finite generator loss in epoch " + std::to_string(epoch) +
                                 "; parameters restored to the start of the epoch");
          }
          mae_sum += loss.mae.item();
          if (loss.total.requires_grad()) scale(loss.total, inv_b).backward();
          preds.push_back(pred.detach());
        }
      }
      opt_g.step(gen, lr_g);

      if (cfg.adversarial) {
        disc.zero_grad();
        for (std::size_t i = 0; i < batch.size(); ++i) {
          const Tensor loss = discriminator_loss(disc_forward(preds[i], disc, model), disc_forward(batch[i].target, disc, model));
          if (!finite(loss)) {
            gen.copy_values_from(gen_snapshot);
            disc.copy_values_from(disc_snapshot);
            throw NumericalError("non-finite critic loss in epoch " + std::to_string(epoch) +
                                 "; parameters restored to the start of the epoch");
          }
          if (loss.requires_grad()) scale(loss, inv_b).backward();
        }
        opt_d.step(disc, lr_d);
      }
    }
    gen.zero_grad();
    disc.zero_grad();

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_mae = mae_sum / static_cast<double>(order.size());
    rec.val_mae = evaluate_mae(gen, model, val_set);
    if (!std::isfinite(rec.val_mae)) {
      gen.copy_values_from(gen_snapshot);
      disc.copy_values_from(disc_snapshot);
      throw NumericalError("non-finite validation MAE in epoch " + std::to_string(epoch) +
                           "; parameters restored to the start of the epoch");
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    log.epochs.push_back(rec);

    if (rec.val_mae < log.best_val_mae) {
      log.best_val_mae = rec.val_mae;
      log.best_epoch = epoch;
      best.copy_values_from(gen);
      since_best = 0;
    } else {
      ++since_best;
    }
    lr_g *= cfg.lr_decay;
    lr_d *= cfg.lr_decay;

    if (on_epoch && !on_epoch(rec)) {
      log.stopped_by_callback = true;
      break;
    }
    if (cfg.patience > 0 && since_best >= cfg.patience) {
      log.early_stopped = true;
      gen.copy_values_from(best);
      break;
    }
  }
  return log;
}

void check_compatible(const ParameterSet& params, const ModelConfig& model) {
  const ParameterSet ref = init_rhm(model, 0);
  require(params.size() == ref.size(), "pretrained parameters do not match the model configuration (" +
                                           std::to_string(params.size()) + " tensors, expected " +
                                           std::to_string(ref.size()) + ")");
  for (const Parameter& r : ref.items()) {
    require(params.contains(r.name), "pretrained parameters lack " + r.name);
    const Parameter& p = params.at(r.name);
    require(p.tag == r.tag, "block tag mismatch for " + r.name + ": '" + p.tag + "' vs '" + r.tag + "'");
    require(p.value.shape() == r.value.shape(), "shape mismatch for " + r.name + ": " + shape_str(p.value.shape()) +
                                                    " vs " + shape_str(r.value.shape()));
  }
}

TransferResult transfer(const ParameterSet& pretrained_gen, const ParameterSet& pretrained_disc, bool freeze_backbone,
                        const ModelConfig& model, const std::vector<Pair>& train_set, const std::vector<Pair>& val_set,
                        const TrainConfig& cfg, const EpochCallback& on_epoch) {
  check_compatible(pretrained_gen, model);
  TransferResult r;
  r.gen = pretrained_gen.clone();
  r.gen.set_all_frozen(false);
  if (freeze_backbone) r.gen.set_frozen_by_tag("rnn_", true);
  r.disc = pretrained_disc.size() > 0 ? pretrained_disc.clone() : init_discriminator(model, cfg.seed ^ 0xd15cull);
  r.disc.set_all_frozen(false);
  r.summary = count_parameters(r.gen);
  r.log = train(r.gen, r.disc, model, train_set, val_set, cfg, on_epoch);
  return r;
}

}  // namespace holo::nn
