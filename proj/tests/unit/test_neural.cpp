#include "doctest.h"

#include <cmath>
#include <map>

#include "gradcheck.hpp"
#include "param_oracle.hpp"
#include "holo/nn/checkpoint.hpp"
#include "holo/nn/loss.hpp"
#include "holo/nn/model.hpp"
#include "holo/nn/ops.hpp"
#include "holo/nn/train.hpp"
#include "json.hpp"
#include "support.hpp"

using namespace holo;
using namespace holo::nn;
using holo::test::random_tensor;

namespace {

std::vector<Pair> random_pairs(int n, int m, int side, std::uint64_t seed) {
  std::vector<Pair> out;
  for (int i = 0; i < n; ++i) {
    Pair p;
    for (int j = 0; j < m; ++j) p.inputs.push_back(random_tensor({2, side, side}, seed + 10 * i + j, -1, 1, false));
    p.target = random_tensor({2, side, side}, seed + 10 * i + 9, 0.1, 1.0, false);
    out.push_back(std::move(p));
  }
  return out;
}

bool same_values(const ParameterSet& a, const ParameterSet& b, const std::string& tag_prefix = "") {
  for (const Parameter& p : a.items()) {
    if (p.tag.rfind(tag_prefix, 0) != 0) continue;
    auto x = p.value.values();
    auto y = b.get(p.name).values();
    if (!std::equal(x.begin(), x.end(), y.begin(), y.end())) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("parameter counts match the closed-form oracle") {
  ParameterSet one;
  one.add("conv.w", "head", {4, 2, 3, 3}, std::vector<double>(72, 0.0));
  one.add("conv.b", "head", {4}, std::vector<double>(4, 0.0));
  CHECK(count_parameters(one).total == 76);

  for (int c : {4, 8}) {
    ModelConfig cfg;
    cfg.base_channels = c;
    ParamSummary s = count_parameters(init_rhm(cfg, 1));
    auto oracle = test::analytic_block_counts(c);
    std::size_t total = 0, rnn = 0;
    for (auto& [block, n] : oracle) {
      CHECK_MESSAGE(s.per_block[block] == n, block);
      total += n;
      if (block.rfind("rnn_", 0) == 0) rnn += n;
    }
    CHECK(s.per_block.size() == oracle.size());
    CHECK(s.total == total);
    CHECK(s.trainable == total);

    ParameterSet frozen = init_rhm(cfg, 1);
    frozen.set_frozen_by_tag("rnn_", true);
    ParamSummary f = count_parameters(frozen);
    CHECK(f.trainable == total - rnn);
    CHECK(f.frozen == rnn);
    CHECK(f.trainable + f.frozen == f.total);
  }
}

TEST_CASE("rhm_forward shapes and order sensitivity") {
  ModelConfig cfg;
  cfg.base_channels = 4;
  ParameterSet ps = init_rhm(cfg, 3);
  NoGradGuard ng;
  Tensor a = random_tensor({2, 64, 64}, 1, -1, 1, false), b = random_tensor({2, 64, 64}, 2, -1, 1, false);
  Tensor ab = rhm_forward({a, b}, ps, cfg);
  CHECK(ab.shape() == Shape{2, 64, 64});
  CHECK(rhm_forward({a}, ps, cfg).shape() == Shape{2, 64, 64});
  Tensor ba = rhm_forward({b, a}, ps, cfg);
  double diff = 0.0;
  for (std::size_t i = 0; i < ab.numel(); ++i) diff = std::max(diff, std::abs(ab.values()[i] - ba.values()[i]));
  CHECK(diff > 1e-9);
  CHECK_THROWS_AS(rhm_forward({random_tensor({2, 40, 40}, 3, -1, 1, false)}, ps, cfg), InputError);
  CHECK_THROWS_AS(rhm_forward(std::vector<Tensor>{}, ps, cfg), InputError);
}

TEST_CASE("loss examples") {
  Tensor y = random_tensor({2, 32, 32}, 4, 0.1, 1.0, false);
  GeneratorLoss zero = generator_loss(y, y, Tensor::scalar(1.0));
  CHECK(zero.mae.item() == 0.0);
  CHECK(std::abs(zero.ssim.item()) < 1e-12);
  CHECK(zero.adv.item() == 0.0);
  CHECK(std::abs(zero.total.item()) < 1e-12);

  GeneratorLoss fooled = generator_loss(y, y, Tensor::scalar(0.0));
  CHECK(fooled.adv.item() == 1.0);
  CHECK(discriminator_loss(Tensor::scalar(0.0), Tensor::scalar(1.0)).item() == 0.0);
  CHECK(discriminator_loss(Tensor::scalar(1.0), Tensor::scalar(0.0)).item() == 1.0);

  Tensor p = random_tensor({2, 32, 32}, 5, 0.1, 1.0, false);
  LossWeights w;
  CHECK(w.alpha == 3.0);
  CHECK(w.beta == 1.0);
  CHECK(w.gamma == 0.3);
  GeneratorLoss g = generator_loss(p, y, Tensor::scalar(0.4), w);
  CHECK(g.total.item() == 3.0 * g.mae.item() + 1.0 * g.ssim.item() + 0.3 * g.adv.item());
  CHECK(g.adv.item() == doctest::Approx(0.36));
  CHECK(g.mae.item() > 0.0);
  CHECK_THROWS_AS(generator_loss(p, random_tensor({2, 16, 16}, 6), Tensor()), InputError);
}

TEST_CASE("full generator loss gradient on a two-pair batch at 32x32") {
  ModelConfig cfg;
  cfg.base_channels = 4;
  ParameterSet gen = init_rhm(cfg, 7);
  ParameterSet disc = init_discriminator(cfg, 8);
  auto pairs = random_pairs(2, 2, 32, 50);
  auto f = [&] {
    Tensor total;
    for (const Pair& p : pairs) {
      Tensor pred = rhm_forward(p.inputs, gen, cfg);
      Tensor l = generator_loss(pred, p.target, disc_forward(pred, disc, cfg)).total;
      total = total.defined() ? add(total, l) : l;
    }
    return total;
  };
  std::vector<Tensor> wrt;
  for (const char* name : {"down_conv_1.conv_a.w", "rnn_2.gru1.z.w", "rnn_4.proj.b", "up_conv_1.refine.w", "head.conv.w"})
    wrt.push_back(gen.get(name));
  wrt.push_back(disc.items().front().value);
  CHECK(test::gradcheck(f, wrt, 12, 1e-6) < 1e-3);
}

TEST_CASE("zero learning rates leave every parameter bit-identical") {
  ModelConfig cfg;
  cfg.base_channels = 4;
  ParameterSet gen = init_rhm(cfg, 9), disc = init_discriminator(cfg, 10);
  const ParameterSet g0 = gen.clone(), d0 = disc.clone();
  TrainConfig tc;
  tc.lr_g = tc.lr_d = 0.0;
  tc.max_epochs = 1;
  auto pairs = random_pairs(2, 2, 32, 60);
  train(gen, disc, cfg, pairs, pairs, tc);
  CHECK(same_values(gen, g0));
  CHECK(same_values(disc, d0));
}

TEST_CASE("one epoch on two pairs logs one finite row") {
  ModelConfig cfg;
  cfg.base_channels = 4;
  ParameterSet gen = init_rhm(cfg, 11), disc = init_discriminator(cfg, 12);
  TrainConfig tc;
  tc.max_epochs = 1;
  auto pairs = random_pairs(2, 2, 32, 70);
  TrainLog log = train(gen, disc, cfg, pairs, pairs, tc);
  REQUIRE(log.epochs.size() == 1);
  CHECK(std::isfinite(log.epochs[0].train_mae));
  CHECK(std::isfinite(log.epochs[0].val_mae));
  CHECK(log.to_csv().rfind("epoch,train_mae,val_mae,seconds\n1,", 0) == 0);
  CHECK_THROWS_AS(train(gen, disc, cfg, {}, pairs, tc), InputError);
}

TEST_CASE("training is deterministic for a fixed seed") {
  ModelConfig cfg;
  cfg.base_channels = 4;
  auto pairs = random_pairs(3, 2, 32, 80);
  TrainConfig tc = TrainConfig::transfer_defaults();
  tc.max_epochs = 2;
  tc.augment = Augment::random_d4;
  tc.seed = 5;
  auto run = [&] {
    ParameterSet gen = init_rhm(cfg, 13), disc = init_discriminator(cfg, 14);
    TrainLog log = train(gen, disc, cfg, pairs, pairs, tc);
    return std::make_pair(log, gen);
  };
  auto [la, ga] = run();
  auto [lb, gb] = run();
  for (std::size_t i = 0; i < la.epochs.size(); ++i) {
    CHECK(la.epochs[i].train_mae == lb.epochs[i].train_mae);
    CHECK(la.epochs[i].val_mae == lb.epochs[i].val_mae);
  }
  CHECK(same_values(ga, gb));
}

TEST_CASE("frozen backbone stays bit-identical; full transfer trains everything") {
  ModelConfig cfg;
  cfg.base_channels = 4;
  const ParameterSet pre = init_rhm(cfg, 15), pre_disc = init_discriminator(cfg, 16);
  auto pairs = random_pairs(2, 2, 32, 90);
  TrainConfig tc = TrainConfig::transfer_defaults();
  tc.max_epochs = 3;

  TransferResult frozen = transfer(pre, pre_disc, true, cfg, pairs, pairs, tc);
  CHECK(same_values(frozen.gen, pre, "rnn_"));
  CHECK_FALSE(same_values(frozen.gen, pre, "up_conv_"));
  for (const Parameter& p : frozen.gen.items()) CHECK(p.frozen() == (p.tag.rfind("rnn_", 0) == 0));
  CHECK(frozen.summary.trainable < frozen.summary.total);

  TransferResult full = transfer(pre, pre_disc, false, cfg, pairs, pairs, tc);
  CHECK(full.summary.trainable == full.summary.total);
  CHECK_FALSE(same_values(full.gen, pre, "rnn_"));

  ParameterSet wrong = init_rhm(ModelConfig{}, 1);
  CHECK_THROWS_AS(transfer(wrong, pre_disc, true, cfg, pairs, pairs, tc), InputError);
  ParameterSet retagged = pre.clone();
  retagged.items()[0].tag = "head";
  CHECK_THROWS_AS(check_compatible(retagged, cfg), InputError);
}

TEST_CASE("Adam skips frozen parameters") {
  ParameterSet ps;
  ps.add("a", "rnn_1", {3}, {1.0, 2.0, 3.0});
  ps.add("b", "head", {3}, {1.0, 2.0, 3.0});
  ps.at("a").set_frozen(true);
  Adam opt(0.9, 0.999, 1e-8);
  for (int i = 0; i < 5; ++i) {
    ps.zero_grad();
    sum(square(add(ps.get("a"), ps.get("b")))).backward();
    opt.step(ps, 0.1);
  }
  CHECK(ps.get("a").values()[2] == 3.0);
  CHECK(ps.get("b").values()[2] < 3.0);
}

TEST_CASE("checkpoints round-trip at float32 precision") {
  auto dir = test::scratch_dir("ckpt");
  ModelConfig cfg;
  cfg.base_channels = 4;
  Checkpoint ck{cfg, init_rhm(cfg, 17), init_discriminator(cfg, 18), R"({"note":"x"})"};
  ck.gen.set_frozen_by_tag("rnn_", true);
  save_checkpoint(dir, ck);
  Checkpoint back = load_checkpoint(dir);
  CHECK(back.model.base_channels == 4);
  REQUIRE(back.gen.size() == ck.gen.size());
  REQUIRE(back.disc.size() == ck.disc.size());
  for (const Parameter& p : ck.gen.items()) {
    const Parameter& q = back.gen.at(p.name);
    CHECK(q.tag == p.tag);
    CHECK(q.frozen() == p.frozen());
    CHECK(q.value.shape() == p.value.shape());
    for (std::size_t i = 0; i < p.value.numel(); ++i)
      CHECK(q.value.values()[i] == static_cast<double>(static_cast<float>(p.value.values()[i])));
  }
  CHECK(nlohmann::json::parse(back.extra_json).at("note") == "x");

  std::filesystem::resize_file(dir / "params.bin", std::filesystem::file_size(dir / "params.bin") - 3);
  CHECK_THROWS_AS(load_checkpoint(dir), InputError);
  CHECK_THROWS_AS(load_checkpoint(dir / "missing"), InputError);
}
