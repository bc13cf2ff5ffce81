#include "holo/nn/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>

#include "holo/error.hpp"
#include "holo/metrics.hpp"

namespace holo::nn {

std::string to_string(Mode m) {
  switch (m) {
    case Mode::scratch: return "scratch";
    case Mode::transfer_frozen: return "transfer_frozen";
    case Mode::transfer_full: return "transfer_full";
  }
  return "scratch";
}

Mode mode_from_string(const std::string& s) {
  if (s == "scratch") return Mode::scratch;
  if (s == "transfer_frozen") return Mode::transfer_frozen;
  if (s == "transfer_full") return Mode::transfer_full;
  throw InputError("unknown mode '" + s + "' (expected scratch, transfer_frozen or transfer_full)");
}

int first_epoch_at_or_below(const TrainLog& log, double threshold) {
  for (const EpochRecord& e : log.epochs)
    if (e.val_mae <= threshold) return e.epoch;
  return -1;
}

namespace {

struct CellData {
  std::vector<Pair> train, val;
  std::vector<sim::Sample> test;
};

CellData make_cell_data(const ExperimentConfig& cfg, int m_t, int n_train, std::uint64_t seed) {
  sim::DatasetSpec spec = cfg.target;
  spec.seed = sim::splitmix64(cfg.target.seed ^ sim::splitmix64(seed + 0x5eedull));
  CellData d;
  d.train = to_pairs(sim::make_dataset(n_train, m_t, spec, sim::Split::train));
  d.val = to_pairs(sim::make_dataset(cfg.val_fovs, m_t, spec, sim::Split::val));
  d.test = sim::make_dataset(cfg.test_fovs, m_t, spec, sim::Split::test);
  return d;
}

void score_test(CellResult& r, const ParameterSet& gen, const ModelConfig& model, const std::vector<sim::Sample>& test) {
  double rm = 0.0, ec = 0.0;
  for (const sim::Sample& s : test) {
    const ComplexField out = rhm_forward(s.inputs, gen, model);
    rm += rmse(out.amplitude(), s.target.amplitude());
    ec += ecc(s.target, out);
  }
  r.test_rmse = rm / static_cast<double>(test.size());
  r.test_ecc = ec / static_cast<double>(test.size());
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, const Progress& progress,
                                const ParameterSet* pretrained_gen, const ParameterSet* pretrained_disc) {
  require(!cfg.modes.empty() && !cfg.m_t.empty() && !cfg.nt_ratio.empty() && !cfg.seeds.empty(),
          "experiment grid has an empty axis");
  for (int m : cfg.m_t) require(m >= 1, "M_t must be at least 1");
  for (double r : cfg.nt_ratio) require(r > 0.0, "N_t ratios must be positive");
  require(cfg.val_fovs >= 1 && cfg.test_fovs >= 1, "validation and test splits need at least one FOV");
  auto say = [&](const std::string& s) {
    if (progress) progress(s);
  };

  const bool needs_pretrain = std::any_of(cfg.modes.begin(), cfg.modes.end(), [](Mode m) { return m != Mode::scratch; });
  ExperimentResult result;
  ParameterSet base_gen, base_disc;
  if (needs_pretrain) {
    if (pretrained_gen) {
      check_compatible(*pretrained_gen, cfg.model);
      base_gen = pretrained_gen->clone();
      if (pretrained_disc) base_disc = pretrained_disc->clone();
    } else {
      require(cfg.pretrain_fovs >= 1 && cfg.pretrain_m >= 1, "pretraining needs FOVs and inputs");
      say("pretraining on " + std::to_string(cfg.pretrain_fovs) + " source FOVs, M=" + std::to_string(cfg.pretrain_m));
      const auto train_pairs = to_pairs(sim::make_dataset(cfg.pretrain_fovs, cfg.pretrain_m, cfg.source, sim::Split::train));
      const auto val_pairs = to_pairs(sim::make_dataset(cfg.val_fovs, cfg.pretrain_m, cfg.source, sim::Split::val));
      base_gen = init_rhm(cfg.model, sim::splitmix64(cfg.pretrain.seed ^ 0x9e11ull));
      base_disc = init_discriminator(cfg.model, sim::splitmix64(cfg.pretrain.seed ^ 0xd15cull));
      result.pretrain_log = train(base_gen, base_disc, cfg.model, train_pairs, val_pairs, cfg.pretrain);
      say("pretraining done: best val MAE " + std::to_string(result.pretrain_log.best_val_mae));
    }
  }

  std::vector<Mode> order;
  for (Mode m : {Mode::scratch, Mode::transfer_frozen, Mode::transfer_full})
    if (std::find(cfg.modes.begin(), cfg.modes.end(), m) != cfg.modes.end()) order.push_back(m);

  for (int m_t : cfg.m_t)
    for (double ratio : cfg.nt_ratio)
      for (std::uint64_t seed : cfg.seeds) {
        const int n_train = std::max(1, static_cast<int>(std::lround(ratio * cfg.pretrain_fovs)));
        std::optional<CellData> data;
        std::string data_error;
        try {
          data = make_cell_data(cfg, m_t, n_train, seed);
        } catch (const std::exception& e) {
          data_error = e.what();
        }
        double threshold = std::numeric_limits<double>::quiet_NaN();
        for (Mode mode : order) {
          CellResult r;
          r.mode = mode;
          r.m_t = m_t;
          r.nt_ratio = ratio;
          r.n_train = n_train;
          r.seed = seed;
          r.threshold = threshold;
          say("cell " + to_string(mode) + " M_t=" + std::to_string(m_t) + " N_t=" + std::to_string(n_train) +
              " seed=" + std::to_string(seed));
          if (!data) {
            r.error = data_error;
            result.cells.push_back(std::move(r));
            continue;
          }
          const auto t0 = std::chrono::steady_clock::now();
          try {
            ParameterSet gen, disc;
            if (mode == Mode::scratch) {
              TrainConfig tc = cfg.scratch;
              tc.seed ^= sim::splitmix64(seed);
              gen = init_rhm(cfg.model, sim::splitmix64(seed ^ 0x9e11ull));
              disc = init_discriminator(cfg.model, sim::splitmix64(seed ^ 0xd15cull));
              r.log = train(gen, disc, cfg.model, data->train, data->val, tc);
              r.threshold = threshold = r.log.epochs.back().val_mae;
            } else {
              TrainConfig tc = cfg.transfer;
              tc.seed ^= sim::splitmix64(seed);
              EpochCallback stop;
              if (cfg.stop_at_threshold && std::isfinite(threshold))
                stop = [threshold](const EpochRecord& e) { return e.val_mae > threshold; };
              TransferResult tr = nn::transfer(base_gen, base_disc, mode == Mode::transfer_frozen, cfg.model,
                                               data->train, data->val, tc, stop);
              gen = std::move(tr.gen);
              r.log = std::move(tr.log);
            }
            const ParamSummary ps = count_parameters(gen);
            r.trainable_params = ps.trainable;
            r.total_params = ps.total;
            r.epochs_run = static_cast<int>(r.log.epochs.size());
            r.final_val_mae = r.log.epochs.back().val_mae;
            if (std::isfinite(r.threshold)) r.epochs_to_threshold = first_epoch_at_or_below(r.log, r.threshold);
            double train_seconds = 0.0;
            for (const EpochRecord& e : r.log.epochs) train_seconds += e.seconds;
            r.seconds_per_epoch = train_seconds / r.epochs_run;
            score_test(r, gen, cfg.model, data->test);
            r.ok = true;
          } catch (const std::exception& e) {
            r.error = e.what();
          }
          r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
          result.cells.push_back(std::move(r));
        }
      }
  return result;
}

std::string results_csv(const std::vector<CellResult>& cells) {
  std::string out =
      "mode,m_t,nt_ratio,n_train,seed,status,epochs_run,final_val_mae,test_rmse,test_ecc,threshold,"
      "epochs_to_threshold,seconds,seconds_per_epoch,trainable_params,total_params,error\n";
  char buf[512];
  for (const CellResult& c : cells) {
    std::string err = c.error;
    for (char& ch : err)
      if (ch == ',' || ch == '\n' || ch == '"') ch = ';';
    std::snprintf(buf, sizeof(buf), "%s,%d,%.6g,%d,%llu,%s,%d,%.9g,%.9g,%.9g,%.9g,%d,%.4f,%.4f,%zu,%zu,",
                  to_string(c.mode).c_str(), c.m_t, c.nt_ratio, c.n_train, static_cast<unsigned long long>(c.seed),
                  c.ok ? "ok" : "failed", c.epochs_run, c.final_val_mae, c.test_rmse, c.test_ecc, c.threshold,
                  c.epochs_to_threshold, c.seconds, c.seconds_per_epoch, c.trainable_params, c.total_params);
    out += buf + err + "\n";
  }
  return out;
}

}  // namespace holo::nn
