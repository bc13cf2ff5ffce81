#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "holo/nn/train.hpp"
#include "holo/simulator.hpp"

namespace holo::nn {

enum class Mode { scratch, transfer_frozen, transfer_full };
std::string to_string(Mode m);
Mode mode_from_string(const std::string& s);

/// Pretrain once on a source scene family, then train every (mode, M_t, N_t ratio, seed) cell
/// on the target family.
struct ExperimentConfig {
  ModelConfig model;
  sim::DatasetSpec source;  // family A
  sim::DatasetSpec target;  // family B
  int pretrain_fovs = 32;
  int pretrain_m = 5;
  int val_fovs = 4;
  int test_fovs = 4;
  TrainConfig pretrain;
  TrainConfig scratch;
  TrainConfig transfer;

  std::vector<Mode> modes{Mode::scratch, Mode::transfer_frozen, Mode::transfer_full};
  std::vector<int> m_t{2};
  /// Target training FOVs = max(1, round(ratio * pretrain_fovs)).
  std::vector<double> nt_ratio{0.25};
  std::vector<std::uint64_t> seeds{0};

  /// Transfer cells stop as soon as they reach the matching scratch cell's final validation MAE.
  bool stop_at_threshold = false;
};

struct CellResult {
  Mode mode = Mode::scratch;
  int m_t = 0;
  double nt_ratio = 0.0;
  int n_train = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  int epochs_run = 0;
  double final_val_mae = 0.0;
  double test_rmse = 0.0;
  double test_ecc = 0.0;
  /// Scratch final validation MAE of the same (M_t, ratio, seed); NaN without a scratch cell.
  double threshold = 0.0;
  /// First epoch with val MAE <= threshold; -1 if never.
  int epochs_to_threshold = -1;
  double seconds = 0.0;
  double seconds_per_epoch = 0.0;
  std::size_t trainable_params = 0;
  std::size_t total_params = 0;
  TrainLog log;
};

struct ExperimentResult {
  TrainLog pretrain_log;
  std::vector<CellResult> cells;
};

using Progress = std::function<void(const std::string&)>;

/// Pretrains (or starts from `pretrained_gen` / `pretrained_disc` when given), then runs the
/// grid. Scratch cells run first so transfer cells can measure epochs to the scratch threshold.
/// A failing cell is recorded and the grid continues.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const Progress& progress = {},
                                const ParameterSet* pretrained_gen = nullptr,
                                const ParameterSet* pretrained_disc = nullptr);

int first_epoch_at_or_below(const TrainLog& log, double threshold);

/// mode,m_t,nt_ratio,n_train,seed,status,epochs_run,final_val_mae,test_rmse,test_ecc,threshold,
/// epochs_to_threshold,seconds,seconds_per_epoch,trainable_params,total_params,error
std::string results_csv(const std::vector<CellResult>& cells);

}  // namespace holo::nn
