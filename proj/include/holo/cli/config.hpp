#pragma once

#include <string>

#include "holo/nn/experiment.hpp"
#include "holo/simulator.hpp"
#include "json.hpp"

namespace holo::cli {

// JSON <-> settings. Missing keys keep the defaults of `base`; unknown keys are rejected.

OpticalConfig optical_from_json(const nlohmann::json& j, OpticalConfig base = {});
nlohmann::json to_json(const OpticalConfig& c);

sim::SceneSpec scene_from_json(const nlohmann::json& j, sim::SceneSpec base = {});
nlohmann::json to_json(const sim::SceneSpec& s);

sim::DatasetSpec dataset_from_json(const nlohmann::json& j, sim::DatasetSpec base = {});
nlohmann::json to_json(const sim::DatasetSpec& s);

sim::AcquisitionSpec acquisition_from_json(const nlohmann::json& j, sim::AcquisitionSpec base = {});
nlohmann::json to_json(const sim::AcquisitionSpec& a);

nn::ModelConfig model_from_json(const nlohmann::json& j, nn::ModelConfig base = {});
nlohmann::json to_json(const nn::ModelConfig& m);

nn::TrainConfig train_from_json(const nlohmann::json& j, nn::TrainConfig base);
nlohmann::json to_json(const nn::TrainConfig& t);

nn::ExperimentConfig experiment_from_json(const nlohmann::json& j);
nlohmann::json to_json(const nn::ExperimentConfig& e);

nlohmann::json read_json_file(const std::string& path);

}  // namespace holo::cli
