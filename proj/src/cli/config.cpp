#include "holo/cli/config.hpp"

#include <fstream>
#include <set>

#include "holo/error.hpp"

namespace holo::cli {

using nlohmann::json;

namespace {

// Reads known keys of one JSON object and rejects the rest.
class Fields {
 public:
  Fields(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j.is_object()) throw InputError(where_ + ": expected a JSON object");
  }

  template <class T>
  void get(const char* key, T& dst) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      dst = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw InputError(where_ + "." + key + ": " + e.what());
    }
  }

  const json* sub(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  ~Fields() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw InputError(where_ + ": unknown key '" + it.key() + "'");
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

}  // namespace

OpticalConfig optical_from_json(const json& j, OpticalConfig c) {
  {
    Fields f(j, "optical");
    f.get("wavelength_um", c.wavelength_um);
    f.get("pixel_pitch_um", c.pixel_pitch_um);
    f.get("z1_um", c.z1_um);
    f.get("z2_min_um", c.z2_min_um);
    f.get("z2_max_um", c.z2_max_um);
    f.get("zbar2_um", c.zbar2_um);
  }
  validate(c);
  return c;
}

json to_json(const OpticalConfig& c) {
  return {{"wavelength_um", c.wavelength_um}, {"pixel_pitch_um", c.pixel_pitch_um}, {"z1_um", c.z1_um},
          {"z2_min_um", c.z2_min_um},         {"z2_max_um", c.z2_max_um},           {"zbar2_um", c.zbar2_um}};
}

sim::SceneSpec scene_from_json(const json& j, sim::SceneSpec s) {
  Fields f(j, "scene");
  std::string kind = sim::to_string(s.kind);
  f.get("kind", kind);
  s.kind = sim::scene_kind_from_string(kind);
  f.get("amp_min", s.amp_min);
  f.get("amp_max", s.amp_max);
  f.get("phase_max", s.phase_max);
  f.get("feature_px", s.feature_px);
  f.get("seed", s.seed);
  return s;
}

json to_json(const sim::SceneSpec& s) {
  return {{"kind", sim::to_string(s.kind)}, {"amp_min", s.amp_min},       {"amp_max", s.amp_max},
          {"phase_max", s.phase_max},       {"feature_px", s.feature_px}, {"seed", s.seed}};
}

namespace {

MhprConfig mhpr_from_json(const json& j, MhprConfig c) {
  Fields f(j, "mhpr");
  f.get("iterations", c.iterations);
  f.get("amplitude_weight", c.amplitude_weight);
  return c;
}

json to_json(const MhprConfig& c) {
  return {{"iterations", c.iterations}, {"amplitude_weight", c.amplitude_weight}};
}

}  // namespace

sim::DatasetSpec dataset_from_json(const json& j, sim::DatasetSpec s) {
  Fields f(j, "dataset");
  if (const json* p = f.sub("scene")) s.scene = scene_from_json(*p, s.scene);
  if (const json* p = f.sub("optical")) s.optical = optical_from_json(*p, s.optical);
  if (const json* p = f.sub("mhpr")) s.mhpr = mhpr_from_json(*p, s.mhpr);
  f.get("rows", s.rows);
  f.get("cols", s.cols);
  f.get("target_z2", s.target_z2);
  f.get("input_z2", s.input_z2);
  f.get("noise_sigma", s.noise_sigma);
  f.get("bit_depth", s.bit_depth);
  f.get("seed", s.seed);
  return s;
}

json to_json(const sim::DatasetSpec& s) {
  return {{"scene", to_json(s.scene)}, {"optical", to_json(s.optical)},   {"mhpr", to_json(s.mhpr)},
          {"rows", s.rows},            {"cols", s.cols},                  {"target_z2", s.target_z2},
          {"input_z2", s.input_z2},    {"noise_sigma", s.noise_sigma},    {"bit_depth", s.bit_depth},
          {"seed", s.seed}};
}

sim::AcquisitionSpec acquisition_from_json(const json& j, sim::AcquisitionSpec a) {
  Fields f(j, "acquisition");
  if (const json* p = f.sub("optical")) a.optical = optical_from_json(*p, a.optical);
  f.get("z2_list", a.z2_list);
  f.get("noise_sigma", a.noise_sigma);
  f.get("shot_scale", a.shot_scale);
  f.get("psr_pattern", a.psr_pattern);
  f.get("bit_depth", a.bit_depth);
  f.get("full_scale", a.full_scale);
  f.get("seed", a.seed);
  return a;
}

json to_json(const sim::AcquisitionSpec& a) {
  return {{"optical", to_json(a.optical)}, {"z2_list", a.z2_list},         {"noise_sigma", a.noise_sigma},
          {"shot_scale", a.shot_scale},    {"psr_pattern", a.psr_pattern}, {"bit_depth", a.bit_depth},
          {"full_scale", a.full_scale},    {"seed", a.seed}};
}

nn::ModelConfig model_from_json(const json& j, nn::ModelConfig m) {
  Fields f(j, "model");
  f.get("base_channels", m.base_channels);
  f.get("in_channels", m.in_channels);
  f.get("out_channels", m.out_channels);
  f.get("leaky_slope", m.leaky_slope);
  require(m.base_channels >= 1, "model.base_channels must be positive");
  return m;
}

json to_json(const nn::ModelConfig& m) {
  return {{"base_channels", m.base_channels},
          {"in_channels", m.in_channels},
          {"out_channels", m.out_channels},
          {"leaky_slope", m.leaky_slope}};
}

nn::TrainConfig train_from_json(const json& j, nn::TrainConfig t) {
  Fields f(j, "train");
  f.get("lr_g", t.lr_g);
  f.get("lr_d", t.lr_d);
  f.get("lr_decay", t.lr_decay);
  f.get("adam_beta1", t.adam_beta1);
  f.get("adam_beta2", t.adam_beta2);
  f.get("adam_eps", t.adam_eps);
  f.get("max_epochs", t.max_epochs);
  f.get("patience", t.patience);
  f.get("batch_size", t.batch_size);
  f.get("adversarial", t.adversarial);
  f.get("seed", t.seed);
  std::string aug = nn::to_string(t.augment);
  f.get("augment", aug);
  t.augment = nn::augment_from_string(aug);
  if (const json* w = f.sub("weights")) {
    Fields g(*w, "train.weights");
    g.get("alpha", t.weights.alpha);
    g.get("beta", t.weights.beta);
    g.get("gamma", t.weights.gamma);
  }
  return t;
}

json to_json(const nn::TrainConfig& t) {
  return {{"lr_g", t.lr_g},
          {"lr_d", t.lr_d},
          {"lr_decay", t.lr_decay},
          {"adam_beta1", t.adam_beta1},
          {"adam_beta2", t.adam_beta2},
          {"adam_eps", t.adam_eps},
          {"max_epochs", t.max_epochs},
          {"patience", t.patience},
          {"batch_size", t.batch_size},
          {"adversarial", t.adversarial},
          {"seed", t.seed},
          {"augment", nn::to_string(t.augment)},
          {"weights", {{"alpha", t.weights.alpha}, {"beta", t.weights.beta}, {"gamma", t.weights.gamma}}}};
}

nn::ExperimentConfig experiment_from_json(const json& j) {
  nn::ExperimentConfig e;
  e.pretrain = nn::TrainConfig::pretrain_defaults();
  e.scratch = nn::TrainConfig::pretrain_defaults();
  e.transfer = nn::TrainConfig::transfer_defaults();
  Fields f(j, "experiment");
  if (const json* p = f.sub("model")) e.model = model_from_json(*p, e.model);
  if (const json* p = f.sub("source")) e.source = dataset_from_json(*p, e.source);
  if (const json* p = f.sub("target")) e.target = dataset_from_json(*p, e.target);
  if (const json* p = f.sub("pretrain")) e.pretrain = train_from_json(*p, e.pretrain);
  if (const json* p = f.sub("scratch")) e.scratch = train_from_json(*p, e.scratch);
  if (const json* p = f.sub("transfer")) e.transfer = train_from_json(*p, e.transfer);
  f.get("pretrain_fovs", e.pretrain_fovs);
  f.get("pretrain_m", e.pretrain_m);
  f.get("val_fovs", e.val_fovs);
  f.get("test_fovs", e.test_fovs);
  f.get("m_t", e.m_t);
  f.get("nt_ratio", e.nt_ratio);
  f.get("seeds", e.seeds);
  f.get("stop_at_threshold", e.stop_at_threshold);
  std::vector<std::string> modes;
  for (nn::Mode m : e.modes) modes.push_back(nn::to_string(m));
  f.get("modes", modes);
  e.modes.clear();
  for (const auto& m : modes) e.modes.push_back(nn::mode_from_string(m));
  return e;
}

json to_json(const nn::ExperimentConfig& e) {
  std::vector<std::string> modes;
  for (nn::Mode m : e.modes) modes.push_back(nn::to_string(m));
  return {{"model", to_json(e.model)},
          {"source", to_json(e.source)},
          {"target", to_json(e.target)},
          {"pretrain", to_json(e.pretrain)},
          {"scratch", to_json(e.scratch)},
          {"transfer", to_json(e.transfer)},
          {"pretrain_fovs", e.pretrain_fovs},
          {"pretrain_m", e.pretrain_m},
          {"val_fovs", e.val_fovs},
          {"test_fovs", e.test_fovs},
          {"m_t", e.m_t},
          {"nt_ratio", e.nt_ratio},
          {"seeds", e.seeds},
          {"stop_at_threshold", e.stop_at_threshold},
          {"modes", modes}};
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw InputError("malformed JSON in " + path + ": " + e.what());
  }
}

}  // namespace holo::cli
