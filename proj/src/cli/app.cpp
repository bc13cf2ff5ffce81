#include "holo/cli/app.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "holo/autofocus.hpp"
#include "holo/cli/config.hpp"
#include "holo/cli/manifest.hpp"
#include "holo/error.hpp"
#include "holo/io.hpp"
#include "holo/metrics.hpp"
#include "holo/nn/checkpoint.hpp"
#include "holo/nn/experiment.hpp"
#include "holo/phase_retrieval.hpp"
#include "holo/superres.hpp"

namespace holo::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Context {
  std::ostream& out;
  std::ostream& err;
  RunManifest manifest;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw InputError("cannot write " + path.string());
  f << text;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

std::string fmt(double v, const char* spec = "%.9g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InputError("not a number in list: '" + item + "'");
    }
  }
  return out;
}

void require_dir(const std::string& path, const char* what) {
  if (!fs::is_directory(path)) throw InputError(std::string(what) + " directory not found: " + path);
}

// Refuses an output root that is, or lies inside, one of the inputs.
void check_out(const std::string& out, const std::vector<std::string>& inputs) {
  const fs::path o = fs::weakly_canonical(out);
  for (const auto& in : inputs) {
    const fs::path i = fs::weakly_canonical(in);
    auto [a, b] = std::mismatch(i.begin(), i.end(), o.begin(), o.end());
    if (a == i.end()) throw InputError("output " + out + " would overwrite input " + in);
  }
}

// ---- simulate ----

struct SimulateOpts {
  std::string spec, out;
  std::optional<std::uint64_t> seed;
};

void cmd_simulate(Context& ctx, const SimulateOpts& o) {
  const json spec = read_json_file(o.spec);
  if (!spec.is_object()) throw InputError("simulation spec must be a JSON object");
  const std::string kind = spec.value("kind", std::string("dataset"));
  ctx.manifest.inputs = {o.spec};
  check_out(o.out, ctx.manifest.inputs);
  fs::create_directories(o.out);

  if (kind == "dataset") {
    for (auto it = spec.begin(); it != spec.end(); ++it)
      if (it.key() != "kind" && it.key() != "n" && it.key() != "n_val" && it.key() != "n_test" && it.key() != "m" &&
          it.key() != "dataset")
        throw InputError("simulation spec: unknown key '" + it.key() + "'");
    sim::DatasetSpec ds = dataset_from_json(spec.value("dataset", json::object()));
    if (o.seed) ds.seed = *o.seed;
    int n = 0, n_val = 0, n_test = 0, m = 0;
    try {
      n = spec.at("n").get<int>();
      m = spec.at("m").get<int>();
      n_val = spec.value("n_val", 0);
      n_test = spec.value("n_test", 0);
    } catch (const json::exception& e) {
      throw InputError(std::string("simulation spec needs integer n and m: ") + e.what());
    }
    require(n >= 1, "n must be at least 1");
    require(m >= 1, "m must be at least 1");
    require(n_val >= 0 && n_test >= 0, "n_val and n_test must be non-negative");
    std::vector<sim::Sample> all = sim::make_dataset(n, m, ds, sim::Split::train);
    if (n_val > 0) {
      auto v = sim::make_dataset(n_val, m, ds, sim::Split::val);
      all.insert(all.end(), v.begin(), v.end());
    }
    if (n_test > 0) {
      auto t = sim::make_dataset(n_test, m, ds, sim::Split::test);
      all.insert(all.end(), t.begin(), t.end());
    }
    const json resolved = {{"kind", kind}, {"n", n}, {"n_val", n_val}, {"n_test", n_test}, {"m", m}, {"dataset", to_json(ds)}};
    sim::save_dataset(o.out, all, json{{"spec", resolved}}.dump());
    ctx.manifest.config = resolved;
    ctx.manifest.seeds = {ds.seed};
    ctx.out << "wrote " << all.size() << " fields of view to " << o.out << "\n";
  } else if (kind == "stack") {
    for (auto it = spec.begin(); it != spec.end(); ++it)
      if (it.key() != "kind" && it.key() != "rows" && it.key() != "cols" && it.key() != "scene" &&
          it.key() != "acquisition" && it.key() != "png_bit_depth" && it.key() != "png_full_scale")
        throw InputError("simulation spec: unknown key '" + it.key() + "'");
    sim::SceneSpec scene = scene_from_json(spec.value("scene", json::object()));
    sim::AcquisitionSpec acq = acquisition_from_json(spec.value("acquisition", json::object()));
    if (o.seed) {
      scene.seed = *o.seed;
      acq.seed = sim::splitmix64(*o.seed);
    }
    const int rows = spec.value("rows", 256), cols = spec.value("cols", 256);
    PngMapping mapping{spec.value("png_bit_depth", 16), spec.value("png_full_scale", acq.full_scale)};
    const ComplexField object = sim::make_object(scene, rows, cols, acq.optical);
    const HologramStack stack = sim::acquire(object, acq);
    save_stack(o.out, stack, mapping);
    save_field(fs::path(o.out) / "object.fld", object);
    ctx.manifest.config = {{"kind", kind},
                           {"rows", rows},
                           {"cols", cols},
                           {"scene", to_json(scene)},
                           {"acquisition", to_json(acq)},
                           {"png_bit_depth", mapping.bit_depth},
                           {"png_full_scale", mapping.full_scale}};
    ctx.manifest.seeds = {scene.seed, acq.seed};
    ctx.out << "wrote " << stack.size() << " holograms to " << o.out << "\n";
  } else {
    throw InputError("unknown simulation kind '" + kind + "' (expected dataset or stack)");
  }
}

// ---- reconstruct ----

struct ReconstructOpts {
  std::string stack, out, truth, z_list;
  int iters = 30;
  double weight = 0.5;
  bool autofocus = false;
  double zmin = 400.0, zmax = 600.0, step = 10.0, passband = kFocusPassband;
};

std::string focus_rows(const HologramStack& stack, std::vector<FocusResult>& results, double zmin, double zmax,
                       double step, double passband) {
  std::string csv = "frame,z_recorded_um,z_hat_um,score,plateau,refinement_lost\n";
  for (std::size_t i = 0; i < stack.size(); ++i) {
    FocusResult r = autofocus(stack.holograms[i], stack.wavelength_um, zmin, zmax, step, passband);
    csv += std::to_string(i) + "," + fmt(stack.holograms[i].z2_um) + "," + fmt(r.z_hat) + "," + fmt(r.score) + "," +
           (r.plateau ? "1" : "0") + "," + (r.refinement_lost ? "1" : "0") + "\n";
    results.push_back(std::move(r));
  }
  return csv;
}

void cmd_reconstruct(Context& ctx, const ReconstructOpts& o) {
  require_dir(o.stack, "stack");
  require(!(o.autofocus && !o.z_list.empty()), "--autofocus and --z-list are mutually exclusive");
  require(o.iters >= 0, "--iters must be non-negative");
  ctx.manifest.inputs = {o.stack};
  if (!o.truth.empty()) ctx.manifest.inputs.push_back(o.truth);
  check_out(o.out, ctx.manifest.inputs);
  HologramStack stack = load_stack(o.stack);
  fs::create_directories(o.out);

  std::string z_source = "recorded";
  if (o.autofocus) {
    std::vector<FocusResult> res;
    write_text(fs::path(o.out) / "focus.csv", focus_rows(stack, res, o.zmin, o.zmax, o.step, o.passband));
    for (std::size_t i = 0; i < stack.size(); ++i) stack.holograms[i].z2_um = res[i].z_hat;
    z_source = "autofocus";
  } else if (!o.z_list.empty()) {
    const auto zs = parse_list(o.z_list);
    require(zs.size() == stack.size(), "--z-list has " + std::to_string(zs.size()) + " entries for " +
                                           std::to_string(stack.size()) + " holograms");
    for (std::size_t i = 0; i < zs.size(); ++i) stack.holograms[i].z2_um = zs[i];
    z_source = "list";
  }

  MhprConfig cfg;
  cfg.iterations = o.iters;
  cfg.amplitude_weight = o.weight;
  const MhprResult r = mhpr(stack, cfg);
  save_field(fs::path(o.out) / "sample.fld", r.sample_field);
  save_residuals_csv(fs::path(o.out) / "residuals.csv", r.residual_trace);

  std::vector<double> zs;
  for (const auto& h : stack.holograms) zs.push_back(h.z2_um);
  ctx.manifest.config = {{"iterations", cfg.iterations},
                         {"amplitude_weight", cfg.amplitude_weight},
                         {"z_source", z_source},
                         {"z2_um", zs},
                         {"autofocus_range_um", {o.zmin, o.zmax}},
                         {"autofocus_step_um", o.step},
                         {"autofocus_passband", o.passband}};
  ctx.out << "reconstructed " << r.sample_field.rows() << "x" << r.sample_field.cols() << " field from "
          << stack.size() << " holograms, " << cfg.iterations << " iterations\n";
  if (!o.truth.empty()) {
    const ComplexField truth = load_field(o.truth);
    const MetricReport m = report(r.sample_field, truth);
    write_text(fs::path(o.out) / "metrics.json", m.to_json());
    ctx.out << "ECC vs truth: " << fmt(m.ecc, "%.6f") << "\n";
    ctx.out << "amplitude RMSE vs truth: " << fmt(m.rmse, "%.6f") << "\n";
  }
}

// ---- autofocus ----

struct AutofocusOpts {
  std::string stack, out;
  double zmin = 400.0, zmax = 600.0, step = 10.0, passband = kFocusPassband;
};

void cmd_autofocus(Context& ctx, const AutofocusOpts& o) {
  require_dir(o.stack, "stack");
  ctx.manifest.inputs = {o.stack};
  check_out(o.out, ctx.manifest.inputs);
  const HologramStack stack = load_stack(o.stack);
  fs::create_directories(o.out);
  std::vector<FocusResult> res;
  write_text(fs::path(o.out) / "focus.csv", focus_rows(stack, res, o.zmin, o.zmax, o.step, o.passband));
  std::string scan = "frame,z_um,score\n";
  for (std::size_t i = 0; i < res.size(); ++i)
    for (const auto& [z, s] : res[i].scan_trace) scan += std::to_string(i) + "," + fmt(z) + "," + fmt(s) + "\n";
  write_text(fs::path(o.out) / "scan.csv", scan);
  ctx.manifest.config = {{"z_min_um", o.zmin}, {"z_max_um", o.zmax}, {"coarse_step_um", o.step}, {"passband", o.passband}};
  for (std::size_t i = 0; i < res.size(); ++i)
    ctx.out << "frame " << i << ": z_hat = " << fmt(res[i].z_hat, "%.2f") << " um"
            << (res[i].plateau ? " (plateau)" : "") << (res[i].refinement_lost ? " (refinement lost)" : "") << "\n";
}

// ---- psr ----

struct PsrOpts {
  std::string stack, out, shifts = "estimate";
  int factor = 0, upsample = 20, reference = 0;
};

void cmd_psr(Context& ctx, const PsrOpts& o) {
  require_dir(o.stack, "stack");
  require(o.factor >= 1, "--factor must be at least 1");
  require(o.shifts == "estimate" || o.shifts == "recorded", "--shifts must be estimate or recorded");
  ctx.manifest.inputs = {o.stack};
  check_out(o.out, ctx.manifest.inputs);
  const HologramStack stack = load_stack(o.stack);
  fs::create_directories(o.out);

  // Frames sharing a height form one sub-pixel scan.
  std::map<double, std::vector<Hologram>> groups;
  for (const Hologram& h : stack.holograms) groups[h.z2_um].push_back(h);
  HologramStack hires;
  hires.wavelength_um = stack.wavelength_um;
  int g = 0;
  for (const auto& [z, frames] : groups) {
    require(o.reference >= 0 && o.reference < static_cast<int>(frames.size()), "--reference out of range");
    const ShiftTable table =
        o.shifts == "estimate" ? estimate_shifts(frames, o.reference, o.upsample) : recorded_shifts(frames, o.reference);
    char name[32];
    std::snprintf(name, sizeof(name), "shifts_%02d.csv", g++);
    save_shift_table(fs::path(o.out) / name, table);
    Hologram h;
    h.image = shift_and_add(frames, table, o.factor);
    h.z2_um = z;
    hires.holograms.push_back(std::move(h));
  }
  double peak = 0.0;
  for (const auto& h : hires.holograms)
    for (double v : h.image.data()) peak = std::max(peak, v);
  save_stack(o.out, hires, PngMapping{16, peak > 0.0 ? peak : 1.0});
  ctx.manifest.config = {{"factor", o.factor}, {"upsample", o.upsample}, {"shifts", o.shifts}, {"reference", o.reference}};
  ctx.out << "fused " << stack.size() << " frames into " << hires.size() << " high-resolution holograms ("
          << hires.holograms[0].image.rows() << "x" << hires.holograms[0].image.cols() << ")\n";
}

// ---- metrics ----

struct MetricsOpts {
  std::string pred, truth, out, format = "table";
};

void cmd_metrics(Context& ctx, const MetricsOpts& o) {
  require(o.format == "table" || o.format == "json", "--format must be table or json");
  ctx.manifest.inputs = {o.pred, o.truth};
  check_out(o.out, ctx.manifest.inputs);
  const MetricReport m = report(load_field(o.pred), load_field(o.truth));
  fs::create_directories(o.out);
  write_text(fs::path(o.out) / "metrics.json", m.to_json());
  ctx.manifest.config = {{"format", o.format}};
  ctx.out << (o.format == "json" ? m.to_json() : m.to_table());
}

// ---- train / transfer ----

struct TrainOpts {
  std::string data, out, config, pretrained;
  std::optional<std::uint64_t> seed;
  std::optional<int> epochs;
  bool freeze_backbone = false;
};

void split_pairs(const std::vector<sim::Sample>& all, std::vector<nn::Pair>& train, std::vector<nn::Pair>& val) {
  std::vector<sim::Sample> tr, va;
  for (const auto& s : all) {
    if (s.split == sim::Split::train) tr.push_back(s);
    if (s.split == sim::Split::val) va.push_back(s);
  }
  require(!tr.empty(), "dataset has no training fields of view");
  require(!va.empty(), "dataset has no validation fields of view");
  train = nn::to_pairs(tr);
  val = nn::to_pairs(va);
}

json summary_json(const nn::ParamSummary& s) {
  return {{"total", s.total},
          {"trainable", s.trainable},
          {"frozen", s.frozen},
          {"trainable_fraction", s.trainable_fraction()},
          {"per_block", s.per_block}};
}

void save_failed_state(Context& ctx, const fs::path& dir, const nn::Checkpoint& ck) {
  nn::save_checkpoint(dir, ck);
  ctx.err << "last finite parameters saved to " << dir.string() << "\n";
}

void cmd_train(Context& ctx, const TrainOpts& o) {
  require_dir(o.data, "dataset");
  ctx.manifest.inputs = {o.data};
  if (!o.config.empty()) ctx.manifest.inputs.push_back(o.config);
  check_out(o.out, ctx.manifest.inputs);
  const json cfg = o.config.empty() ? json::object() : read_json_file(o.config);
  for (auto it = cfg.begin(); it != cfg.end(); ++it)
    if (it.key() != "model" && it.key() != "train") throw InputError("train config: unknown key '" + it.key() + "'");
  const nn::ModelConfig model = model_from_json(cfg.value("model", json::object()));
  nn::TrainConfig tc = train_from_json(cfg.value("train", json::object()), nn::TrainConfig::pretrain_defaults());
  if (o.seed) tc.seed = *o.seed;
  if (o.epochs) tc.max_epochs = *o.epochs;

  std::vector<nn::Pair> train, val;
  split_pairs(sim::load_dataset(o.data), train, val);
  fs::create_directories(o.out);
  nn::Checkpoint ck;
  ck.model = model;
  ck.gen = nn::init_rhm(model, sim::splitmix64(tc.seed ^ 0x9e11ull));
  ck.disc = nn::init_discriminator(model, sim::splitmix64(tc.seed ^ 0xd15cull));
  ck.extra_json = json{{"train", to_json(tc)}}.dump();
  ctx.manifest.config = {{"model", to_json(model)}, {"train", to_json(tc)}};
  ctx.manifest.seeds = {tc.seed};
  nn::TrainLog log;
  try {
    log = nn::train(ck.gen, ck.disc, model, train, val, tc);
  } catch (const NumericalError&) {
    save_failed_state(ctx, fs::path(o.out) / "checkpoint_last_finite", ck);
    throw;
  }
  nn::save_checkpoint(fs::path(o.out) / "checkpoint", ck);
  write_text(fs::path(o.out) / "log.csv", log.to_csv());
  write_json(fs::path(o.out) / "params.json", summary_json(nn::count_parameters(ck.gen)));
  ctx.out << "trained " << log.epochs.size() << " epochs; final val MAE " << fmt(log.epochs.back().val_mae, "%.6f")
          << ", best " << fmt(log.best_val_mae, "%.6f") << " at epoch " << log.best_epoch << "\n";
}

void cmd_transfer(Context& ctx, const TrainOpts& o) {
  require_dir(o.data, "dataset");
  require_dir(o.pretrained, "pretrained checkpoint");
  ctx.manifest.inputs = {o.data, o.pretrained};
  if (!o.config.empty()) ctx.manifest.inputs.push_back(o.config);
  check_out(o.out, ctx.manifest.inputs);
  const nn::Checkpoint pre = nn::load_checkpoint(o.pretrained);
  const json cfg = o.config.empty() ? json::object() : read_json_file(o.config);
  for (auto it = cfg.begin(); it != cfg.end(); ++it)
    if (it.key() != "model" && it.key() != "train") throw InputError("transfer config: unknown key '" + it.key() + "'");
  const nn::ModelConfig model = model_from_json(cfg.value("model", json::object()), pre.model);
  nn::TrainConfig tc = train_from_json(cfg.value("train", json::object()), nn::TrainConfig::transfer_defaults());
  if (o.seed) tc.seed = *o.seed;
  if (o.epochs) tc.max_epochs = *o.epochs;
  nn::check_compatible(pre.gen, model);

  std::vector<nn::Pair> train, val;
  split_pairs(sim::load_dataset(o.data), train, val);
  fs::create_directories(o.out);
  ctx.manifest.config = {{"model", to_json(model)}, {"train", to_json(tc)}, {"freeze_backbone", o.freeze_backbone}};
  ctx.manifest.seeds = {tc.seed};
  nn::TransferResult r;
  try {
    r = nn::transfer(pre.gen, pre.disc, o.freeze_backbone, model, train, val, tc);
  } catch (const NumericalError&) {
    save_failed_state(ctx, fs::path(o.out) / "checkpoint_last_finite", pre);
    throw;
  }
  nn::Checkpoint ck;
  ck.model = model;
  ck.gen = std::move(r.gen);
  ck.disc = std::move(r.disc);
  ck.extra_json = json{{"train", to_json(tc)}, {"freeze_backbone", o.freeze_backbone}}.dump();
  nn::save_checkpoint(fs::path(o.out) / "checkpoint", ck);
  write_text(fs::path(o.out) / "log.csv", r.log.to_csv());
  write_json(fs::path(o.out) / "params.json", summary_json(r.summary));
  ctx.out << "transfer (" << (o.freeze_backbone ? "frozen backbone" : "all trainable") << "): " << r.summary.trainable
          << " of " << r.summary.total << " parameters trainable (" << fmt(100.0 * r.summary.trainable_fraction(), "%.2f")
          << "%); final val MAE " << fmt(r.log.epochs.back().val_mae, "%.6f") << "\n";
}

// ---- experiment ----

struct ExperimentOpts {
  std::string grid, out, pretrained;
  std::optional<std::uint64_t> seed;
};

int cmd_experiment(Context& ctx, const ExperimentOpts& o) {
  ctx.manifest.inputs = {o.grid};
  if (!o.pretrained.empty()) ctx.manifest.inputs.push_back(o.pretrained);
  check_out(o.out, ctx.manifest.inputs);
  nn::ExperimentConfig cfg = experiment_from_json(read_json_file(o.grid));
  if (o.seed) {
    cfg.pretrain.seed = *o.seed;
    cfg.source.seed = sim::splitmix64(*o.seed ^ 0xa11ull);
    cfg.target.seed = sim::splitmix64(*o.seed ^ 0xb22ull);
  }
  std::optional<nn::Checkpoint> pre;
  if (!o.pretrained.empty()) {
    pre = nn::load_checkpoint(o.pretrained);
    require(pre->model.base_channels == cfg.model.base_channels, "pretrained checkpoint width differs from the grid model");
  }
  fs::create_directories(o.out);
  ctx.manifest.config = to_json(cfg);
  ctx.manifest.seeds = cfg.seeds;
  auto progress = [&](const std::string& s) { ctx.err << s << "\n"; };
  const nn::ExperimentResult res = nn::run_experiment(cfg, progress, pre ? &pre->gen : nullptr, pre ? &pre->disc : nullptr);
  write_text(fs::path(o.out) / "results.csv", nn::results_csv(res.cells));
  if (!res.pretrain_log.epochs.empty())
    write_text(fs::path(o.out) / "pretrain_log.csv", res.pretrain_log.to_csv());
  int ok = 0;
  for (const auto& c : res.cells) ok += c.ok ? 1 : 0;
  ctx.out << ok << " of " << res.cells.size() << " cells succeeded\n";
  return ok > 0 ? kExitOk : kExitNumerical;
}

// ---- replay ----

struct ReplayOpts {
  std::string manifest, out;
};

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, bool record);

int cmd_replay(Context& ctx, const ReplayOpts& o) {
  const RunManifest m = RunManifest::load(o.manifest);
  std::vector<std::string> args = m.argv;
  require(!args.empty() && args[0] == m.command, "manifest argv does not start with its command");
  require(m.command != "replay", "cannot replay a replay");
  std::string out_dir = m.out;
  if (!o.out.empty()) {
    bool replaced = false;
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (args[i] == "--out" && i + 1 < args.size()) {
        args[i + 1] = o.out;
        replaced = true;
      } else if (args[i].rfind("--out=", 0) == 0) {
        args[i] = "--out=" + o.out;
        replaced = true;
      }
    }
    require(replaced, "manifest argv has no --out to redirect");
    out_dir = o.out;
  }
  const fs::path prev = fs::current_path();
  if (!m.cwd.empty()) fs::current_path(m.cwd);
  int code = kExitInput;
  try {
    code = dispatch(args, ctx.out, ctx.err, true);
  } catch (...) {
    fs::current_path(prev);
    throw;
  }
  const auto now = tree_hashes(out_dir);
  fs::current_path(prev);
  if (code != kExitOk) return code;

  int differ = 0;
  for (const auto& [name, hash] : m.outputs) {
    auto it = now.find(name);
    if (it == now.end() || it->second != hash) {
      ctx.err << "replay mismatch: " << name << "\n";
      ++differ;
    }
  }
  for (const auto& [name, hash] : now)
    if (!m.outputs.count(name)) {
      ctx.err << "replay produced an extra file: " << name << "\n";
      ++differ;
    }
  if (differ) {
    ctx.out << "replay: " << differ << " output(s) differ\n";
    return kExitNumerical;
  }
  ctx.out << "replay: " << m.outputs.size() << " outputs hash-identical\n";
  return kExitOk;
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, bool record) {
  CLI::App app{"Lensless holographic reconstruction toolkit"};
  app.name("holo");
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  SimulateOpts sim_o;
  auto* sim_c = app.add_subcommand("simulate", "Simulate a hologram stack or a training dataset");
  sim_c->add_option("--spec", sim_o.spec, "Simulation spec (JSON)")->required();
  sim_c->add_option("--out", sim_o.out, "Output directory")->required();
  sim_c->add_option("--seed", sim_o.seed, "Override the spec seed");

  ReconstructOpts rec_o;
  auto* rec_c = app.add_subcommand("reconstruct", "Multi-height phase retrieval of a stack");
  rec_c->add_option("--stack", rec_o.stack, "Stack directory")->required();
  rec_c->add_option("--out", rec_o.out, "Output directory")->required();
  rec_c->add_option("--iters", rec_o.iters, "Iterations")->capture_default_str();
  rec_c->add_option("--weight", rec_o.weight, "Amplitude update weight")->capture_default_str();
  rec_c->add_flag("--autofocus", rec_o.autofocus, "Estimate every height by autofocus first");
  rec_c->add_option("--z-list", rec_o.z_list, "Comma-separated heights in um, overriding the stack");
  rec_c->add_option("--zmin", rec_o.zmin, "Autofocus range start (um)")->capture_default_str();
  rec_c->add_option("--zmax", rec_o.zmax, "Autofocus range end (um)")->capture_default_str();
  rec_c->add_option("--step", rec_o.step, "Autofocus coarse step (um)")->capture_default_str();
  rec_c->add_option("--passband", rec_o.passband, "Autofocus low-pass cut (cycles/pixel)")->capture_default_str();
  rec_c->add_option("--truth", rec_o.truth, "Ground-truth field file for metrics");

  AutofocusOpts af_o;
  auto* af_c = app.add_subcommand("autofocus", "Estimate the sample-to-sensor distance of every hologram");
  af_c->add_option("--stack", af_o.stack, "Stack directory")->required();
  af_c->add_option("--out", af_o.out, "Output directory")->required();
  af_c->add_option("--zmin", af_o.zmin, "Range start (um)")->capture_default_str();
  af_c->add_option("--zmax", af_o.zmax, "Range end (um)")->capture_default_str();
  af_c->add_option("--step", af_o.step, "Coarse step (um)")->capture_default_str();
  af_c->add_option("--passband", af_o.passband, "Low-pass cut before scoring (cycles/pixel)")->capture_default_str();

  PsrOpts psr_o;
  auto* psr_c = app.add_subcommand("psr", "Pixel super-resolution of sub-pixel shifted frames");
  psr_c->add_option("--stack", psr_o.stack, "Stack directory")->required();
  psr_c->add_option("--out", psr_o.out, "Output directory")->required();
  psr_c->add_option("--factor", psr_o.factor, "Resolution gain")->required();
  psr_c->add_option("--upsample", psr_o.upsample, "Shift estimation upsampling")->capture_default_str();
  psr_c->add_option("--shifts", psr_o.shifts, "estimate | recorded")->capture_default_str();
  psr_c->add_option("--reference", psr_o.reference, "Reference frame index")->capture_default_str();

  MetricsOpts met_o;
  auto* met_c = app.add_subcommand("metrics", "Compare a reconstruction with ground truth");
  met_c->add_option("--pred", met_o.pred, "Reconstructed field file")->required();
  met_c->add_option("--truth", met_o.truth, "Ground-truth field file")->required();
  met_c->add_option("--out", met_o.out, "Output directory")->required();
  met_c->add_option("--format", met_o.format, "table | json")->capture_default_str();

  TrainOpts tr_o;
  auto* tr_c = app.add_subcommand("train", "Train the recurrent network from scratch");
  tr_c->add_option("--data", tr_o.data, "Dataset directory")->required();
  tr_c->add_option("--out", tr_o.out, "Output directory")->required();
  tr_c->add_option("--config", tr_o.config, "Model and training settings (JSON)");
  tr_c->add_option("--seed", tr_o.seed, "Override the training seed");
  tr_c->add_option("--epochs", tr_o.epochs, "Override max_epochs");

  TrainOpts tf_o;
  auto* tf_c = app.add_subcommand("transfer", "Fine-tune a pretrained network");
  tf_c->add_option("--pretrained", tf_o.pretrained, "Checkpoint directory")->required();
  tf_c->add_option("--data", tf_o.data, "Dataset directory")->required();
  tf_c->add_option("--out", tf_o.out, "Output directory")->required();
  tf_c->add_flag("--freeze-backbone", tf_o.freeze_backbone, "Keep the recurrent blocks fixed");
  tf_c->add_option("--config", tf_o.config, "Training settings (JSON)");
  tf_c->add_option("--seed", tf_o.seed, "Override the training seed");
  tf_c->add_option("--epochs", tf_o.epochs, "Override max_epochs");

  ExperimentOpts ex_o;
  auto* ex_c = app.add_subcommand("experiment", "Run a scratch / transfer comparison grid");
  ex_c->add_option("--grid", ex_o.grid, "Grid settings (JSON)")->required();
  ex_c->add_option("--out", ex_o.out, "Output directory")->required();
  ex_c->add_option("--pretrained", ex_o.pretrained, "Skip pretraining and start from this checkpoint");
  ex_c->add_option("--seed", ex_o.seed, "Override pretraining and dataset seeds");

  ReplayOpts rp_o;
  auto* rp_c = app.add_subcommand("replay", "Re-run a command from its run manifest and compare outputs");
  rp_c->add_option("--manifest", rp_o.manifest, "run_manifest.json")->required();
  rp_c->add_option("--out", rp_o.out, "Redirect the outputs here");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }

  Context ctx{out, err, {}};
  ctx.manifest.argv = args;
  ctx.manifest.cwd = fs::current_path().string();
  const auto t0 = std::chrono::steady_clock::now();
  int code = kExitOk;
  std::string out_dir;
  CLI::App* sub = app.get_subcommands().front();
  ctx.manifest.command = sub->get_name();

  if (sub == sim_c) {
    cmd_simulate(ctx, sim_o);
    out_dir = sim_o.out;
  } else if (sub == rec_c) {
    cmd_reconstruct(ctx, rec_o);
    out_dir = rec_o.out;
  } else if (sub == af_c) {
    cmd_autofocus(ctx, af_o);
    out_dir = af_o.out;
  } else if (sub == psr_c) {
    cmd_psr(ctx, psr_o);
    out_dir = psr_o.out;
  } else if (sub == met_c) {
    cmd_metrics(ctx, met_o);
    out_dir = met_o.out;
  } else if (sub == tr_c) {
    cmd_train(ctx, tr_o);
    out_dir = tr_o.out;
  } else if (sub == tf_c) {
    cmd_transfer(ctx, tf_o);
    out_dir = tf_o.out;
  } else if (sub == ex_c) {
    code = cmd_experiment(ctx, ex_o);
    out_dir = ex_o.out;
  } else if (sub == rp_c) {
    return cmd_replay(ctx, rp_o);
  }

  if (record && code == kExitOk) {
    ctx.manifest.out = out_dir;
    ctx.manifest.outputs = tree_hashes(out_dir);
    ctx.manifest.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    ctx.manifest.save(fs::path(out_dir) / kManifestName);
  }
  return code;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    return dispatch(args, out, err, true);
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace holo::cli
