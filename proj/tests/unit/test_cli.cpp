#include "doctest.h"

#include <fstream>
#include <sstream>

#include "holo/cli/app.hpp"
#include "holo/cli/manifest.hpp"
#include "holo/io.hpp"
#include "holo/phase_retrieval.hpp"
#include "json.hpp"
#include "support.hpp"

using namespace holo;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result holo_run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

void write_json(const fs::path& p, const json& j) { std::ofstream(p) << j.dump(2); }

json tiny_dataset(int n, int m, int n_val = 0) {
  return {{"kind", "dataset"},
          {"n", n},
          {"n_val", n_val},
          {"m", m},
          {"dataset", {{"rows", 32}, {"cols", 32}, {"seed", 4}, {"mhpr", {{"iterations", 5}}}}}};
}

int count_fovs(const fs::path& dir) {
  int n = 0;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_directory() && e.path().filename().string().rfind("fov_", 0) == 0) ++n;
  return n;
}

void check_replay(const fs::path& out_dir, const fs::path& redirect) {
  Result r = holo_run({"replay", "--manifest", (out_dir / cli::kManifestName).string(), "--out", redirect.string()});
  CHECK_MESSAGE(r.code == 0, r.err);
  CHECK(cli::tree_hashes(redirect) == cli::tree_hashes(out_dir));
}

}  // namespace

TEST_CASE("simulate writes a dataset and is reproducible") {
  auto root = test::scratch_dir("cli_sim");
  write_json(root / "spec.json", tiny_dataset(4, 2));
  Result a = holo_run({"simulate", "--spec", (root / "spec.json").string(), "--out", (root / "a").string()});
  REQUIRE_MESSAGE(a.code == 0, a.err);
  CHECK(count_fovs(root / "a") == 4);
  CHECK(fs::exists(root / "a" / "fov_0003" / "input_01.fld"));
  CHECK(fs::exists(root / "a" / cli::kManifestName));

  Result b = holo_run({"simulate", "--spec", (root / "spec.json").string(), "--out", (root / "b").string()});
  REQUIRE(b.code == 0);
  CHECK(cli::tree_hash(root / "a") == cli::tree_hash(root / "b"));

  Result c = holo_run({"simulate", "--spec", (root / "spec.json").string(), "--out", (root / "c").string(), "--seed", "99"});
  REQUIRE(c.code == 0);
  CHECK(cli::tree_hash(root / "a") != cli::tree_hash(root / "c"));

  auto manifest = cli::RunManifest::load(root / "a" / cli::kManifestName);
  CHECK(manifest.command == "simulate");
  CHECK(manifest.version == cli::kToolVersion);
  CHECK(manifest.outputs == cli::tree_hashes(root / "a"));
  check_replay(root / "a", root / "replayed");
}

TEST_CASE("simulate rejects bad specs with exit code 2") {
  auto root = test::scratch_dir("cli_sim_bad");
  write_json(root / "m0.json", tiny_dataset(4, 0));
  CHECK(holo_run({"simulate", "--spec", (root / "m0.json").string(), "--out", (root / "o").string()}).code == 2);
  std::ofstream(root / "broken.json") << "{ not json";
  CHECK(holo_run({"simulate", "--spec", (root / "broken.json").string(), "--out", (root / "o").string()}).code == 2);
  write_json(root / "extra.json", json{{"kind", "dataset"}, {"n", 1}, {"m", 1}, {"colour", true}});
  CHECK(holo_run({"simulate", "--spec", (root / "extra.json").string(), "--out", (root / "o").string()}).code == 2);
  CHECK(holo_run({"simulate", "--out", (root / "o").string()}).code == 2);
  CHECK(holo_run({"no-such-command"}).code == 2);
}

TEST_CASE("reconstruct, autofocus, metrics and psr on simulated stacks") {
  auto root = test::scratch_dir("cli_rec");
  write_json(root / "stack.json", json{{"kind", "stack"}, {"rows", 64}, {"cols", 64}, {"scene", {{"seed", 3}}}});
  REQUIRE(holo_run({"simulate", "--spec", (root / "stack.json").string(), "--out", (root / "stack").string()}).code == 0);

  Result r = holo_run({"reconstruct", "--stack", (root / "stack").string(), "--out", (root / "rec").string(), "--truth",
                       (root / "stack" / "object.fld").string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto pos = r.out.find("ECC vs truth: ");
  REQUIRE(pos != std::string::npos);
  CHECK(std::stod(r.out.substr(pos + 14)) > 0.95);
  CHECK(fs::exists(root / "rec" / "residuals.csv"));
  check_replay(root / "rec", root / "rec_replay");

  Result z = holo_run({"reconstruct", "--stack", (root / "stack").string(), "--out", (root / "rec0").string(), "--iters", "0"});
  REQUIRE(z.code == 0);
  MhprConfig none;
  none.iterations = 0;
  CHECK(test::rms_diff(load_field(root / "rec0" / "sample.fld"), mhpr(load_stack(root / "stack"), none).sample_field) == 0.0);

  Result af = holo_run({"autofocus", "--stack", (root / "stack").string(), "--out", (root / "af").string()});
  REQUIRE(af.code == 0);
  CHECK(fs::exists(root / "af" / "scan.csv"));
  check_replay(root / "af", root / "af_replay");

  Result m = holo_run({"metrics", "--pred", (root / "rec" / "sample.fld").string(), "--truth",
                       (root / "stack" / "object.fld").string(), "--out", (root / "met").string(), "--format", "json"});
  REQUIRE(m.code == 0);
  CHECK(json::parse(m.out).at("ecc").get<double>() > 0.95);

  CHECK(holo_run({"reconstruct", "--stack", (root / "missing").string(), "--out", (root / "x").string()}).code == 2);
  CHECK(holo_run({"reconstruct", "--stack", (root / "stack").string(), "--out", (root / "stack" / "inner").string()}).code == 2);

  write_json(root / "psr.json", json{{"kind", "stack"},
                                     {"rows", 48},
                                     {"cols", 48},
                                     {"acquisition", {{"z2_list", {500.0}}, {"psr_pattern", 3}}}});
  REQUIRE(holo_run({"simulate", "--spec", (root / "psr.json").string(), "--out", (root / "psr_stack").string()}).code == 0);
  Result p = holo_run({"psr", "--stack", (root / "psr_stack").string(), "--out", (root / "psr").string(), "--factor", "3",
                       "--shifts", "recorded"});
  REQUIRE_MESSAGE(p.code == 0, p.err);
  CHECK(load_stack(root / "psr").holograms.at(0).image.rows() == 48);
  CHECK(fs::exists(root / "psr" / "shifts_00.csv"));
  check_replay(root / "psr", root / "psr_replay");
}

TEST_CASE("train, transfer and experiment commands") {
  auto root = test::scratch_dir("cli_nn");
  write_json(root / "data.json", tiny_dataset(2, 2, 1));
  REQUIRE(holo_run({"simulate", "--spec", (root / "data.json").string(), "--out", (root / "data").string()}).code == 0);
  write_json(root / "train.json", json{{"model", {{"base_channels", 4}}}, {"train", {{"lr_g", 1e-3}, {"lr_d", 1e-4}}}});

  Result t = holo_run({"train", "--data", (root / "data").string(), "--out", (root / "pre").string(), "--config",
                       (root / "train.json").string(), "--epochs", "2", "--seed", "3"});
  REQUIRE_MESSAGE(t.code == 0, t.err);
  CHECK(fs::exists(root / "pre" / "checkpoint" / "params.bin"));
  CHECK(fs::exists(root / "pre" / "log.csv"));
  check_replay(root / "pre", root / "pre_replay");

  Result frozen = holo_run({"transfer", "--pretrained", (root / "pre" / "checkpoint").string(), "--data",
                            (root / "data").string(), "--out", (root / "tf").string(), "--freeze-backbone", "--epochs", "1"});
  REQUIRE_MESSAGE(frozen.code == 0, frozen.err);
  check_replay(root / "tf", root / "tf_replay");

  write_json(root / "grid.json", json{{"model", {{"base_channels", 4}}},
                                      {"source", {{"rows", 32}, {"cols", 32}, {"seed", 1}, {"mhpr", {{"iterations", 3}}}}},
                                      {"target",
                                       {{"rows", 32},
                                        {"cols", 32},
                                        {"seed", 2},
                                        {"scene", {{"kind", "phase_blobs"}}},
                                        {"mhpr", {{"iterations", 3}}}}},
                                      {"pretrain_fovs", 2},
                                      {"pretrain_m", 4},
                                      {"val_fovs", 1},
                                      {"test_fovs", 1},
                                      {"pretrain", {{"max_epochs", 1}}},
                                      {"scratch", {{"max_epochs", 1}}},
                                      {"transfer", {{"max_epochs", 1}}},
                                      {"modes", {"transfer_frozen", "transfer_full", "scratch"}},
                                      {"m_t", {2, 3, 4}},
                                      {"nt_ratio", {0.5}},
                                      {"seeds", {0}}});
  Result e = holo_run({"experiment", "--grid", (root / "grid.json").string(), "--out", (root / "exp").string()});
  REQUIRE_MESSAGE(e.code == 0, e.err);
  std::ifstream in(root / "exp" / "results.csv");
  std::string header, line;
  std::getline(in, header);
  CHECK(header.rfind("mode,m_t,nt_ratio,n_train,seed,status,", 0) == 0);
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cols.push_back(cell);
    rows.push_back(cols);
  }
  REQUIRE(rows.size() == 9);
  // trainable_params is column 14.
  std::map<std::string, long> trainable;
  for (const auto& r : rows) {
    CHECK(r[5] == "ok");
    trainable[r[0]] = std::stol(r[14]);
  }
  CHECK(trainable["transfer_frozen"] < trainable["transfer_full"]);
  check_replay(root / "exp", root / "exp_replay");
}

TEST_CASE("replay notices changed outputs") {
  auto root = test::scratch_dir("cli_replay");
  write_json(root / "spec.json", tiny_dataset(1, 1));
  REQUIRE(holo_run({"simulate", "--spec", (root / "spec.json").string(), "--out", (root / "a").string()}).code == 0);
  auto m = cli::RunManifest::load(root / "a" / cli::kManifestName);
  m.outputs.begin()->second = "0000000000000000";
  m.save(root / "a" / cli::kManifestName);
  CHECK(holo_run({"replay", "--manifest", (root / "a" / cli::kManifestName).string(), "--out", (root / "b").string()}).code == 3);
  CHECK(holo_run({"replay", "--manifest", (root / "none.json").string()}).code == 2);
}
