// Copyright 2026 The MNELM Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <set>

#include "mnelm/errors.h"
#include "mnelm/pipeline.h"
#include "mnelm/synthetic.h"
#include "test_util.h"

namespace mnelm {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using testing::read_file;
using testing::TempDir;

// A corpus and config small enough to run every stage in seconds.
json tiny_config() {
  json c = reference_synthetic_config();
  c["ner"] = {{"hidden", 32}, {"heads", 2}, {"layers", 1}, {"ff_hidden", 64},
              {"max_len", 32}, {"epochs", 3}, {"learning_rate", 2e-3}};
  c["seq2seq"] = {{"hidden", 16}, {"heads", 2}, {"encoder_layers", 1},
                  {"decoder_layers", 1}, {"ff_hidden", 32}, {"max_source_len", 48},
                  {"max_target_len", 20}};
  c["pretrain"]["max_steps"] = 12;
  c["finetune"]["max_steps"] = 8;
  c["evaluation"]["max_summary_len"] = 12;
  return c;
}

class Workspace {
 public:
  Workspace() : dir_("pipeline") {
    SyntheticOptions options;
    options.ner_train_sentences = 60;
    options.ner_dev_sentences = 20;
    options.pretrain_documents = 30;
    options.train_documents = 20;
    options.test_documents = 4;
    write_synthetic(dir_.path(), generate_synthetic(options));
    write_config(tiny_config());
  }

  void write_config(const json& c) { std::ofstream(config_path()) << c.dump(2); }
  fs::path config_path() const { return dir_ / "config.json"; }
  const fs::path& root() const { return dir_.path(); }

  PipelineConfig load(std::vector<std::string> overrides = {}) const {
    return load_config(config_path(), overrides);
  }

 private:
  TempDir dir_;
};

std::string manifest_file_list(const json& manifest) {
  std::string out;
  for (const json& a : manifest.at("artifacts")) out += a.at("path").get<std::string>() + "\n";
  return out;
}

TEST_CASE("config loading") {
  Workspace ws;
  PipelineConfig c = ws.load();
  CHECK(c.paths.annotations_train == ws.root() / "annotations_train.jsonl");
  CHECK(c.paths.output_dir == ws.root() / "run");
  CHECK(c.ner.epochs == 3);
  CHECK(c.pretrain.initial_lr == 1e-3);

  SUBCASE("overrides beat the file") {
    PipelineConfig o = ws.load({"seed=99", "ner.epochs=5", "corruption.mlm_mask_probability=0.15"});
    CHECK(o.seed == 99);
    CHECK(o.ner.epochs == 5);
    CHECK(o.corruption.mlm_mask_probability == 0.15);
    CHECK(o.corruption.mask_probability == 0.5);
  }
  SUBCASE("defaults fill missing keys") {
    json c2 = tiny_config();
    c2.erase("finetune");
    ws.write_config(c2);
    CHECK(ws.load().finetune == TrainingSchedule::finetuning());
  }
  SUBCASE("snapshot reloads to the same config") {
    const json snapshot = c.to_json();
    CHECK(PipelineConfig::from_json(snapshot, "/elsewhere").to_json() == snapshot);
  }
  SUBCASE("validation errors") {
    CHECK_THROWS_AS(ws.load({"ner.unknown=1"}), ConfigError);
    CHECK_THROWS_AS(ws.load({"config_version=2"}), ConfigError);
    CHECK_THROWS_AS(ws.load({"seq2seq.hidden=\"wide\""}), ConfigError);
    CHECK_THROWS_AS(ws.load({"corruption.mask_probability=1.5"}), ConfigError);
    CHECK_THROWS_AS(ws.load({"paths.annotations_train=/no/such/file.jsonl"}), ConfigError);
    CHECK_THROWS_AS(ws.load({"not-an-assignment"}), ConfigError);
    CHECK_THROWS_AS(load_config(ws.root() / "absent.json", {}), ConfigError);
    json c2 = tiny_config();
    c2["paths"].erase("annotations_train");
    ws.write_config(c2);
    CHECK_THROWS_AS(ws.load(), ConfigError);
  }
}

TEST_CASE("stage dependencies") {
  Workspace ws;
  PipelineConfig c = ws.load();
  CHECK_THROWS_AS(run_stage_pretrain(c, CorruptionMode::kMnelm), MissingCheckpoint);
  CHECK_THROWS_AS(run_stage_finetune(c, CorruptionMode::kMlm), MissingCheckpoint);
  CHECK_THROWS_AS(run_stage_evaluate(c, CorruptionMode::kMlm), MissingCheckpoint);
  CHECK_FALSE(fs::exists(OutputLayout{c.paths.output_dir}.ner_checkpoint()));
}

TEST_CASE("stages end to end") {
  Workspace ws;
  PipelineConfig c = ws.load();
  const OutputLayout out{c.paths.output_dir};

  const fs::path ner = run_stage_ner(c);
  REQUIRE(fs::exists(ner));
  const std::string ner_hash = sha256_file(ner);
  json ner_report = json::parse(read_file(out.ner_report()));
  CHECK(ner_report.at("history").size() == 3);
  CHECK(ner_report.contains("seed"));
  run_stage_ner(c);
  CHECK(sha256_file(ner) == ner_hash);

  for (CorruptionMode mode : {CorruptionMode::kMnelm, CorruptionMode::kMlm}) {
    run_stage_pretrain(c, mode);
    CHECK(fs::exists(out.pretrain_checkpoint(mode)));
    // Header plus one row per optimizer step.
    std::ifstream curve(out.pretrain_loss(mode));
    std::string line;
    int rows = -1;
    while (std::getline(curve, line)) ++rows;
    CHECK(rows == 12);
  }

  SUBCASE("arms differ only in the masked positions") {
    Vocabulary vocab = Vocabulary::load(out.vocabulary());
    auto mnelm = load_corrupted(out.corrupted(CorruptionMode::kMnelm), vocab);
    auto mlm = load_corrupted(out.corrupted(CorruptionMode::kMlm), vocab);
    NerModel tagger = NerModel::load(ner);
    REQUIRE(mnelm.size() == mlm.size());
    for (std::size_t i = 0; i < mnelm.size(); ++i) {
      CHECK(mnelm[i].id == mlm[i].id);
      CHECK(mnelm[i].pair.original == mlm[i].pair.original);
      std::set<int> predicted;
      for (const EntitySpan& s : tagger.predict(mnelm[i].pair.original.tokens)) {
        for (int k = s.start; k < s.end; ++k) predicted.insert(k);
      }
      for (int k : mnelm[i].pair.masked_positions) CHECK(predicted.count(k) == 1);
    }
  }

  SUBCASE("fine-tuning, evaluation and stage isolation") {
    for (CorruptionMode mode : {CorruptionMode::kMnelm, CorruptionMode::kMlm}) {
      MetricsReport report = run_stage_finetune_and_eval(c, mode);
      CHECK(report.mode == mode_name(mode));
      json j = json::parse(read_file(out.report(mode)));
      CHECK(j.at("aggregate").contains("ne"));
      CHECK(j.at("aggregate").contains("rougeL"));
      CHECK(j.at("metadata").at("seed") == c.seed);
      CHECK(j.at("per_document").size() == 4);
    }
    write_comparison(c);
    const std::string table = read_file(out.comparison_table());
    CHECK(table.find("| MNELM | MLM |") != std::string::npos);
    CHECK(table.find("NE Recall") != std::string::npos);

    const std::string ckpt = read_file(out.finetune_checkpoint(CorruptionMode::kMlm));
    const std::string report = read_file(out.report(CorruptionMode::kMlm));
    fs::remove(out.finetune_checkpoint(CorruptionMode::kMlm));
    fs::remove(out.finetune_loss(CorruptionMode::kMlm));
    fs::remove(out.report(CorruptionMode::kMlm));
    run_stage_finetune_and_eval(c, CorruptionMode::kMlm);
    CHECK(read_file(out.finetune_checkpoint(CorruptionMode::kMlm)) == ckpt);
    CHECK(read_file(out.report(CorruptionMode::kMlm)) == report);
  }

  SUBCASE("empty test split") {
    run_stage_finetune(c, CorruptionMode::kMlm);
    testing::write_file(ws.root() / "summarization_test.jsonl", "");
    CHECK_THROWS_AS(run_stage_evaluate(c, CorruptionMode::kMlm), EmptyDataset);
  }
}

TEST_CASE("run_all is reproducible and its manifest is complete") {
  Workspace ws;
  PipelineConfig c = ws.load();
  const OutputLayout out{c.paths.output_dir};
  RunManifest first = run_all(c);
  const std::string manifest_bytes = read_file(out.manifest());
  const std::string report_bytes = read_file(out.report(CorruptionMode::kMnelm));
  CHECK(fs::exists(out.timings()));
  CHECK(fs::exists(out.comparison_json()));

  std::set<std::string> listed;
  for (const json& a : first.content.at("artifacts")) {
    const std::string rel = a.at("path");
    listed.insert(rel);
    CHECK(sha256_file(out.root / rel) == a.at("sha256"));
  }
  for (const auto& entry : fs::recursive_directory_iterator(out.root)) {
    if (!entry.is_regular_file()) continue;
    const std::string rel = entry.path().lexically_relative(out.root).generic_string();
    if (rel == "manifest.json" || rel == "timings.json") continue;
    CHECK_MESSAGE(listed.count(rel) == 1, rel);
  }
  CHECK(listed.count("ner/ner.ckpt") == 1);
  CHECK(listed.count("mlm/finetune.ckpt") == 1);
  CHECK(first.content.at("inputs").contains("pretrain_corpus"));

  const json& arms = first.content.at("arms");
  json mnelm_arm = arms.at("MNELM"), mlm_arm = arms.at("MLM");
  CHECK(mnelm_arm == mlm_arm);

  RunManifest second = run_all(c);
  CHECK(read_file(out.manifest()) == manifest_bytes);
  CHECK(read_file(out.report(CorruptionMode::kMnelm)) == report_bytes);
  CHECK(manifest_file_list(second.content) == manifest_file_list(first.content));

  SUBCASE("the config snapshot reproduces the run") {
    PipelineConfig again = load_config(out.config_snapshot(), {});
    CHECK(again.to_json() == c.to_json());
  }
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(MNELM_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST_CASE("cli exit codes") {
  Workspace ws;
  const std::string config = "--config " + ws.config_path().string();
  CHECK(run_cli("--help") == 0);
  CHECK(run_cli("frobnicate") == 2);
  CHECK(run_cli("train-ner --config " + (ws.root() / "absent.json").string()) == 2);
  CHECK(run_cli("train-ner " + config + " --set ner.epochs=-1") == 2);
  CHECK(run_cli("pretrain " + config + " --mode bert") == 2);
  CHECK(run_cli("pretrain " + config + " --mode mnelm") == 3);
  testing::write_file(ws.root() / "broken.jsonl", "{not json\n");
  CHECK(run_cli("train-ner " + config + " --set paths.annotations_train=" +
                (ws.root() / "broken.jsonl").string()) == 4);
  const fs::path out = ws.root() / "cli-out";
  CHECK(run_cli("train-ner " + config + " --seed 5 --out " + out.string()) == 0);
  CHECK(fs::exists(out / "ner" / "ner.ckpt"));
  json snapshot = json::parse(read_file(out / "config.snapshot.json"));
  CHECK(snapshot.at("seed") == 5);
  CHECK(run_cli("gen-synthetic --out " + (ws.root() / "gen").string()) == 0);
  CHECK(fs::exists(ws.root() / "gen" / "config.json"));
  CHECK_NOTHROW(load_config(ws.root() / "gen" / "config.json", {}));
}

}  // namespace
}  // namespace mnelm
