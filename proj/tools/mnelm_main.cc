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

// Command-line driver for the training and evaluation stages.
//
// Exit codes: 0 success, 2 configuration error, 3 missing input or
// checkpoint, 4 malformed data, 1 anything else.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mnelm/corruptor.h"
#include "mnelm/errors.h"
#include "mnelm/metrics.h"
#include "mnelm/pipeline.h"
#include "mnelm/synthetic.h"

namespace {

namespace fs = std::filesystem;

int exit_code(const mnelm::Error& e) {
  switch (e.category()) {
    case mnelm::Error::Category::kConfig: return 2;
    case mnelm::Error::Category::kMissingArtifact: return 3;
    case mnelm::Error::Category::kData: return 4;
    case mnelm::Error::Category::kOther: break;
  }
  return 1;
}

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<std::string> overrides;
  std::string mode;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool with_mode) {
  cmd->add_option("-c,--config", o.config, "pipeline config (JSON)");
  cmd->add_option("--seed", o.seed, "global seed");
  cmd->add_option("-o,--out", o.out, "output directory");
  cmd->add_option("--set", o.overrides, "override a config value, e.g. ner.epochs=3");
  if (with_mode) {
    cmd->add_option("-m,--mode", o.mode, "corruption arm: mnelm or mlm")->required();
  }
}

mnelm::PipelineConfig resolve(const CommonOptions& o) {
  std::vector<std::string> overrides = o.overrides;
  if (o.seed) overrides.push_back("seed=" + std::to_string(*o.seed));
  if (!o.out.empty()) overrides.push_back("paths.output_dir=\"" + o.out + "\"");
  return mnelm::load_config(o.config, overrides);
}

void print_report(const mnelm::MetricsReport& report) {
  const mnelm::AggregateMetrics& a = report.aggregate;
  mnelm::NeScores ne;
  ne.precision = a.ne_precision;
  ne.recall = a.ne_recall;
  std::cout << report.mode << ": " << mnelm::format_ne_line(ne) << "; ROUGE-1 F1 = "
            << a.rouge.rouge1.f1 << "; ROUGE-2 F1 = " << a.rouge.rouge2.f1
            << "; ROUGE-L F1 = " << a.rouge.rouge_l.f1 << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Masked named entity pretraining for summarization"};
  app.require_subcommand(1);

  CommonOptions opts;
  auto* train_ner = app.add_subcommand("train-ner", "train the entity tagger");
  auto* corrupt = app.add_subcommand("corrupt", "corrupt the pretraining corpus");
  auto* pretrain = app.add_subcommand("pretrain", "corrupt and pretrain one arm");
  auto* finetune = app.add_subcommand("finetune", "fine-tune one arm for summarization");
  auto* evaluate = app.add_subcommand("evaluate", "score one fine-tuned arm");
  auto* compare = app.add_subcommand("compare", "tabulate both arms' reports");
  auto* run_all = app.add_subcommand("run-all", "run every stage for both arms");
  add_common(train_ner, opts, false);
  add_common(corrupt, opts, true);
  add_common(pretrain, opts, true);
  add_common(finetune, opts, true);
  add_common(evaluate, opts, true);
  add_common(compare, opts, false);
  add_common(run_all, opts, false);

  std::string synth_dir;
  mnelm::SyntheticOptions synth;
  auto* gen = app.add_subcommand("gen-synthetic", "write the synthetic corpus and a config");
  gen->add_option("-o,--out", synth_dir, "directory to create")->required();
  gen->add_option("--seed", synth.seed, "corpus seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) {
      mnelm::write_synthetic(synth_dir, mnelm::generate_synthetic(synth));
      const fs::path config = fs::path(synth_dir) / "config.json";
      std::ofstream(config) << mnelm::reference_synthetic_config().dump(2) << "\n";
      std::cout << "wrote " << config.string() << "\n";
      return 0;
    }
    const mnelm::PipelineConfig config = resolve(opts);
    const mnelm::CorruptionMode mode =
        opts.mode.empty() ? mnelm::CorruptionMode::kMnelm : mnelm::parse_mode(opts.mode);
    if (train_ner->parsed()) {
      std::cout << mnelm::run_stage_ner(config).string() << "\n";
    } else if (corrupt->parsed()) {
      std::cout << mnelm::run_stage_corrupt(config, mode).string() << "\n";
    } else if (pretrain->parsed()) {
      std::cout << mnelm::run_stage_pretrain(config, mode).string() << "\n";
    } else if (finetune->parsed()) {
      std::cout << mnelm::run_stage_finetune(config, mode).string() << "\n";
    } else if (evaluate->parsed()) {
      print_report(mnelm::run_stage_evaluate(config, mode));
    } else if (compare->parsed()) {
      mnelm::write_comparison(config);
      std::cout << mnelm::OutputLayout{config.paths.output_dir}.comparison_table().string()
                << "\n";
    } else if (run_all->parsed()) {
      mnelm::RunManifest manifest = mnelm::run_all(config);
      std::cout << manifest.path.string() << "\n";
    }
  } catch (const mnelm::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
