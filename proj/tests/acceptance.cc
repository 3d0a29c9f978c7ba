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

// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Criteria 6-8 share one end-to-end run on the bundled
// synthetic corpus, performed twice for the reproducibility check.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gradcheck.h"
#include "mnelm/corruptor.h"
#include "mnelm/networks.h"
#include "mnelm/pipeline.h"
#include "mnelm/schedule.h"
#include "mnelm/seq2seq.h"
#include "mnelm/synthetic.h"
#include "oracles.h"
#include "test_util.h"

namespace mnelm {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream out;
  out << std::setprecision(precision) << v;
  return out.str();
}

bool all_passed = true;

void emit(int id, const std::string& name, const Outcome& o) {
  all_passed = all_passed && o.pass;
  std::cout << (o.pass ? "PASS" : "FAIL") << " [" << id << "] " << name << ": " << o.detail
            << std::endl;
}

// Runs `body`, then appends its wall time and the runtime budget to the
// outcome; exceeding the budget fails the criterion.
Outcome timed(double budget_seconds, const std::function<Outcome()>& body) {
  Timer t;
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double s = t.seconds();
  if (budget_seconds > 0) {
    o.detail += "; time " + fmt(s, 3) + "s (limit " + fmt(budget_seconds, 3) + "s)";
    o.pass = o.pass && s < budget_seconds;
  }
  return o;
}

Outcome metric_oracles() {
  testing::ExhaustiveResult rouge = testing::exhaustive_rouge_check(6);
  double ne_error = 0;
  std::size_t ne_mismatch = 0;
  Rng rng(1);
  const int ne_trials = 20000;
  for (int trial = 0; trial < ne_trials; ++trial) {
    EntitySet a, b;
    for (std::size_t i = rng.below(7); i > 0; --i) a.insert("e" + std::to_string(rng.below(9)));
    for (std::size_t i = rng.below(7); i > 0; --i) b.insert("e" + std::to_string(rng.below(9)));
    NeScores s = ne_scores(a, b);
    testing::OracleNe o = testing::oracle_ne(a, b);
    if (s.correct != o.correct || s.precision.has_value() != o.precision_defined ||
        s.recall.has_value() != o.recall_defined) {
      ++ne_mismatch;
      continue;
    }
    if (s.precision) ne_error = std::max(ne_error, std::abs(*s.precision - o.precision));
    if (s.recall) ne_error = std::max(ne_error, std::abs(*s.recall - o.recall));
  }
  const double max_error = std::max(rouge.max_error, ne_error);
  Outcome out;
  out.pass = rouge.lcs_mismatches == 0 && ne_mismatch == 0 && max_error < 1e-9;
  out.detail = std::to_string(rouge.pairs) + " sequence pairs (length <= 6, 3 symbols), " +
               std::to_string(ne_trials) + " entity-set pairs; LCS mismatches " +
               std::to_string(rouge.lcs_mismatches) + ", max abs error " + fmt(max_error);
  return out;
}

Outcome sample_summary_format() {
  Outcome out{true, ""};
  for (const testing::SampleSummaryFixture& f : testing::sample_summary_fixtures()) {
    NeScores s = ne_scores(extract_entity_set(f.summary_tokens, f.summary_spans),
                           extract_entity_set(f.source_tokens, f.source_spans));
    const std::string line = format_ne_line(s);
    out.pass = out.pass && line == f.expected_line;
    if (!out.detail.empty()) out.detail += " | ";
    out.detail += f.name + " \"" + line + "\" (" + std::to_string(s.correct) + "/" +
                  std::to_string(s.in_summary) + "/" + std::to_string(s.in_source) + ")";
  }
  return out;
}

Outcome masking_statistics() {
  SyntheticOptions options;
  options.ner_train_sentences = 200;
  options.pretrain_documents = 2000;
  SyntheticCorpus corpus = generate_synthetic(options);
  NerConfig nc;
  nc.hidden = 32;
  nc.heads = 2;
  nc.layers = 1;
  nc.ff_hidden = 64;
  nc.max_len = 32;
  nc.epochs = 3;
  nc.learning_rate = 2e-3;
  NerModel tagger = train_ner(corpus.ner_train, corpus.ner_dev, nc, 5).model;
  Vocabulary vocab = build_vocab(corpus.pretrain, 1000);

  CorruptionConfig mnelm;
  mnelm.mode = CorruptionMode::kMnelm;
  mnelm.mask_probability = 0.5;
  mnelm.seed = 11;
  std::size_t spans = 0, masked_spans = 0, outputs = 0, local_outputs = 0;
  corrupt_corpus(corpus.pretrain, vocab, &tagger, mnelm, [&](std::size_t, MaskedPair pair) {
    std::vector<EntitySpan> predicted = tagger.predict(pair.original.tokens);
    std::set<int> inside, masked(pair.masked_positions.begin(), pair.masked_positions.end());
    for (const EntitySpan& s : predicted) {
      ++spans;
      masked_spans += masked.count(s.start);
      for (int k = s.start; k < s.end; ++k) inside.insert(k);
    }
    bool local = pair.is_consistent();
    for (int k : pair.masked_positions) local = local && inside.count(k);
    ++outputs;
    local_outputs += local;
  });

  CorruptionConfig mlm = mnelm;
  mlm.mode = CorruptionMode::kMlm;
  std::size_t tokens = 0, masked_tokens = 0;
  corrupt_corpus(corpus.pretrain, vocab, nullptr, mlm, [&](std::size_t, MaskedPair pair) {
    tokens += pair.original.size();
    masked_tokens += pair.masked_positions.size();
  });

  const double span_rate = static_cast<double>(masked_spans) / spans;
  const double token_rate = static_cast<double>(masked_tokens) / tokens;
  Outcome out;
  out.pass = spans >= 10000 && tokens >= 10000 && std::abs(span_rate - 0.5) <= 0.02 &&
             std::abs(token_rate - 0.5) <= 0.02 && local_outputs == outputs;
  out.detail = "MNELM " + std::to_string(masked_spans) + "/" + std::to_string(spans) +
               " spans = " + fmt(span_rate) + ", MLM " + std::to_string(masked_tokens) + "/" +
               std::to_string(tokens) + " tokens = " + fmt(token_rate) +
               " (target 0.5 +/- 0.02); locality " + std::to_string(local_outputs) + "/" +
               std::to_string(outputs) + " outputs";
  return out;
}

Outcome gradient_check() {
  nn::EncoderDecoderShape shape;
  shape.vocab_size = 12;
  shape.hidden = 8;
  shape.heads = 2;
  shape.encoder_layers = 1;
  shape.decoder_layers = 1;
  shape.ff_hidden = 16;
  shape.max_source_len = 8;
  shape.max_target_len = 8;
  nn::EncoderDecoder<double> net(shape, 21);
  // A denoising pair: masked source, original as target.
  const std::vector<int> original = {5, 9, 7, 11, 6, 8};
  std::vector<int> source = original;
  source[1] = source[2] = Vocabulary::kMask;
  std::vector<int> dec_in = {Vocabulary::kBos}, targets = original;
  dec_in.insert(dec_in.end(), original.begin(), original.end());
  targets.push_back(Vocabulary::kEos);
  net.loss(source, dec_in, targets, true);
  testing::GradCheckResult r = testing::check_gradients(
      net.parameters(), [&] { return net.loss(source, dec_in, targets, false); }, 200, 3);
  Outcome out;
  out.pass = r.coordinates >= 100 && r.failures == 0;
  out.detail = std::to_string(r.coordinates) + " coordinates, " + std::to_string(r.failures) +
               " above 1e-3, max relative error " + fmt(r.max_relative_error, 3);
  return out;
}

Outcome schedule_values() {
  const TrainingSchedule pre = TrainingSchedule::pretraining();
  const TrainingSchedule fine = TrainingSchedule::finetuning();
  const double values[] = {lr_at(pre, 0), lr_at(pre, 10000), lr_at(fine, 0), lr_at(fine, 5000)};
  const double expected[] = {5e-5, 2.5e-5, 2e-5, 1e-5};
  Outcome out{true, ""};
  const char* labels[] = {"pretrain@0", "pretrain@10000", "finetune@0", "finetune@5000"};
  for (int i = 0; i < 4; ++i) {
    out.pass = out.pass && values[i] == expected[i];
    out.detail += std::string(i ? ", " : "") + labels[i] + " = " + fmt(values[i], 17);
  }
  return out;
}

std::vector<double> read_losses(const fs::path& csv) {
  std::ifstream in(csv);
  std::string line;
  std::getline(in, line);
  std::vector<double> losses;
  while (std::getline(in, line)) losses.push_back(std::stod(line.substr(line.find(',') + 1)));
  return losses;
}

struct EndToEnd {
  fs::path data;
  PipelineConfig config;
  double seconds = 0;
};

Outcome training_sanity(const EndToEnd& run, const SyntheticCorpus& corpus) {
  const OutputLayout out{run.config.paths.output_dir};
  std::ostringstream detail;
  bool pass = true;

  json ner = json::parse(testing::read_file(out.ner_report()));
  double best_f1 = 0;
  int best_epoch = 0;
  for (const json& h : ner.at("history")) {
    if (h.at("dev_macro_f1").get<double>() > best_f1) {
      best_f1 = h.at("dev_macro_f1");
      best_epoch = h.at("epoch");
    }
  }
  const std::size_t epochs = ner.at("history").size();
  pass = pass && epochs <= 10 && best_f1 >= 0.9;
  detail << "NER dev macro-F1 " << fmt(best_f1) << " (epoch " << best_epoch << " of " << epochs
         << ")";

  for (CorruptionMode mode : {CorruptionMode::kMnelm, CorruptionMode::kMlm}) {
    std::vector<double> losses = read_losses(out.pretrain_loss(mode));
    const std::size_t tail = std::min<std::size_t>(20, losses.size());
    double final_loss = 0;
    for (std::size_t i = losses.size() - tail; i < losses.size(); ++i) final_loss += losses[i];
    final_loss /= static_cast<double>(tail);
    const double ratio = final_loss / losses.front();
    pass = pass && losses.size() <= 500 && ratio <= 0.5;
    detail << "; " << mode_name(mode) << " pretrain loss " << fmt(losses.front()) << " -> "
           << fmt(final_loss) << " (ratio " << fmt(ratio, 3) << ", " << losses.size()
           << " steps)";
  }

  // Memorization with the pipeline's model shape.
  const Document& doc = corpus.train.front();
  Seq2SeqModel model = init_model(run.config.seq2seq,
                                  Vocabulary::load(out.vocabulary()), 77);
  TrainingSchedule schedule;
  schedule.initial_lr = 1e-3;
  schedule.decay_interval_steps = 1000;
  schedule.max_steps = 150;
  finetune(model, std::vector<Document>{doc}, schedule, 3);
  TokenSequence source = tokenize(doc.text, model.vocab());
  TokenSequence target = tokenize(*doc.summary, model.vocab());
  const double loss = sequence_loss(model, model.prepare_source(source.ids), target.ids);
  const bool reproduced = generate(model, source, run.config.max_summary_len).tokens == target.tokens;
  pass = pass && loss < 0.01 && reproduced;
  detail << "; memorized pair loss " << fmt(loss, 3) << ", generation "
         << (reproduced ? "reproduces" : "differs from") << " target";
  detail << "; end-to-end run " << fmt(run.seconds, 3) << "s";
  return {pass, detail.str()};
}

Outcome mechanism_contrast(const EndToEnd& run) {
  const OutputLayout out{run.config.paths.output_dir};
  Vocabulary vocab = Vocabulary::load(out.vocabulary());
  std::map<std::string, std::set<int>> gold;
  for (const AnnotatedSentence& s : load_annotations(run.data / "pretrain_gold.jsonl")) {
    std::set<int>& positions = gold[s.doc_id];
    for (const EntitySpan& span : s.spans) {
      for (int k = span.start; k < span.end; ++k) positions.insert(k);
    }
  }
  auto fraction_on_entities = [&](CorruptionMode mode, std::size_t* entity_tokens,
                                  std::size_t* all_tokens) {
    std::size_t masks = 0, on_entity = 0;
    for (const CorruptedRecord& r : load_corrupted(out.corrupted(mode), vocab)) {
      const std::set<int>& g = gold.at(r.id);
      for (int k : r.pair.masked_positions) on_entity += g.count(k);
      masks += r.pair.masked_positions.size();
      if (entity_tokens) *entity_tokens += g.size();
      if (all_tokens) *all_tokens += r.pair.original.size();
    }
    return static_cast<double>(on_entity) / static_cast<double>(masks);
  };
  std::size_t entity_tokens = 0, all_tokens = 0;
  const double mnelm = fraction_on_entities(CorruptionMode::kMnelm, nullptr, nullptr);
  const double mlm = fraction_on_entities(CorruptionMode::kMlm, &entity_tokens, &all_tokens);
  const double frequency = static_cast<double>(entity_tokens) / static_cast<double>(all_tokens);
  Outcome o;
  o.pass = mnelm == 1.0 && std::abs(mlm - frequency) <= 0.05;
  o.detail = "masks on gold entity tokens: MNELM " + fmt(mnelm, 6) + " (target 1.0), MLM " +
             fmt(mlm) + " vs entity-token frequency " + fmt(frequency) + " (tolerance 0.05)";
  return o;
}

std::vector<fs::path> compared_files(const OutputLayout& out) {
  std::vector<fs::path> files = {out.manifest(), out.ner_checkpoint(), out.ner_report(),
                                 out.comparison_json(), out.comparison_table()};
  for (CorruptionMode mode : {CorruptionMode::kMnelm, CorruptionMode::kMlm}) {
    for (const fs::path& p : {out.pretrain_checkpoint(mode), out.finetune_checkpoint(mode),
                              out.report(mode), out.corrupted(mode)}) {
      files.push_back(p);
    }
  }
  return files;
}

Outcome reproducibility(const EndToEnd& run) {
  const OutputLayout out{run.config.paths.output_dir};
  const fs::path aside = run.data / "first-run";
  fs::remove_all(aside);
  std::vector<fs::path> files = compared_files(out);
  for (const fs::path& f : files) {
    const fs::path copy = aside / f.lexically_relative(out.root);
    fs::create_directories(copy.parent_path());
    fs::copy_file(f, copy);
  }
  run_all(run.config);
  std::size_t identical = 0;
  std::string differing;
  for (const fs::path& f : files) {
    const fs::path rel = f.lexically_relative(out.root);
    if (testing::read_file(f) == testing::read_file(aside / rel)) {
      ++identical;
    } else {
      differing += " " + rel.generic_string();
    }
  }
  Outcome o;
  o.pass = identical == files.size();
  o.detail = std::to_string(identical) + "/" + std::to_string(files.size()) +
             " files byte-identical across two run-all invocations (manifest, checkpoints, "
             "reports)";
  if (!differing.empty()) o.detail += "; differing:" + differing;
  return o;
}

}  // namespace
}  // namespace mnelm

int main(int argc, char** argv) {
  using namespace mnelm;
  CLI::App app{"Acceptance suite"};
  std::string workdir;
  app.add_option("--workdir", workdir, "keep the end-to-end run here instead of a temp dir");
  CLI11_PARSE(app, argc, argv);

  std::optional<testing::TempDir> temp;
  fs::path data;
  if (workdir.empty()) {
    temp.emplace("acceptance");
    data = temp->path();
  } else {
    data = fs::absolute(workdir);
    fs::create_directories(data);
  }

  emit(1, "metric oracle equivalence", timed(60, metric_oracles));
  emit(2, "sample summary format", timed(0, sample_summary_format));
  emit(3, "masking statistics", timed(60, masking_statistics));
  emit(4, "gradient correctness", timed(120, gradient_check));
  emit(5, "schedule values", timed(0, schedule_values));

  SyntheticCorpus corpus = generate_synthetic(SyntheticOptions{});
  write_synthetic(data, corpus);
  std::ofstream(data / "config.json") << reference_synthetic_config().dump(2) << "\n";
  EndToEnd run{data, {}, 0};
  Outcome setup{true, ""};
  Timer total;
  try {
    run.config = load_config(data / "config.json", {});
    Timer t;
    run_all(run.config);
    run.seconds = t.seconds();
  } catch (const std::exception& e) {
    setup = {false, std::string("run-all failed: ") + e.what()};
  }
  if (setup.pass) {
    Outcome sanity = timed(0, [&] { return training_sanity(run, corpus); });
    const double elapsed = total.seconds();
    sanity.detail += "; total " + fmt(elapsed, 3) + "s (limit 900s)";
    sanity.pass = sanity.pass && elapsed < 900;
    emit(6, "training sanity", sanity);
    emit(7, "mechanism contrast", timed(0, [&] { return mechanism_contrast(run); }));
    emit(8, "reproducibility", timed(0, [&] { return reproducibility(run); }));
  } else {
    emit(6, "training sanity", setup);
    emit(7, "mechanism contrast", setup);
    emit(8, "reproducibility", setup);
  }
  std::cout << (all_passed ? "ALL CRITERIA PASSED" : "SOME CRITERIA FAILED") << std::endl;
  return all_passed ? 0 : 1;
}
