// tools/prosody_mdn.cc

// Copyright 2026  The prosody-mdn Authors
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

// Command-line driver: corpus generation, training, evaluation, sampling,
// cloning and gradient checking. Every command takes --seed; outputs are
// written atomically and depend only on the inputs and the seed.

#include <cstdio>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "prosody/checkpoint.h"
#include "prosody/cloning.h"
#include "prosody/error.h"
#include "prosody/io.h"
#include "prosody/metrics.h"
#include "prosody/parallel.h"
#include "prosody/synthdata.h"
#include "prosody/training.h"

namespace prosody {
namespace {

constexpr int kGradCheckFailed = 8;

Json LoadConfigFile(const std::string &path) {
  std::string text;
  try {
    text = ReadFile(path);
  } catch (const IoError &e) {
    throw ConfigError(e.what());
  }
  return ParseConfigJson(text, path);
}

PhoneSeq ParsePhones(const std::string &text) {
  PhoneSeq phones;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(item, &used);
    } catch (const std::exception &) {
      used = 0;
    }
    if (used == 0 || used != item.size() || item.front() == '-')
      throw ConfigError("--phones: \"" + item + "\" is not a phone id");
    phones.push_back(static_cast<std::size_t>(v));
  }
  if (phones.empty()) throw ConfigError("--phones: empty sequence");
  return phones;
}

Json EmbeddingsJson(const std::vector<Embedding> &e) { return Json(e); }

void WriteJson(const std::string &path, const Json &j) {
  WriteFileAtomic(path, j.dump(1) + "\n");
}

struct Common {
  std::uint64_t seed = 0;
  std::size_t threads = 0;
  std::string out;
};

void AddCommon(CLI::App *cmd, Common &c, bool need_out = true) {
  cmd->add_option("--seed", c.seed, "Random seed")->required();
  cmd->add_option("--threads", c.threads,
                  "Worker threads (default: $PROSODY_MDN_THREADS, else all cores)");
  auto *out = cmd->add_option("--out", c.out, "Output path");
  if (need_out) out->required();
}

int CmdGenData(const std::string &config, const Common &c) {
  Json j = LoadConfigFile(config);
  OracleSpec spec = OracleSpecFromJson(j);
  spec.seed = c.seed;
  const OracleCorpus corpus = GenCorpus(spec, ResolveThreads(c.threads));
  SaveOracleCorpus(c.out, corpus);
  std::cerr << "wrote " << corpus.train.size() << " train and " << corpus.test.size()
            << " test utterances to " << c.out << "\n";
  return 0;
}

int CmdTrain(const std::string &corpus_dir, const std::string &config,
             const std::string &history, const std::string &resume, const Common &c) {
  TrainConfig tc = TrainConfigFromJson(LoadConfigFile(config));
  tc.seed = c.seed;
  const OracleCorpus data = LoadOracleCorpus(corpus_dir);
  const PredictorConfig model = ResolveForCorpus(tc.model, data);
  std::optional<TrainState> start;
  if (!resume.empty()) {
    Checkpoint ckpt = LoadCheckpoint(resume);
    if (!ckpt.train_state) throw ConfigError(resume + ": checkpoint has no training state");
    start = std::move(ckpt.train_state);
  }
  const TrainState state =
      Train(data.train, data.test, model, tc, ResolveThreads(c.threads), std::move(start),
            [](const EpochRecord &r) {
              std::fprintf(stderr, "epoch %zu train_nll %.6f test_nll %.6f lr %.3g\n", r.epoch,
                           r.train_nll, r.test_nll, r.lr);
            });
  for (const std::string &w : state.warnings) std::cerr << "warning: " << w << "\n";
  SaveCheckpoint(c.out, FromTrainState(state, tc));
  if (!history.empty()) WriteFileAtomic(history, HistoryCsv(state.history));
  return 0;
}

int CmdEval(const std::string &ckpt_path, const std::string &corpus_dir,
            const std::string &csv, std::size_t samples, int src_opt, int tgt_opt,
            const Common &c) {
  const Checkpoint ckpt = LoadCheckpoint(ckpt_path);
  const OracleCorpus data = LoadOracleCorpus(corpus_dir);
  const PredictorParams &params = ckpt.params;
  CheckCorpusForModel(data.train, params.config());
  CheckCorpusForModel(data.test, params.config());
  const std::size_t threads = ResolveThreads(c.threads);
  const std::size_t speakers = data.oracle.spec.speakers;
  const std::size_t src = src_opt >= 0 ? static_cast<std::size_t>(src_opt) : 0;
  const std::size_t tgt = tgt_opt >= 0 ? static_cast<std::size_t>(tgt_opt)
                                       : (speakers > 1 ? 1 : 0);

  Json report;
  report["num_components"] = params.config().num_components;
  report["corpus_fingerprint"] = CorpusFingerprint(data.train);
  report["train_nll"] = MeanNllPerPhone(params, data.train, threads);
  report["test_nll"] = MeanNllPerPhone(params, data.test, threads);
  report["oracle_test_ll"] = OracleMeanLoglikPerPhone(data.oracle, data.test);
  const std::vector<double> active = ActiveComponents(params, data.test);
  report["active_components"] = Json{{"0.1", active[0]}, {"0.01", active[1]}};
  report["diversity"] = CorpusDiversity(params, data.test, samples, c.seed, threads);
  report["diversity_samples"] = samples;
  const CloningReport cloning =
      ComputeCloningReport(data.oracle, data.train, data.test, params, src, tgt, c.seed);
  report["cloning"] = CloningReportToJson(cloning);
  report["cloning"]["src_speaker"] = src;
  report["cloning"]["tgt_speaker"] = tgt;
  WriteJson(c.out, report);
  if (!csv.empty()) {
    std::string text =
        "num_components,train_nll,test_nll,oracle_test_ll,active_0.1,active_0.01,diversity,"
        "component_accuracy,random_accuracy,majority_accuracy,mean_correlation,random_correlation,"
        "sampled_correlation,affinity_margin\n";
    text += std::to_string(params.config().num_components);
    for (double v : {report["train_nll"].get<double>(), report["test_nll"].get<double>(),
                     report["oracle_test_ll"].get<double>(), active[0], active[1],
                     report["diversity"].get<double>(), cloning.component_accuracy,
                     cloning.random_accuracy, cloning.majority_accuracy, cloning.mean_correlation,
                     cloning.random_correlation, cloning.sampled_correlation,
                     cloning.affinity_margin})
      text += "," + FormatDouble(v);
    WriteFileAtomic(csv, text + "\n");
  }
  return 0;
}

int CmdSample(const std::string &ckpt_path, const std::string &phones_text, int speaker,
              const Common &c) {
  const Checkpoint ckpt = LoadCheckpoint(ckpt_path);
  const PhoneSeq phones = ParsePhones(phones_text);
  const SpeakerRef spk = speaker >= 0 ? SpeakerRef(static_cast<std::size_t>(speaker))
                                      : std::nullopt;
  RandomSource rng(c.seed);
  const SampledSequence s = SampleSequence(phones, spk, ckpt.params, rng);
  Json out{{"phones", phones},
           {"seed", c.seed},
           {"embeddings", EmbeddingsJson(s.embeddings)},
           {"components", s.components}};
  if (spk) out["speaker"] = *spk;
  WriteJson(c.out, out);
  return 0;
}

int CmdClone(const std::string &ckpt_path, const std::string &corpus_dir,
             const std::string &split, std::size_t utterance, std::size_t tgt,
             const std::string &emission, const Common &c) {
  const Checkpoint ckpt = LoadCheckpoint(ckpt_path);
  const OracleCorpus data = LoadOracleCorpus(corpus_dir);
  const Corpus *records = nullptr;
  if (split == "train") records = &data.train;
  else if (split == "test") records = &data.test;
  else throw ConfigError("--split must be train or test");
  if (utterance >= records->size())
    throw IndexError("--utterance " + std::to_string(utterance) + " but the " + split +
                     " split has " + std::to_string(records->size()) + " records");
  const Utterance &u = (*records)[utterance];
  const PredictorConfig &config = ckpt.params.config();
  CheckCorpusForModel(Corpus{u}, config);
  if (config.MultiSpeaker() && tgt >= config.speakers)
    throw IndexError("--tgt-speaker out of range");
  CloneOptions options;
  if (emission == "sample") options.emission = CloneEmission::kSampleComponent;
  else if (emission != "mean") throw ConfigError("--emission must be mean or sample");
  options.seed = c.seed;
  const SpeakerRef src = ModelSpeaker(config, u);
  const SpeakerRef tgt_ref = config.MultiSpeaker() ? SpeakerRef(tgt) : std::nullopt;
  const CloneResult r = ClonePipeline(u.phones, src, u.embeddings, tgt_ref, ckpt.params, options);
  WriteJson(c.out, Json{{"split", split},
                        {"utterance", utterance},
                        {"phones", u.phones},
                        {"src_speaker", u.speaker},
                        {"tgt_speaker", tgt},
                        {"emission", emission},
                        {"indices", r.indices},
                        {"embeddings", EmbeddingsJson(r.embeddings)}});
  return 0;
}

int CmdGradCheck(const std::string &config, const Common &c) {
  GradCheckConfig gc;
  if (!config.empty()) gc = GradCheckConfigFromJson(LoadConfigFile(config));
  const GradCheckReport report = RunGradCheck(gc, c.seed);
  Json arrays = Json::array();
  for (const ArrayCheck &a : report.arrays) {
    std::fprintf(stdout, "%-20s size %5zu  max_rel_error %.3e  %s\n", a.name.c_str(), a.size,
                 a.max_rel_error, a.pass ? "ok" : "FAIL");
    arrays.push_back(Json{{"name", a.name},
                          {"size", a.size},
                          {"max_rel_error", a.max_rel_error},
                          {"worst_index", a.worst_index},
                          {"pass", a.pass}});
  }
  std::fprintf(stdout, "max_rel_error %.3e tolerance %.1e: %s\n", report.max_rel_error,
               report.tolerance, report.pass ? "PASS" : "FAIL");
  if (!c.out.empty())
    WriteJson(c.out, Json{{"arrays", arrays},
                          {"loss", report.loss},
                          {"max_rel_error", report.max_rel_error},
                          {"tolerance", report.tolerance},
                          {"pass", report.pass}});
  return report.pass ? 0 : kGradCheckFailed;
}

int CmdCurves(const std::vector<std::string> &checkpoints, const std::string &summary,
              const Common &c) {
  std::vector<LlRun> runs;
  for (const std::string &path : checkpoints) {
    const Checkpoint ckpt = LoadCheckpoint(path);
    if (!ckpt.train_state) throw ConfigError(path + ": checkpoint has no training history");
    runs.push_back({ckpt.params.config().num_components, ckpt.train_state->history,
                    ckpt.train_state->corpus_fingerprint});
  }
  const LlCurves curves = ComputeLlCurves(std::move(runs));
  WriteFileAtomic(c.out, curves.csv);
  if (!summary.empty()) {
    Json rows = Json::array();
    for (const LlCurveRow &r : curves.rows)
      rows.push_back(Json{{"num_components", r.num_components},
                          {"train_ll", r.train_ll},
                          {"test_ll", r.test_ll},
                          {"gap", r.gap}});
    WriteJson(summary, Json{{"rows", rows},
                            {"test_ll_increases", curves.test_ll_increases},
                            {"gap_shrinks", curves.gap_shrinks}});
  }
  return 0;
}

int Run(int argc, char **argv) {
  CLI::App app{"Mixture density network prosody modelling and cloning"};
  app.require_subcommand(1);

  Common c;
  std::string config, corpus, checkpoint, history, resume, csv, phones, split = "test",
                                                              emission = "mean", summary;
  std::size_t samples = 3, utterance = 0, tgt_speaker = 0;
  int speaker = -1, src = -1, tgt = -1;
  std::vector<std::string> checkpoints;

  auto *gen = app.add_subcommand("gen-data", "Generate an oracle corpus directory");
  gen->add_option("--config", config, "Oracle spec JSON")->required();
  AddCommon(gen, c);

  auto *train = app.add_subcommand("train", "Train a predictor");
  train->add_option("--corpus", corpus, "Corpus directory")->required();
  train->add_option("--config", config, "Training config JSON")->required();
  train->add_option("--history", history, "Per-epoch history CSV");
  train->add_option("--resume", resume, "Continue from this checkpoint");
  AddCommon(train, c);

  auto *eval = app.add_subcommand("eval", "Evaluate a checkpoint on a corpus");
  eval->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();
  eval->add_option("--corpus", corpus, "Corpus directory")->required();
  eval->add_option("--csv", csv, "Also write a one-row CSV summary");
  eval->add_option("--samples", samples, "Samples per utterance for diversity");
  eval->add_option("--src-speaker", src, "Cloning source speaker (default 0)");
  eval->add_option("--tgt-speaker", tgt, "Cloning target speaker (default 1 if present)");
  AddCommon(eval, c);

  auto *sample = app.add_subcommand("sample", "Sample an embedding sequence");
  sample->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();
  sample->add_option("--phones", phones, "Comma-separated phone ids")->required();
  sample->add_option("--speaker", speaker, "Speaker id (multi-speaker models)");
  AddCommon(sample, c);

  auto *clone = app.add_subcommand("clone", "Clone a corpus utterance to a target speaker");
  clone->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();
  clone->add_option("--corpus", corpus, "Corpus directory")->required();
  clone->add_option("--split", split, "train or test");
  clone->add_option("--utterance", utterance, "Record index in the split")->required();
  clone->add_option("--tgt-speaker", tgt_speaker, "Target speaker")->required();
  clone->add_option("--emission", emission, "mean or sample");
  AddCommon(clone, c);

  auto *gradcheck = app.add_subcommand("gradcheck", "Check BPTT gradients numerically");
  gradcheck->add_option("--config", config, "Gradient check config JSON");
  AddCommon(gradcheck, c, false);

  auto *curves = app.add_subcommand("curves", "Log-likelihood table across trained models");
  curves->add_option("--checkpoint", checkpoints, "Trained checkpoints")->required();
  curves->add_option("--summary", summary, "Trend summary JSON");
  AddCommon(curves, c);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return static_cast<int>(ErrorKind::kConfig);
  }

  if (*gen) return CmdGenData(config, c);
  if (*train) return CmdTrain(corpus, config, history, resume, c);
  if (*eval) return CmdEval(checkpoint, corpus, csv, samples, src, tgt, c);
  if (*sample) return CmdSample(checkpoint, phones, speaker, c);
  if (*clone) return CmdClone(checkpoint, corpus, split, utterance, tgt_speaker, emission, c);
  if (*gradcheck) return CmdGradCheck(config, c);
  if (*curves) return CmdCurves(checkpoints, summary, c);
  return static_cast<int>(ErrorKind::kConfig);
}

}  // namespace
}  // namespace prosody

int main(int argc, char **argv) {
  try {
    return prosody::Run(argc, argv);
  } catch (const prosody::Error &e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
