// src/checkpoint.cc

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

#include "prosody/checkpoint.h"

#include "prosody/error.h"

namespace prosody {

Json PredictorConfigToJson(const PredictorConfig &c) {
  return Json{{"num_components", c.num_components},
              {"dim", c.dim},
              {"hidden", c.hidden},
              {"recurrent", c.recurrent},
              {"vocab", c.vocab},
              {"speakers", c.speakers},
              {"cell", CellTypeName(c.cell)},
              {"logvar_min", c.clamp.min},
              {"logvar_max", c.clamp.max},
              {"embedding_shift", c.norm.shift},
              {"embedding_scale", c.norm.scale}};
}

PredictorConfig PredictorConfigFromJson(const Json &j) {
  const std::string ctx = "model config";
  RejectUnknownKeys(j, {"num_components", "dim", "hidden", "recurrent", "vocab",
                        "speakers", "cell", "logvar_min", "logvar_max", "embedding_shift",
                        "embedding_scale"},
                    ctx);
  PredictorConfig c;
  ReadField(j, "num_components", c.num_components, ctx);
  ReadField(j, "dim", c.dim, ctx);
  ReadField(j, "hidden", c.hidden, ctx);
  ReadField(j, "recurrent", c.recurrent, ctx);
  ReadField(j, "vocab", c.vocab, ctx);
  ReadField(j, "speakers", c.speakers, ctx);
  ReadField(j, "logvar_min", c.clamp.min, ctx);
  ReadField(j, "logvar_max", c.clamp.max, ctx);
  ReadField(j, "embedding_shift", c.norm.shift, ctx);
  ReadField(j, "embedding_scale", c.norm.scale, ctx);
  if (j.contains("cell")) {
    std::string cell;
    ReadField(j, "cell", cell, ctx);
    c.cell = ParseCellType(cell);
  }
  c.Validate();
  return c;
}

Json ParamSetToJson(const ParamSet &set) {
  Json arrays = Json::array();
  for (const ParamArray &a : set)
    arrays.push_back(Json{{"name", a.name}, {"shape", a.shape}, {"values", a.values}});
  return arrays;
}

void ParamSetFromJson(const Json &j, ParamSet &into, const std::string &what) {
  if (!j.is_array() || j.size() != into.size())
    throw ShapeError(what + ": expected " + std::to_string(into.size()) + " arrays");
  for (std::size_t i = 0; i < into.size(); ++i) {
    const Json &a = j[i];
    RejectUnknownKeys(a, {"name", "shape", "values"}, what);
    ParamArray &dst = into[i];
    const auto name = a.at("name").get<std::string>();
    const auto shape = a.at("shape").get<std::vector<std::size_t>>();
    if (name != dst.name || shape != dst.shape)
      throw ShapeError(what + ": array " + std::to_string(i) + " is " + name +
                       " but the model expects " + dst.name + " with its shape");
    auto values = a.at("values").get<std::vector<double>>();
    if (values.size() != dst.values.size())
      throw ShapeError(what + ": array " + name + " has the wrong number of values");
    dst.values = std::move(values);
  }
}

Json CheckpointToJson(const Checkpoint &ckpt) {
  Json j{{"format_version", kCheckpointFormatVersion},
         {"config", PredictorConfigToJson(ckpt.params.config())},
         {"params", ParamSetToJson(ckpt.params.arrays())}};
  if (ckpt.train_config) j["train_config"] = TrainConfigToJson(*ckpt.train_config);
  if (ckpt.train_state) {
    const TrainState &s = *ckpt.train_state;
    Json history = Json::array();
    for (const EpochRecord &r : s.history)
      history.push_back(Json{{"epoch", r.epoch},
                             {"train_nll", r.train_nll},
                             {"test_nll", r.test_nll},
                             {"lr", r.lr}});
    j["training"] = Json{{"step", s.step},
                         {"epochs_done", s.epochs_done},
                         {"corpus_fingerprint", s.corpus_fingerprint},
                         {"adam_m", ParamSetToJson(s.moments.m)},
                         {"adam_v", ParamSetToJson(s.moments.v)},
                         {"history", history},
                         {"warnings", s.warnings}};
  }
  return j;
}

Checkpoint CheckpointFromJson(const Json &j) {
  RejectUnknownKeys(j, {"format_version", "config", "params", "train_config", "training"},
                    "checkpoint");
  try {
    const int version = j.at("format_version").get<int>();
    if (version != kCheckpointFormatVersion)
      throw IoError("checkpoint: unsupported format_version " + std::to_string(version));
    PredictorParams params(PredictorConfigFromJson(j.at("config")));
    ParamSet arrays = params.arrays();
    ParamSetFromJson(j.at("params"), arrays, "checkpoint params");
    params.SetArrays(std::move(arrays));
    Checkpoint ckpt{params, std::nullopt, std::nullopt};
    if (j.contains("train_config")) ckpt.train_config = TrainConfigFromJson(j["train_config"]);
    if (j.contains("training")) {
      const Json &t = j["training"];
      RejectUnknownKeys(t, {"step", "epochs_done", "corpus_fingerprint", "adam_m", "adam_v",
                            "history", "warnings"},
                        "checkpoint.training");
      TrainState s{params, ZeroMoments(params.arrays()), 0, 0, {}, {}, {}};
      s.step = t.at("step").get<std::uint64_t>();
      s.epochs_done = t.at("epochs_done").get<std::size_t>();
      s.corpus_fingerprint = t.at("corpus_fingerprint").get<std::string>();
      ParamSetFromJson(t.at("adam_m"), s.moments.m, "checkpoint adam_m");
      ParamSetFromJson(t.at("adam_v"), s.moments.v, "checkpoint adam_v");
      for (const Json &r : t.at("history")) {
        RejectUnknownKeys(r, {"epoch", "train_nll", "test_nll", "lr"}, "checkpoint.history");
        s.history.push_back({r.at("epoch").get<std::size_t>(), r.at("train_nll").get<double>(),
                             r.at("test_nll").get<double>(), r.at("lr").get<double>()});
      }
      s.warnings = t.at("warnings").get<std::vector<std::string>>();
      ckpt.train_state = std::move(s);
    }
    return ckpt;
  } catch (const Json::exception &e) {
    throw IoError(std::string("checkpoint: malformed document: ") + e.what());
  }
}

void SaveCheckpoint(const std::filesystem::path &path, const Checkpoint &ckpt) {
  WriteFileAtomic(path, CheckpointToJson(ckpt).dump() + "\n");
}

Checkpoint LoadCheckpoint(const std::filesystem::path &path) {
  const std::string text = ReadFile(path);
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error &e) {
    throw IoError(path.string() + ": " + e.what());
  }
  return CheckpointFromJson(j);
}

Checkpoint FromTrainState(const TrainState &state, const TrainConfig &config) {
  return Checkpoint{state.params, config, state};
}

}  // namespace prosody
