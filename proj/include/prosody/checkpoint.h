// include/prosody/checkpoint.h

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

#ifndef PROSODY_CHECKPOINT_H_
#define PROSODY_CHECKPOINT_H_

#include <filesystem>
#include <optional>

#include "prosody/io.h"
#include "prosody/predictor.h"
#include "prosody/training.h"

namespace prosody {

inline constexpr int kCheckpointFormatVersion = 1;

/// Model parameters plus, for checkpoints written by training, the state
/// needed to resume.
struct Checkpoint {
  PredictorParams params;
  std::optional<TrainConfig> train_config;
  std::optional<TrainState> train_state;   // its params mirror `params`
};

Json PredictorConfigToJson(const PredictorConfig &c);
PredictorConfig PredictorConfigFromJson(const Json &j);

/// Named arrays as {"name", "shape", "values"} objects in model order.
Json ParamSetToJson(const ParamSet &set);
/// Reads values into a set with the expected layout.
void ParamSetFromJson(const Json &j, ParamSet &into, const std::string &what);

Json CheckpointToJson(const Checkpoint &ckpt);
Checkpoint CheckpointFromJson(const Json &j);

void SaveCheckpoint(const std::filesystem::path &path, const Checkpoint &ckpt);
Checkpoint LoadCheckpoint(const std::filesystem::path &path);

/// Checkpoint for the end of a training run.
Checkpoint FromTrainState(const TrainState &state, const TrainConfig &config);

}  // namespace prosody

#endif  // PROSODY_CHECKPOINT_H_
