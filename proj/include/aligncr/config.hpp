#pragma once

#include <string>

#include "aligncr/augment.hpp"
#include "aligncr/model.hpp"
#include "aligncr/objectives.hpp"
#include "aligncr/synthdata.hpp"

namespace aligncr {

struct OptimizerConfig {
  double lr = 0.05;
  double momentum = 0.9;
  // Learning rate decays linearly to lr * final_lr_scale over the run.
  double final_lr_scale = 0.1;
};

// Merged view of everything one run needs. Serialized as flat key=value
// lines; a snapshot is written to the output directory before training.
struct RunConfig {
  ModelConfig model;
  LossWeights weights;
  AugmentPolicy augment;
  GenSpec gen;
  OptimizerConfig optim;

  int epochs = 20;
  int batch_size = 8;
  int avg_last = 5;
  int start_epoch = 0;  // resume point; requires optimizer state in the checkpoint
  std::uint64_t seed = 1;

  double labeled_fraction = 0.1;
  std::uint64_t split_seed = 1234;
  std::string pl_source = "last-step";  // "last-step" or "ctc"
  std::string init_checkpoint;

  std::string data_dir;
  std::string out_dir;

  void validate() const;
};

// key=value text, one per line, '#' comments. Unknown keys are an error
// naming the key.
RunConfig load_run_config(const std::string& path);
void apply_override(RunConfig& cfg, const std::string& key, const std::string& value);
std::string serialize_run_config(const RunConfig& cfg);

}  // namespace aligncr
