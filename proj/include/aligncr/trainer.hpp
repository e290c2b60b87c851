#pragma once

#include <string>
#include <vector>

#include "aligncr/checkpoint.hpp"
#include "aligncr/config.hpp"
#include "aligncr/evalkit.hpp"

namespace aligncr {

// SGD with momentum and a linear learning-rate decay over the whole run.
class SgdOptimizer {
 public:
  SgdOptimizer(OptimizerConfig cfg, std::uint64_t total_steps)
      : cfg_(cfg), total_steps_(std::max<std::uint64_t>(1, total_steps)) {}

  double current_lr() const;
  // Applies accumulated gradients and advances the step counter. Gradients
  // are left for the caller to zero.
  void step(ModelParams& params);

  OptState& state() { return state_; }
  const OptState& state() const { return state_; }

 private:
  OptimizerConfig cfg_;
  std::uint64_t total_steps_;
  OptState state_;
};

// Supervised Align-Consistency loss of one utterance: augment into two
// branches, forward both, compose the loss. Branch RNG streams are keyed by
// (run seed, epoch, utterance id) so batch order does not matter.
LossReport supervised_utterance_loss(const Utterance& utt, const LabelSeq& target,
                                     ModelParams& params, const RunConfig& cfg,
                                     std::uint64_t epoch, double lambda0, double lambda1);

struct TrainOutput {
  std::vector<std::string> epoch_checkpoints;
  std::string final_checkpoint;  // average of the last avg_last epochs
  std::string metrics_path;
};

// Full supervised training run; writes config snapshot, per-epoch
// checkpoints, the averaged final checkpoint and a metrics log into
// cfg.out_dir.
TrainOutput train_supervised(const Corpus& labeled, const RunConfig& cfg);

}  // namespace aligncr
