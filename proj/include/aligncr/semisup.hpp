#pragma once

#include "aligncr/trainer.hpp"

namespace aligncr {

enum class PseudoLabelSource { BaseCTC, LastStep };

PseudoLabelSource parse_pl_source(const std::string& name);

// Greedy decode + collapse on the clean (unaugmented) input with the current
// parameters. No gradients are recorded.
LabelSeq generate_pseudo_label(const Array& clean_features, ModelParams& params,
                               PseudoLabelSource source, int refine_steps);

struct SelfTrainStepReport {
  double total = 0.0;
  std::map<std::string, double> components;
  int flagged = 0;
  double pl_mean_len = 0.0;
  bool updated = false;
};

// One optimizer step on a labeled batch plus an unlabeled batch:
// pseudo-labels are generated with the current parameters, held fixed,
// both batches are augmented into branch pairs, and L_semi is minimized.
// Flagged (unreachable-target) utterances are excluded from the batch means.
SelfTrainStepReport self_train_step(const std::vector<const Utterance*>& labeled_batch,
                                    const std::vector<const Utterance*>& unlabeled_batch,
                                    ModelParams& params, SgdOptimizer& opt, const RunConfig& cfg,
                                    std::uint64_t epoch);

// Online self-training over the two pools; writes per-epoch checkpoints, a
// metrics log and per-epoch pseudo-label quality (scored against
// hidden_refs) into cfg.out_dir. Starts from cfg.init_checkpoint.
TrainOutput run_self_training(const Corpus& labeled, const Corpus& unlabeled,
                              const std::map<std::string, LabelSeq>& hidden_refs,
                              const RunConfig& cfg);

}  // namespace aligncr
