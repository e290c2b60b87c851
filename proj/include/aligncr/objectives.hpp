#pragma once

#include <map>
#include <string>

#include "aligncr/consistency.hpp"
#include "aligncr/ctc.hpp"
#include "aligncr/model.hpp"

namespace aligncr {

struct LossWeights {
  double alpha = 0.3;    // CTC vs refinement mix in the non-AR loss
  double lambda0 = 0.2;  // CR weight on the base CTC posteriors
  double lambda1 = 0.2;  // CR weight on the refinement posteriors
  double gamma = 1.0;    // unsupervised loss weight
  double lambda0_u = 0.2;
  double lambda1_u = 0.2;

  void validate() const;
};

struct LossReport {
  Value total;
  std::map<std::string, double> components;  // unweighted term values
  int flagged = 0;  // utterances/terms with an unreachable CTC target
};

// alpha=1 collapses to the pure CTC loss; refinement terms are absent.
LossReport nar_loss(const StepOutputs& steps, const LabelSeq& y, double alpha,
                    double unreachable_cap = 1e4);

// Supervised Align-Consistency loss over two augmented branches:
//   1/2 (L_nar1 + L_nar2) + lambda0 * L_cr(s=0) + lambda1/S * sum_s L_cr(s).
// With alpha=1 only the s=0 CR term applies (the CR-CTC reduction).
LossReport align_consistency_loss(const StepOutputs& branch1, const StepOutputs& branch2,
                                  const LabelSeq& y, double alpha, double lambda0, double lambda1,
                                  double unreachable_cap = 1e4);

// mean(labeled) + gamma * mean(unlabeled); either list may be empty, not both.
Value semi_total_loss(const std::vector<Value>& labeled_losses,
                      const std::vector<Value>& unlabeled_losses, double gamma);

}  // namespace aligncr
