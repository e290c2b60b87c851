#include "aligncr/objectives.hpp"

namespace aligncr {

void LossWeights::validate() const {
  if (alpha < 0.0 || alpha > 1.0) throw std::invalid_argument("LossWeights: alpha must be in [0,1]");
  if (lambda0 < 0.0 || lambda1 < 0.0 || gamma < 0.0 || lambda0_u < 0.0 || lambda1_u < 0.0)
    throw std::invalid_argument("LossWeights: weights must be >= 0");
}

LossReport nar_loss(const StepOutputs& steps, const LabelSeq& y, double alpha, double unreachable_cap) {
  if (steps.logits.empty()) throw std::invalid_argument("nar_loss: no step outputs");
  LossReport rep;
  CtcLoss base = ctc_loss(steps.logits[0], y, unreachable_cap);
  if (!base.reachable) ++rep.flagged;
  rep.components["ctc"] = base.loss.data().v[0];
  rep.total = alpha * base.loss;
  if (alpha < 1.0) {
    const int S = steps.steps();
    if (S < 1) throw std::invalid_argument("nar_loss: alpha < 1 requires refinement steps");
    for (int s = 1; s <= S; ++s) {
      CtcLoss r = ctc_loss(steps.logits[s], y, unreachable_cap);
      if (!r.reachable) ++rep.flagged;
      rep.components["refine_s" + std::to_string(s)] = r.loss.data().v[0];
      rep.total = rep.total + ((1.0 - alpha) / S) * r.loss;
    }
  }
  return rep;
}

LossReport align_consistency_loss(const StepOutputs& b1, const StepOutputs& b2, const LabelSeq& y,
                                  double alpha, double lambda0, double lambda1, double unreachable_cap) {
  if (b1.logits.size() != b2.logits.size())
    throw std::invalid_argument("align_consistency_loss: branch step counts differ");
  LossReport rep;
  LossReport nar1 = nar_loss(b1, y, alpha, unreachable_cap);
  LossReport nar2 = nar_loss(b2, y, alpha, unreachable_cap);
  rep.flagged = nar1.flagged + nar2.flagged;
  rep.components["nar_branch1"] = nar1.total.data().v[0];
  rep.components["nar_branch2"] = nar2.total.data().v[0];
  rep.total = 0.5 * (nar1.total + nar2.total);

  Value cr0 = cr_loss(b1.log_probs[0], b2.log_probs[0]);
  rep.components["cr_s0"] = cr0.data().v[0];
  rep.total = rep.total + lambda0 * cr0;

  const int S = alpha < 1.0 ? b1.steps() : 0;
  for (int s = 1; s <= S; ++s) {
    Value crs = cr_loss(b1.log_probs[s], b2.log_probs[s]);
    rep.components["cr_s" + std::to_string(s)] = crs.data().v[0];
    rep.total = rep.total + (lambda1 / S) * crs;
  }
  return rep;
}

Value semi_total_loss(const std::vector<Value>& labeled, const std::vector<Value>& unlabeled,
                      double gamma) {
  if (labeled.empty() && unlabeled.empty())
    throw std::invalid_argument("semi_total_loss: both pools empty");
  Value total;
  if (!labeled.empty()) {
    Value acc = labeled[0];
    for (std::size_t i = 1; i < labeled.size(); ++i) acc = acc + labeled[i];
    total = (1.0 / labeled.size()) * acc;
  }
  if (!unlabeled.empty()) {
    Value acc = unlabeled[0];
    for (std::size_t i = 1; i < unlabeled.size(); ++i) acc = acc + unlabeled[i];
    Value u = (gamma / unlabeled.size()) * acc;
    total = total.defined() ? total + u : u;
  }
  return total;
}

}  // namespace aligncr
