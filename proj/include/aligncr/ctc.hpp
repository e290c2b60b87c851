#pragma once

#include <limits>
#include <vector>

#include "aligncr/alignment.hpp"
#include "aligncr/autodiff.hpp"

namespace aligncr {

// Log-probability of the empty alignment set. Assigned deliberately; the DP
// never reaches it through overflow.
inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

// y interleaved with blanks: [blank, y1, blank, y2, ..., blank].
std::vector<int> expand_target(const LabelSeq& y);

struct ForwardBackward {
  Array alpha;      // T' x (2|y|+1), log space
  Array beta;       // same shape
  Array occupancy;  // T' x |V|, posterior symbol occupancy (linear space)
  double log_lik = kLogZero;
};

// Forward-backward over the blank-interleaved target lattice. `log_probs`
// is T' x |V| row-normalized log-probabilities.
ForwardBackward forward_backward(const Array& log_probs, const LabelSeq& y);

// log sum over B^-1(y) of the path probability; kLogZero when unreachable.
double ctc_log_likelihood(const Array& log_probs, const LabelSeq& y);

struct CtcLoss {
  Value loss;           // scalar on the tape
  bool reachable = true;
  double log_lik = kLogZero;
};

// -log p(y | x) from raw logits, with the analytic softmax-minus-occupancy
// gradient wired into the tape. An unreachable target yields a constant
// capped loss with zero gradient and reachable=false.
CtcLoss ctc_loss(const Value& logits, const LabelSeq& y, double unreachable_cap = 1e4);

}  // namespace aligncr
