#pragma once

#include "aligncr/autodiff.hpp"

namespace aligncr {

// KL(target || live) for one normalized log-probability row. Plain-number
// form, used by tests and diagnostics.
double kl_frame(const std::vector<double>& target_logp, const std::vector<double>& live_logp);

// Symmetric-KL consistency loss between two branch posteriors of identical
// shape (T' x |V| log-probabilities on the tape):
//   1/2 * sum_t [ KL(sg(p1_t), p2_t) + KL(sg(p2_t), p1_t) ]
// The KL target of each term is gradient-blocked; gradients reach each
// branch only through its live term. Sum over frames, no averaging.
Value cr_loss(const Value& logp1, const Value& logp2);

}  // namespace aligncr
