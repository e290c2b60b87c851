#include "aligncr/consistency.hpp"

#include <cmath>

namespace aligncr {

double kl_frame(const std::vector<double>& target_logp, const std::vector<double>& live_logp) {
  if (target_logp.size() != live_logp.size())
    throw std::invalid_argument("kl_frame: row lengths differ");
  double kl = 0.0;
  for (std::size_t v = 0; v < target_logp.size(); ++v)
    kl += std::exp(target_logp[v]) * (target_logp[v] - live_logp[v]);
  return kl;
}

Value cr_loss(const Value& logp1, const Value& logp2) {
  if (!logp1.data().same_shape(logp2.data()) || logp1.data().rank() != 2)
    throw std::invalid_argument("cr_loss: branch shapes differ, " + logp1.data().shape_str() +
                                " vs " + logp2.data().shape_str());
  const Value t1 = stop_gradient(logp1);
  const Value t2 = stop_gradient(logp2);
  // sum_tv exp(sg p)*(sg p - q), computed from log-probabilities directly.
  const Value term12 = sum(exp(t1) * (t1 - logp2));
  const Value term21 = sum(exp(t2) * (t2 - logp1));
  return 0.5 * (term12 + term21);
}

}  // namespace aligncr
