#pragma once

#include <cstdint>
#include <string>
#include <utility>

#include "aligncr/array.hpp"

namespace aligncr {

struct AugmentPolicy {
  int num_time_masks = 2;
  int max_time_mask_len = 0;  // 0 = 10% of T, resolved per utterance
  int num_feat_masks = 2;
  int max_feat_mask_len = 0;  // 0 = 25% of F
  double mask_value = 0.0;

  void validate() const;
};

// Rectangle masks; all other entries are bit-identical to the input.
Array apply_time_mask(const Array& x, int start, int len, double mask_value = 0.0);
Array apply_feat_mask(const Array& x, int start, int len, double mask_value = 0.0);

// Deterministic RNG stream key, independent of batch order.
std::uint64_t augment_seed(std::uint64_t global_seed, std::uint64_t epoch,
                           const std::string& utt_id, int branch);

// One masked copy of x drawn from the given stream seed.
Array augment_one(const Array& x, const AugmentPolicy& policy, std::uint64_t seed);

// The two branches x~1, x~2 from one clean input; sub-streams for the two
// branches are derived from `seed` and are independent.
std::pair<Array, Array> augment_pair(const Array& x, const AugmentPolicy& policy, std::uint64_t seed);

}  // namespace aligncr
