#include "aligncr/augment.hpp"

#include <random>
#include <stdexcept>

namespace aligncr {

void AugmentPolicy::validate() const {
  if (num_time_masks < 0 || num_feat_masks < 0)
    throw std::invalid_argument("AugmentPolicy: mask counts must be >= 0");
  if (max_time_mask_len < 0 || max_feat_mask_len < 0)
    throw std::invalid_argument("AugmentPolicy: mask lengths must be >= 0");
}

namespace {

Array apply_rect(const Array& x, int r0, int r1, int c0, int c1, double value) {
  if (x.rank() != 2) throw std::invalid_argument("mask: input must be a matrix");
  if (r0 < 0 || c0 < 0 || r1 > x.rows() || c1 > x.cols() || r0 > r1 || c0 > c1)
    throw std::out_of_range("mask: rectangle out of bounds");
  Array out = x;
  for (int i = r0; i < r1; ++i)
    for (int j = c0; j < c1; ++j) out.at(i, j) = value;
  return out;
}

}  // namespace

Array apply_time_mask(const Array& x, int start, int len, double mask_value) {
  return apply_rect(x, start, start + len, 0, x.cols(), mask_value);
}

Array apply_feat_mask(const Array& x, int start, int len, double mask_value) {
  return apply_rect(x, 0, x.rows(), start, start + len, mask_value);
}

std::uint64_t augment_seed(std::uint64_t global_seed, std::uint64_t epoch,
                           const std::string& utt_id, int branch) {
  // FNV-1a, platform-independent.
  std::uint64_t h = 14695981039346656037ull;
  auto mix = [&h](std::uint64_t x) {
    for (int i = 0; i < 8; ++i) {
      h ^= (x >> (8 * i)) & 0xff;
      h *= 1099511628211ull;
    }
  };
  mix(global_seed);
  mix(epoch);
  for (unsigned char c : utt_id) {
    h ^= c;
    h *= 1099511628211ull;
  }
  mix(static_cast<std::uint64_t>(branch));
  return h;
}

Array augment_one(const Array& x, const AugmentPolicy& policy, std::uint64_t seed) {
  policy.validate();
  if (x.rank() != 2 || x.size() == 0) throw std::invalid_argument("augment: input must be a non-empty matrix");
  const int T = x.rows(), F = x.cols();
  const int max_t = policy.max_time_mask_len > 0 ? std::min(policy.max_time_mask_len, T) : std::max(1, T / 10);
  const int max_f = policy.max_feat_mask_len > 0 ? std::min(policy.max_feat_mask_len, F) : std::max(1, F / 4);

  std::mt19937_64 rng(seed);
  Array out = x;
  for (int m = 0; m < policy.num_time_masks; ++m) {
    std::uniform_int_distribution<int> len_dist(0, max_t);
    const int len = len_dist(rng);
    std::uniform_int_distribution<int> start_dist(0, T - len);
    out = apply_time_mask(out, start_dist(rng), len, policy.mask_value);
  }
  for (int m = 0; m < policy.num_feat_masks; ++m) {
    std::uniform_int_distribution<int> len_dist(0, max_f);
    const int len = len_dist(rng);
    std::uniform_int_distribution<int> start_dist(0, F - len);
    out = apply_feat_mask(out, start_dist(rng), len, policy.mask_value);
  }
  return out;
}

std::pair<Array, Array> augment_pair(const Array& x, const AugmentPolicy& policy, std::uint64_t seed) {
  std::mt19937_64 split(seed);
  const std::uint64_t s1 = split(), s2 = split();
  return {augment_one(x, policy, s1), augment_one(x, policy, s2)};
}

}  // namespace aligncr
