#pragma once

#include <vector>

#include "aligncr/array.hpp"

namespace aligncr {

// Token id 0 is always the blank.
inline constexpr int kBlankId = 0;

struct Vocab {
  int size = 0;  // number of token ids including the blank

  explicit Vocab(int size_) : size(size_) {
    if (size < 2) throw std::invalid_argument("Vocab: need blank plus at least one token");
  }
  int blank() const { return kBlankId; }
};

// Frame-level token path over the blank-augmented vocabulary.
using AlignmentSeq = std::vector<int>;

// Collapsed transcript, blank-free.
using LabelSeq = std::vector<int>;

// The collapse map B: merge consecutive repeats, then delete blanks.
LabelSeq collapse(const AlignmentSeq& a);

// Exhaustive enumeration of B^-1(y) over all |V|^T paths. Oracle use only;
// refuses inputs past the blowup guard (T <= 6, |V| <= 4).
std::vector<AlignmentSeq> inverse_enumerate(const LabelSeq& y, int T, const Vocab& vocab);

// Per-frame argmax over a T' x |V| log-probability matrix; ties go to the
// smallest token id.
AlignmentSeq greedy_decode(const Array& frame_log_probs);

}  // namespace aligncr
