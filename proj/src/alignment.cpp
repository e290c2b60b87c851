#include "aligncr/alignment.hpp"

namespace aligncr {

LabelSeq collapse(const AlignmentSeq& a) {
  LabelSeq out;
  int prev = -1;
  for (int t : a) {
    if (t != prev && t != kBlankId) out.push_back(t);
    prev = t;
  }
  return out;
}

std::vector<AlignmentSeq> inverse_enumerate(const LabelSeq& y, int T, const Vocab& vocab) {
  if (T > 6 || vocab.size > 4)
    throw std::invalid_argument("inverse_enumerate: guard exceeded (need T <= 6 and |V| <= 4)");
  if (T < 0) throw std::invalid_argument("inverse_enumerate: negative T");
  std::vector<AlignmentSeq> out;
  AlignmentSeq path(T, 0);
  // Odometer over all |V|^T paths.
  while (true) {
    if (collapse(path) == y) out.push_back(path);
    int i = T - 1;
    while (i >= 0 && path[i] == vocab.size - 1) path[i--] = 0;
    if (i < 0) break;
    ++path[i];
  }
  return out;
}

AlignmentSeq greedy_decode(const Array& p) {
  if (p.rank() != 2 || p.rows() < 1) throw std::invalid_argument("greedy_decode: need a non-empty matrix");
  AlignmentSeq out(p.rows());
  for (int t = 0; t < p.rows(); ++t) {
    int best = 0;
    for (int v = 1; v < p.cols(); ++v)
      if (p.at(t, v) > p.at(t, best)) best = v;
    out[t] = best;
  }
  return out;
}

}  // namespace aligncr
