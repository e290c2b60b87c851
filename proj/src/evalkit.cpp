#include "aligncr/evalkit.hpp"

#include <algorithm>

namespace aligncr {

ErrorRateReport edit_distance(const LabelSeq& ref, const LabelSeq& hyp) {
  const int R = static_cast<int>(ref.size()), H = static_cast<int>(hyp.size());
  // d[i][j] = min edits between ref[0..i) and hyp[0..j).
  std::vector<std::vector<int>> d(R + 1, std::vector<int>(H + 1));
  for (int i = 0; i <= R; ++i) d[i][0] = i;
  for (int j = 0; j <= H; ++j) d[0][j] = j;
  for (int i = 1; i <= R; ++i)
    for (int j = 1; j <= H; ++j) {
      const int sub = d[i - 1][j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      const int ins = d[i][j - 1] + 1;
      const int del = d[i - 1][j] + 1;
      d[i][j] = std::min({sub, ins, del});
    }

  ErrorRateReport rep;
  rep.reference_length = R;
  rep.empty_reference = R == 0;
  int i = R, j = H;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && d[i][j] == d[i - 1][j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1)) {
      if (ref[i - 1] != hyp[j - 1]) ++rep.substitutions;
      --i;
      --j;
    } else if (j > 0 && d[i][j] == d[i][j - 1] + 1) {
      ++rep.insertions;
      --j;
    } else {
      ++rep.deletions;
      --i;
    }
  }
  return rep;
}

std::map<int, ErrorRateReport> evaluate_corpus(const Corpus& corpus, ModelParams& params,
                                               const std::vector<int>& steps_to_report) {
  if (steps_to_report.empty()) throw std::invalid_argument("evaluate_corpus: no steps requested");
  const int max_step = *std::max_element(steps_to_report.begin(), steps_to_report.end());
  if (max_step < 0) throw std::invalid_argument("evaluate_corpus: negative step");

  std::map<int, ErrorRateReport> pooled;
  for (int s : steps_to_report) pooled[s] = ErrorRateReport{};
  for (const Utterance& utt : corpus.utts) {
    if (!utt.transcript) throw std::invalid_argument("evaluate_corpus: corpus must be labeled");
    StepOutputs out = forward_all_steps(utt.features, params, max_step);
    for (int s : steps_to_report) {
      const LabelSeq hyp = collapse(out.alignments[s]);
      const ErrorRateReport r = edit_distance(*utt.transcript, hyp);
      ErrorRateReport& p = pooled[s];
      p.substitutions += r.substitutions;
      p.deletions += r.deletions;
      p.insertions += r.insertions;
      p.reference_length += r.reference_length;
      p.empty_reference = p.empty_reference || r.empty_reference;
    }
  }
  return pooled;
}

ModelParams average_checkpoints(const std::vector<ModelParams>& checkpoints) {
  if (checkpoints.empty()) throw std::invalid_argument("average_checkpoints: empty list");
  for (const ModelParams& mp : checkpoints)
    if (!(mp.config == checkpoints[0].config))
      throw std::invalid_argument("average_checkpoints: incompatible model configs");

  ModelParams avg;
  avg.config = checkpoints[0].config;
  const double inv = 1.0 / checkpoints.size();
  // Mean as x0 + mean(x_i - x0): exact for identical inputs and accurate
  // for the nearby parameters of adjacent epochs.
  for (const auto& [name, v] : checkpoints[0].params) {
    const Array& base = v.data();
    Array acc = Array::zeros(base.shape);
    for (const ModelParams& mp : checkpoints) {
      const Array& a = mp.at(name).data();
      if (!a.same_shape(acc)) throw std::invalid_argument("average_checkpoints: shape mismatch for " + name);
      for (std::size_t i = 0; i < acc.size(); ++i) acc.v[i] += a.v[i] - base.v[i];
    }
    for (std::size_t i = 0; i < acc.size(); ++i) acc.v[i] = base.v[i] + acc.v[i] * inv;
    avg.params.emplace(name, Value::leaf(std::move(acc), true));
  }
  return avg;
}

}  // namespace aligncr
