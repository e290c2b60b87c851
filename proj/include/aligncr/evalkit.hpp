#pragma once

#include <map>
#include <vector>

#include "aligncr/model.hpp"
#include "aligncr/synthdata.hpp"

namespace aligncr {

struct ErrorRateReport {
  int substitutions = 0;
  int deletions = 0;
  int insertions = 0;
  int reference_length = 0;
  bool empty_reference = false;

  int errors() const { return substitutions + deletions + insertions; }
  // Empty-reference convention: denominator clamped to 1.
  double rate() const { return static_cast<double>(errors()) / std::max(1, reference_length); }
};

// Minimal edit script between reference and hypothesis. On cost ties the
// backtrace prefers substitution over insertion over deletion.
ErrorRateReport edit_distance(const LabelSeq& ref, const LabelSeq& hyp);

// Greedy-decodes clean inputs at each requested inference step and pools the
// edit counts over the corpus before dividing.
std::map<int, ErrorRateReport> evaluate_corpus(const Corpus& corpus, ModelParams& params,
                                               const std::vector<int>& steps_to_report);

// Arithmetic mean of every parameter array; configs must match.
ModelParams average_checkpoints(const std::vector<ModelParams>& checkpoints);

}  // namespace aligncr
