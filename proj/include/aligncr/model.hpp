#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "aligncr/alignment.hpp"
#include "aligncr/autodiff.hpp"

namespace aligncr {

struct ModelConfig {
  int feat_dim = 8;
  int hidden_dim = 32;
  int vocab_size = 17;  // including the blank
  int embed_dim = 16;
  int encoder_layers = 1;  // per-frame MLP blocks before the attention layer
  int decoder_layers = 1;
  int refine_steps = 2;  // S
  int pool_window = 2;
  int pool_stride = 2;
  std::uint64_t seed = 1;

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

// Named parameter store. std::map keeps a deterministic iteration order for
// updates and serialization.
struct ModelParams {
  ModelConfig config;
  std::map<std::string, Value> params;

  static ModelParams init(const ModelConfig& cfg);

  Value& at(const std::string& name);
  const Value& at(const std::string& name) const;
  void zero_grads();
  std::size_t count_scalars() const;
};

// Per-step posteriors and greedy alignments, p^(0) .. p^(S).
struct StepOutputs {
  std::vector<Value> logits;     // pre-softmax, fed to the CTC loss
  std::vector<Value> log_probs;  // log_softmax of the above, fed to CR
  std::vector<AlignmentSeq> alignments;

  int steps() const { return static_cast<int>(logits.size()) - 1; }
  int frames() const { return logits.empty() ? 0 : logits[0].data().rows(); }
};

// Encoder with 2x time pooling: h = Enc(x), shape T' x H.
Value encode(const Array& features, ModelParams& params);

// CTC projection head; returns pre-softmax logits (T' x |V|).
Value ctc_head(const Value& h, ModelParams& params);

// One refinement pass Dec(prev_align, h); returns logits. The previous
// alignment is consumed as plain token ids, so no gradient flows through it.
Value refine_step(const AlignmentSeq& prev_align, const Value& h, ModelParams& params);

// Full pipeline: base CTC posteriors plus S refinement steps.
StepOutputs forward_all_steps(const Array& features, ModelParams& params, int refine_steps);

}  // namespace aligncr
