#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "aligncr/alignment.hpp"
#include "aligncr/array.hpp"

namespace aligncr {

struct Utterance {
  std::string id;
  Array features;  // T x F
  std::optional<LabelSeq> transcript;  // absent in the unlabeled pool
};

struct Corpus {
  std::vector<Utterance> utts;

  std::size_t size() const { return utts.size(); }
};

// Each token id owns a fixed random prototype feature vector; utterances are
// prototype repetitions of sampled duration plus i.i.d. Gaussian noise, so
// the token-frame alignment has to be learned.
struct GenSpec {
  int vocab_size = 16;  // non-blank tokens, ids 1..vocab_size
  int feat_dim = 8;
  int label_len_min = 3;
  int label_len_max = 8;
  int dur_min = 3;  // frames per token
  int dur_max = 8;
  double noise_stddev = 0.3;
  std::uint64_t prototype_seed = 7;
  std::uint64_t corpus_seed = 11;
  int num_utterances = 2000;

  void validate() const;
};

Corpus generate_corpus(const GenSpec& spec);

struct PoolSplit {
  Corpus labeled;
  Corpus unlabeled;  // transcripts stripped
  // Ground truth of the unlabeled pool, for pseudo-label scoring only. Never
  // fed to training.
  std::map<std::string, LabelSeq> hidden_refs;
};

PoolSplit split_pools(const Corpus& corpus, double labeled_fraction, std::uint64_t seed);

// On-disk corpus: <dir>/manifest.tsv + <dir>/features.bin (little-endian
// doubles). Round-trips bit-exactly.
void write_corpus(const Corpus& corpus, const std::string& dir);
Corpus read_corpus(const std::string& dir);

}  // namespace aligncr
