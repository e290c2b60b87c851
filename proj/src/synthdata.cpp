#include "aligncr/synthdata.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

namespace fs = std::filesystem;

namespace aligncr {

void GenSpec::validate() const {
  if (vocab_size < 1) throw std::invalid_argument("GenSpec: vocab_size must be >= 1");
  if (feat_dim < 1) throw std::invalid_argument("GenSpec: feat_dim must be >= 1");
  if (label_len_min < 1 || label_len_max < label_len_min)
    throw std::invalid_argument("GenSpec: bad label length range");
  if (dur_min < 1 || dur_max < dur_min) throw std::invalid_argument("GenSpec: bad duration range");
  if (noise_stddev < 0.0) throw std::invalid_argument("GenSpec: negative noise stddev");
  if (num_utterances < 1) throw std::invalid_argument("GenSpec: num_utterances must be >= 1");
}

Corpus generate_corpus(const GenSpec& spec) {
  spec.validate();
  std::mt19937_64 proto_rng(spec.prototype_seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  // Prototype vectors for token ids 1..vocab_size.
  std::vector<std::vector<double>> protos(spec.vocab_size + 1, std::vector<double>(spec.feat_dim));
  for (int v = 1; v <= spec.vocab_size; ++v)
    for (int f = 0; f < spec.feat_dim; ++f) protos[v][f] = gauss(proto_rng);

  Corpus corpus;
  std::mt19937_64 rng(spec.corpus_seed);
  std::uniform_int_distribution<int> len_dist(spec.label_len_min, spec.label_len_max);
  std::uniform_int_distribution<int> tok_dist(1, spec.vocab_size);
  std::uniform_int_distribution<int> dur_dist(spec.dur_min, spec.dur_max);
  for (int u = 0; u < spec.num_utterances; ++u) {
    Utterance utt;
    char buf[32];
    std::snprintf(buf, sizeof buf, "utt%06d", u);
    utt.id = buf;
    const int L = len_dist(rng);
    LabelSeq y(L);
    std::vector<int> durs(L);
    int T = 0;
    for (int i = 0; i < L; ++i) {
      y[i] = tok_dist(rng);
      durs[i] = dur_dist(rng);
      T += durs[i];
    }
    utt.features = Array::zeros({T, spec.feat_dim});
    int t = 0;
    for (int i = 0; i < L; ++i)
      for (int d = 0; d < durs[i]; ++d, ++t)
        for (int f = 0; f < spec.feat_dim; ++f)
          utt.features.at(t, f) = protos[y[i]][f] + spec.noise_stddev * gauss(rng);
    utt.transcript = std::move(y);
    corpus.utts.push_back(std::move(utt));
  }
  return corpus;
}

PoolSplit split_pools(const Corpus& corpus, double labeled_fraction, std::uint64_t seed) {
  if (labeled_fraction <= 0.0 || labeled_fraction > 1.0)
    throw std::invalid_argument("split_pools: labeled_fraction must be in (0,1]");
  std::vector<std::size_t> order(corpus.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const std::size_t n_labeled =
      std::max<std::size_t>(1, static_cast<std::size_t>(labeled_fraction * corpus.size() + 0.5));
  PoolSplit split;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const Utterance& utt = corpus.utts[order[i]];
    if (i < n_labeled) {
      split.labeled.utts.push_back(utt);
    } else {
      Utterance stripped = utt;
      if (stripped.transcript) {
        split.hidden_refs[stripped.id] = *stripped.transcript;
        stripped.transcript.reset();
      }
      split.unlabeled.utts.push_back(std::move(stripped));
    }
  }
  return split;
}

namespace {

void write_file_atomic(const fs::path& path, const std::string& bytes) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

}  // namespace

void write_corpus(const Corpus& corpus, const std::string& dir) {
  fs::create_directories(dir);
  std::string blob;
  std::ostringstream manifest;
  std::uint64_t offset = 0;  // in doubles
  for (const Utterance& utt : corpus.utts) {
    manifest << utt.id << '\t' << utt.features.rows() << '\t' << utt.features.cols() << '\t'
             << offset << '\t';
    if (utt.transcript) {
      for (std::size_t i = 0; i < utt.transcript->size(); ++i) {
        if (i) manifest << ' ';
        manifest << (*utt.transcript)[i];
      }
      if (utt.transcript->empty()) manifest << "*";  // present but empty
    } else {
      manifest << '-';
    }
    manifest << '\n';
    const std::size_t pos = blob.size();
    blob.resize(pos + utt.features.size() * sizeof(double));
    std::memcpy(blob.data() + pos, utt.features.v.data(), utt.features.size() * sizeof(double));
    offset += utt.features.size();
  }
  write_file_atomic(fs::path(dir) / "features.bin", blob);
  write_file_atomic(fs::path(dir) / "manifest.tsv", manifest.str());
}

Corpus read_corpus(const std::string& dir) {
  const fs::path mpath = fs::path(dir) / "manifest.tsv";
  const fs::path bpath = fs::path(dir) / "features.bin";
  std::ifstream mf(mpath);
  if (!mf) throw std::runtime_error("cannot open manifest: " + mpath.string());
  std::ifstream bf(bpath, std::ios::binary);
  if (!bf) throw std::runtime_error("cannot open feature blob: " + bpath.string());
  std::string blob((std::istreambuf_iterator<char>(bf)), std::istreambuf_iterator<char>());

  Corpus corpus;
  std::string line;
  int lineno = 0;
  while (std::getline(mf, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    Utterance utt;
    std::uint64_t T, F, offset;
    std::string transcript_field;
    if (!(ss >> utt.id >> T >> F >> offset))
      throw std::runtime_error("malformed manifest record at line " + std::to_string(lineno) +
                               " in " + mpath.string());
    std::getline(ss, transcript_field);
    // Strip the leading tab.
    if (!transcript_field.empty() && transcript_field[0] == '\t') transcript_field.erase(0, 1);
    if (transcript_field.empty())
      throw std::runtime_error("missing transcript field at line " + std::to_string(lineno) +
                               " in " + mpath.string());
    if ((offset + T * F) * sizeof(double) > blob.size())
      throw std::runtime_error("feature blob truncated for record '" + utt.id + "' at line " +
                               std::to_string(lineno));
    utt.features = Array::zeros({static_cast<int>(T), static_cast<int>(F)});
    std::memcpy(utt.features.v.data(), blob.data() + offset * sizeof(double),
                T * F * sizeof(double));
    if (transcript_field == "-") {
      utt.transcript.reset();
    } else if (transcript_field == "*") {
      utt.transcript = LabelSeq{};
    } else {
      LabelSeq y;
      std::istringstream ts(transcript_field);
      int tok;
      while (ts >> tok) y.push_back(tok);
      if (!ts.eof())
        throw std::runtime_error("bad transcript token at line " + std::to_string(lineno) + " in " +
                                 mpath.string());
      utt.transcript = std::move(y);
    }
    corpus.utts.push_back(std::move(utt));
  }
  return corpus;
}

}  // namespace aligncr
