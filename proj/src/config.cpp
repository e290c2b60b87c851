#include "aligncr/config.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

namespace aligncr {

void RunConfig::validate() const {
  model.validate();
  weights.validate();
  augment.validate();
  gen.validate();
  if (epochs < 1) throw std::invalid_argument("config: train.epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("config: train.batch_size must be >= 1");
  if (avg_last < 1) throw std::invalid_argument("config: train.avg_last must be >= 1");
  if (start_epoch < 0 || start_epoch >= epochs)
    throw std::invalid_argument("config: train.start_epoch out of range");
  if (optim.lr <= 0.0) throw std::invalid_argument("config: optim.lr must be > 0");
  if (optim.momentum < 0.0 || optim.momentum >= 1.0)
    throw std::invalid_argument("config: optim.momentum must be in [0,1)");
  if (labeled_fraction <= 0.0 || labeled_fraction > 1.0)
    throw std::invalid_argument("config: selftrain.labeled_fraction must be in (0,1]");
  if (pl_source != "last-step" && pl_source != "ctc")
    throw std::invalid_argument("config: selftrain.pl_source must be 'last-step' or 'ctc'");
}

namespace {

struct Key {
  std::string name;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

int parse_int(const std::string& s) {
  std::size_t pos = 0;
  const int x = std::stoi(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("bad integer: " + s);
  return x;
}

double parse_double(const std::string& s) {
  std::size_t pos = 0;
  const double x = std::stod(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("bad number: " + s);
  return x;
}

std::uint64_t parse_u64(const std::string& s) {
  std::size_t pos = 0;
  const std::uint64_t x = std::stoull(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("bad unsigned integer: " + s);
  return x;
}

#define INT_KEY(keyname, field) \
  Key{keyname, [](RunConfig& c, const std::string& v) { c.field = parse_int(v); }, \
      [](const RunConfig& c) { return std::to_string(c.field); }}
#define DBL_KEY(keyname, field) \
  Key{keyname, [](RunConfig& c, const std::string& v) { c.field = parse_double(v); }, \
      [](const RunConfig& c) { return fmt_double(c.field); }}
#define U64_KEY(keyname, field) \
  Key{keyname, [](RunConfig& c, const std::string& v) { c.field = parse_u64(v); }, \
      [](const RunConfig& c) { return std::to_string(c.field); }}
#define STR_KEY(keyname, field) \
  Key{keyname, [](RunConfig& c, const std::string& v) { c.field = v; }, \
      [](const RunConfig& c) { return c.field; }}

const std::vector<Key>& key_table() {
  static const std::vector<Key> keys = {
      INT_KEY("model.feat_dim", model.feat_dim),
      INT_KEY("model.hidden_dim", model.hidden_dim),
      INT_KEY("model.vocab_size", model.vocab_size),
      INT_KEY("model.embed_dim", model.embed_dim),
      INT_KEY("model.encoder_layers", model.encoder_layers),
      INT_KEY("model.decoder_layers", model.decoder_layers),
      INT_KEY("model.refine_steps", model.refine_steps),
      INT_KEY("model.pool_window", model.pool_window),
      INT_KEY("model.pool_stride", model.pool_stride),
      DBL_KEY("loss.alpha", weights.alpha),
      DBL_KEY("loss.lambda0", weights.lambda0),
      DBL_KEY("loss.lambda1", weights.lambda1),
      DBL_KEY("loss.gamma", weights.gamma),
      DBL_KEY("loss.lambda0_u", weights.lambda0_u),
      DBL_KEY("loss.lambda1_u", weights.lambda1_u),
      INT_KEY("augment.num_time_masks", augment.num_time_masks),
      INT_KEY("augment.max_time_mask_len", augment.max_time_mask_len),
      INT_KEY("augment.num_feat_masks", augment.num_feat_masks),
      INT_KEY("augment.max_feat_mask_len", augment.max_feat_mask_len),
      DBL_KEY("augment.mask_value", augment.mask_value),
      INT_KEY("gen.vocab_size", gen.vocab_size),
      INT_KEY("gen.feat_dim", gen.feat_dim),
      INT_KEY("gen.label_len_min", gen.label_len_min),
      INT_KEY("gen.label_len_max", gen.label_len_max),
      INT_KEY("gen.dur_min", gen.dur_min),
      INT_KEY("gen.dur_max", gen.dur_max),
      DBL_KEY("gen.noise_stddev", gen.noise_stddev),
      U64_KEY("gen.prototype_seed", gen.prototype_seed),
      U64_KEY("gen.corpus_seed", gen.corpus_seed),
      INT_KEY("gen.num_utterances", gen.num_utterances),
      DBL_KEY("optim.lr", optim.lr),
      DBL_KEY("optim.momentum", optim.momentum),
      DBL_KEY("optim.final_lr_scale", optim.final_lr_scale),
      INT_KEY("train.epochs", epochs),
      INT_KEY("train.batch_size", batch_size),
      INT_KEY("train.avg_last", avg_last),
      INT_KEY("train.start_epoch", start_epoch),
      U64_KEY("train.seed", seed),
      DBL_KEY("selftrain.labeled_fraction", labeled_fraction),
      U64_KEY("selftrain.split_seed", split_seed),
      STR_KEY("selftrain.pl_source", pl_source),
      STR_KEY("selftrain.init_checkpoint", init_checkpoint),
      STR_KEY("io.data_dir", data_dir),
      STR_KEY("io.out_dir", out_dir),
  };
  return keys;
}

#undef INT_KEY
#undef DBL_KEY
#undef U64_KEY
#undef STR_KEY

}  // namespace

void apply_override(RunConfig& cfg, const std::string& key, const std::string& value) {
  for (const Key& k : key_table())
    if (k.name == key) {
      k.set(cfg, value);
      return;
    }
  throw std::invalid_argument("unknown config key: " + key);
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config file: " + path);
  RunConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    // trim
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r");
    line = line.substr(b, e - b + 1);
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected key=value");
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    auto trim = [](std::string& s) {
      const auto bb = s.find_first_not_of(" \t");
      const auto ee = s.find_last_not_of(" \t");
      s = bb == std::string::npos ? "" : s.substr(bb, ee - bb + 1);
    };
    trim(key);
    trim(value);
    apply_override(cfg, key, value);
  }
  return cfg;
}

std::string serialize_run_config(const RunConfig& cfg) {
  std::ostringstream out;
  for (const Key& k : key_table()) out << k.name << " = " << k.get(cfg) << '\n';
  return out.str();
}

}  // namespace aligncr
