#include "aligncr/model.hpp"

#include <cmath>
#include <random>

namespace aligncr {

void ModelConfig::validate() const {
  if (feat_dim < 1 || hidden_dim < 1 || embed_dim < 1) throw std::invalid_argument("ModelConfig: dimensions must be positive");
  if (vocab_size < 2) throw std::invalid_argument("ModelConfig: vocab_size must include blank plus tokens");
  if (refine_steps < 0) throw std::invalid_argument("ModelConfig: refine_steps must be >= 0");
  if (pool_window < 1 || pool_stride < 1) throw std::invalid_argument("ModelConfig: pooling must be >= 1");
  if (encoder_layers < 0 || decoder_layers < 0) throw std::invalid_argument("ModelConfig: layer counts must be >= 0");
}

namespace {

Array init_matrix(int rows, int cols, std::mt19937_64& rng) {
  // Uniform scaled by 1/sqrt(fan_in); fan_in is the input dimension (rows).
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  const double scale = 1.0 / std::sqrt(static_cast<double>(rows));
  Array w = Array::zeros({rows, cols});
  for (double& x : w.v) x = scale * dist(rng);
  return w;
}

}  // namespace

ModelParams ModelParams::init(const ModelConfig& cfg) {
  cfg.validate();
  const int F = cfg.feat_dim, H = cfg.hidden_dim, V = cfg.vocab_size, E = cfg.embed_dim;
  std::mt19937_64 rng(cfg.seed);

  ModelParams mp;
  mp.config = cfg;
  auto add_w = [&](const std::string& name, int r, int c) {
    mp.params.emplace(name, Value::leaf(init_matrix(r, c, rng), true));
  };
  auto add_b = [&](const std::string& name, int n) {
    mp.params.emplace(name, Value::leaf(Array::zeros({n}), true));
  };

  // Draw order is fixed; params map order is only for iteration.
  add_w("enc.in.W", F, H);
  add_b("enc.in.b", H);
  for (int l = 0; l < cfg.encoder_layers; ++l) {
    add_w("enc.mlp" + std::to_string(l) + ".W", H, H);
    add_b("enc.mlp" + std::to_string(l) + ".b", H);
  }
  add_w("enc.attn.Wq", H, H);
  add_w("enc.attn.Wk", H, H);
  add_w("enc.attn.Wv", H, H);
  add_w("enc.attn.Wo", H, H);
  add_b("enc.attn.bo", H);
  add_w("ctc.W", H, V);
  add_b("ctc.b", V);
  add_w("dec.emb", V, E);
  add_w("dec.in.W", E + H, H);
  add_b("dec.in.b", H);
  for (int l = 0; l < cfg.decoder_layers; ++l) {
    add_w("dec.mlp" + std::to_string(l) + ".W", H, H);
    add_b("dec.mlp" + std::to_string(l) + ".b", H);
  }
  add_w("dec.attn.Wq", H, H);
  add_w("dec.attn.Wk", H, H);
  add_w("dec.attn.Wv", H, H);
  add_w("dec.attn.Wo", H, H);
  add_b("dec.attn.bo", H);
  add_w("dec.out.W", H, V);
  add_b("dec.out.b", V);
  return mp;
}

Value& ModelParams::at(const std::string& name) {
  auto it = params.find(name);
  if (it == params.end()) throw std::out_of_range("ModelParams: unknown parameter " + name);
  return it->second;
}

const Value& ModelParams::at(const std::string& name) const {
  auto it = params.find(name);
  if (it == params.end()) throw std::out_of_range("ModelParams: unknown parameter " + name);
  return it->second;
}

void ModelParams::zero_grads() {
  for (auto& [name, v] : params) v.zero_grad();
}

std::size_t ModelParams::count_scalars() const {
  std::size_t n = 0;
  for (const auto& [name, v] : params) n += v.data().size();
  return n;
}

namespace {

Value self_attention(const Value& h, ModelParams& mp, const std::string& prefix) {
  const int H = mp.config.hidden_dim;
  const Value q = matmul(h, mp.at(prefix + ".Wq"));
  const Value k = matmul(h, mp.at(prefix + ".Wk"));
  const Value v = matmul(h, mp.at(prefix + ".Wv"));
  const Value scores = scalar_mul(matmul(q, transpose(k)), 1.0 / std::sqrt(static_cast<double>(H)));
  const Value att = matmul(softmax_rows(scores), v);
  return tanh(add_rowvec(matmul(att, mp.at(prefix + ".Wo")), mp.at(prefix + ".bo"))) + h;
}

Value mlp_block(const Value& z, ModelParams& mp, const std::string& name) {
  return tanh(add_rowvec(matmul(z, mp.at(name + ".W")), mp.at(name + ".b")));
}

}  // namespace

Value encode(const Array& features, ModelParams& mp) {
  const ModelConfig& cfg = mp.config;
  if (features.rank() != 2 || features.cols() != cfg.feat_dim)
    throw std::invalid_argument("encode: features must be T x feat_dim");
  if (features.rows() < cfg.pool_window)
    throw std::invalid_argument("encode: input shorter than the pooling window");
  Value h = mlp_block(Value::leaf(features), mp, "enc.in");
  for (int l = 0; l < cfg.encoder_layers; ++l) h = mlp_block(h, mp, "enc.mlp" + std::to_string(l));
  h = self_attention(h, mp, "enc.attn");
  return avg_pool_time(h, cfg.pool_window, cfg.pool_stride);
}

Value ctc_head(const Value& h, ModelParams& mp) {
  return add_rowvec(matmul(h, mp.at("ctc.W")), mp.at("ctc.b"));
}

Value refine_step(const AlignmentSeq& prev_align, const Value& h, ModelParams& mp) {
  if (static_cast<int>(prev_align.size()) != h.data().rows())
    throw std::invalid_argument("refine_step: alignment length does not match frame count");
  const Value emb = embedding_rows(mp.at("dec.emb"), prev_align);
  Value z = mlp_block(concat_cols(emb, h), mp, "dec.in");
  for (int l = 0; l < mp.config.decoder_layers; ++l) z = mlp_block(z, mp, "dec.mlp" + std::to_string(l));
  z = self_attention(z, mp, "dec.attn");
  return add_rowvec(matmul(z, mp.at("dec.out.W")), mp.at("dec.out.b"));
}

StepOutputs forward_all_steps(const Array& features, ModelParams& mp, int refine_steps) {
  if (refine_steps < 0) throw std::invalid_argument("forward_all_steps: negative step count");
  StepOutputs out;
  const Value h = encode(features, mp);
  Value logits = ctc_head(h, mp);
  out.logits.push_back(logits);
  out.log_probs.push_back(log_softmax_rows(logits));
  out.alignments.push_back(greedy_decode(out.log_probs.back().data()));
  for (int s = 1; s <= refine_steps; ++s) {
    logits = refine_step(out.alignments.back(), h, mp);
    out.logits.push_back(logits);
    out.log_probs.push_back(log_softmax_rows(logits));
    out.alignments.push_back(greedy_decode(out.log_probs.back().data()));
  }
  return out;
}

}  // namespace aligncr
