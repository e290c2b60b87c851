#include "aligncr/trainer.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace aligncr {

double SgdOptimizer::current_lr() const {
  const double frac = static_cast<double>(state_.step) / static_cast<double>(total_steps_);
  return cfg_.lr * (1.0 - (1.0 - cfg_.final_lr_scale) * std::min(1.0, frac));
}

void SgdOptimizer::step(ModelParams& params) {
  const double lr = current_lr();
  for (auto& [name, v] : params.params) {
    auto [it, inserted] = state_.velocity.try_emplace(name, Array::zeros(v.data().shape));
    Array& vel = it->second;
    const Array& g = v.grad();
    Array& x = v.data_mut();
    for (std::size_t i = 0; i < x.size(); ++i) {
      vel.v[i] = cfg_.momentum * vel.v[i] + g.v[i];
      x.v[i] -= lr * vel.v[i];
    }
  }
  ++state_.step;
}

LossReport supervised_utterance_loss(const Utterance& utt, const LabelSeq& target,
                                     ModelParams& params, const RunConfig& cfg,
                                     std::uint64_t epoch, double lambda0, double lambda1) {
  const auto [x1, x2] = augment_pair(utt.features, cfg.augment,
                                     augment_seed(cfg.seed, epoch, utt.id, 0));
  const int s_eff = cfg.weights.alpha >= 1.0 ? 0 : cfg.model.refine_steps;
  StepOutputs b1 = forward_all_steps(x1, params, s_eff);
  StepOutputs b2 = forward_all_steps(x2, params, s_eff);
  return align_consistency_loss(b1, b2, target, cfg.weights.alpha, lambda0, lambda1);
}

namespace {

void write_text_atomic(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  std::ofstream f(tmp, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write: " + tmp.string());
  f << text;
  f.close();
  fs::rename(tmp, path);
}

std::string epoch_ckpt_path(const std::string& out_dir, int epoch) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "epoch_%03d.ckpt", epoch);
  return (fs::path(out_dir) / buf).string();
}

}  // namespace

TrainOutput train_supervised(const Corpus& labeled, const RunConfig& cfg) {
  cfg.validate();
  if (labeled.utts.empty()) throw std::invalid_argument("train_supervised: empty corpus");
  fs::create_directories(cfg.out_dir);
  write_text_atomic(fs::path(cfg.out_dir) / "config.snapshot", serialize_run_config(cfg));

  ModelConfig mc = cfg.model;
  mc.seed = cfg.seed;
  const std::uint64_t steps_per_epoch =
      (labeled.size() + cfg.batch_size - 1) / cfg.batch_size;
  SgdOptimizer opt(cfg.optim, steps_per_epoch * cfg.epochs);

  ModelParams params;
  if (cfg.start_epoch > 0) {
    params = load_checkpoint(cfg.init_checkpoint.empty()
                                 ? epoch_ckpt_path(cfg.out_dir, cfg.start_epoch - 1)
                                 : cfg.init_checkpoint,
                             &opt.state());
  } else if (!cfg.init_checkpoint.empty()) {
    params = load_checkpoint(cfg.init_checkpoint);
  } else {
    params = ModelParams::init(mc);
  }

  TrainOutput out;
  out.metrics_path = (fs::path(cfg.out_dir) / "metrics.jsonl").string();
  std::ofstream metrics(out.metrics_path,
                        cfg.start_epoch > 0 ? std::ios::app : std::ios::trunc);
  if (!metrics) throw std::runtime_error("cannot open metrics log: " + out.metrics_path);

  std::vector<std::size_t> order(labeled.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = cfg.start_epoch; epoch < cfg.epochs; ++epoch) {
    // Re-derive the permutation from the identity so epoch e shuffles the
    // same way whether or not earlier epochs ran in this process (resume).
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 shuffle_rng(augment_seed(cfg.seed, epoch, "__epoch_order__", 0));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    for (std::size_t b = 0; b < order.size(); b += cfg.batch_size) {
      params.zero_grads();
      std::vector<Value> losses;
      std::map<std::string, double> comps;
      int flagged = 0;
      const std::size_t end = std::min(order.size(), b + cfg.batch_size);
      for (std::size_t i = b; i < end; ++i) {
        const Utterance& utt = labeled.utts[order[i]];
        if (!utt.transcript) throw std::invalid_argument("train_supervised: unlabeled utterance " + utt.id);
        LossReport rep = supervised_utterance_loss(utt, *utt.transcript, params, cfg, epoch,
                                                   cfg.weights.lambda0, cfg.weights.lambda1);
        if (rep.flagged > 0) {
          flagged += rep.flagged;
          continue;  // degenerate target, keep it out of the batch mean
        }
        for (const auto& [k, v] : rep.components) comps[k] += v;
        losses.push_back(rep.total);
      }
      json rec;
      rec["mode"] = "train";
      rec["epoch"] = epoch;
      rec["step"] = opt.state().step;
      rec["flagged"] = flagged;
      if (!losses.empty()) {
        const Value total = semi_total_loss(losses, {}, 0.0);
        backward(total);
        opt.step(params);
        rec["loss"] = total.data().v[0];
        for (auto& [k, v] : comps) rec["mean_" + k] = v / losses.size();
      }
      metrics << rec.dump() << '\n';
    }
    const std::string ckpt = epoch_ckpt_path(cfg.out_dir, epoch);
    save_checkpoint(params, ckpt, &opt.state());
    out.epoch_checkpoints.push_back(ckpt);
  }

  // Final model = mean of the last avg_last per-epoch checkpoints.
  const int k = std::min<int>(cfg.avg_last, cfg.epochs);
  std::vector<ModelParams> last;
  for (int epoch = cfg.epochs - k; epoch < cfg.epochs; ++epoch)
    last.push_back(load_checkpoint(epoch_ckpt_path(cfg.out_dir, epoch)));
  ModelParams avg = average_checkpoints(last);
  out.final_checkpoint = (fs::path(cfg.out_dir) / "final_averaged.ckpt").string();
  save_checkpoint(avg, out.final_checkpoint);
  return out;
}

}  // namespace aligncr
