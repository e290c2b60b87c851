#include "aligncr/semisup.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace aligncr {

PseudoLabelSource parse_pl_source(const std::string& name) {
  if (name == "ctc") return PseudoLabelSource::BaseCTC;
  if (name == "last-step") return PseudoLabelSource::LastStep;
  throw std::invalid_argument("pl_source must be 'ctc' or 'last-step', got '" + name + "'");
}

LabelSeq generate_pseudo_label(const Array& clean_features, ModelParams& params,
                               PseudoLabelSource source, int refine_steps) {
  if (source == PseudoLabelSource::LastStep && refine_steps < 1)
    throw std::invalid_argument("generate_pseudo_label: last-step source needs refine_steps >= 1");
  const int steps = source == PseudoLabelSource::LastStep ? refine_steps : 0;
  StepOutputs out = forward_all_steps(clean_features, params, steps);
  return collapse(out.alignments.back());
}

SelfTrainStepReport self_train_step(const std::vector<const Utterance*>& labeled_batch,
                                    const std::vector<const Utterance*>& unlabeled_batch,
                                    ModelParams& params, SgdOptimizer& opt, const RunConfig& cfg,
                                    std::uint64_t epoch) {
  if (labeled_batch.empty() && unlabeled_batch.empty())
    throw std::invalid_argument("self_train_step: both batches empty");

  SelfTrainStepReport rep;
  const PseudoLabelSource source = parse_pl_source(cfg.pl_source);

  // Pseudo-labels first: generated from clean inputs with the current
  // parameters, then held fixed for the rest of the step.
  std::vector<LabelSeq> pseudo(unlabeled_batch.size());
  if (cfg.weights.gamma > 0.0) {
    double len_sum = 0.0;
    for (std::size_t j = 0; j < unlabeled_batch.size(); ++j) {
      pseudo[j] = generate_pseudo_label(unlabeled_batch[j]->features, params, source,
                                        cfg.model.refine_steps);
      len_sum += static_cast<double>(pseudo[j].size());
    }
    rep.pl_mean_len = unlabeled_batch.empty() ? 0.0 : len_sum / unlabeled_batch.size();
  }

  params.zero_grads();
  std::vector<Value> labeled_losses;
  std::vector<Value> unlabeled_losses;
  for (const Utterance* utt : labeled_batch) {
    if (!utt->transcript) throw std::invalid_argument("self_train_step: labeled utterance without transcript");
    LossReport r = supervised_utterance_loss(*utt, *utt->transcript, params, cfg, epoch,
                                             cfg.weights.lambda0, cfg.weights.lambda1);
    if (r.flagged > 0) {
      rep.flagged += r.flagged;
      continue;
    }
    for (const auto& [k, v] : r.components) rep.components["sup_" + k] += v;
    labeled_losses.push_back(r.total);
  }
  if (cfg.weights.gamma > 0.0) {
    for (std::size_t j = 0; j < unlabeled_batch.size(); ++j) {
      LossReport r = supervised_utterance_loss(*unlabeled_batch[j], pseudo[j], params, cfg, epoch,
                                               cfg.weights.lambda0_u, cfg.weights.lambda1_u);
      if (r.flagged > 0) {
        rep.flagged += r.flagged;
        continue;
      }
      for (const auto& [k, v] : r.components) rep.components["unsup_" + k] += v;
      unlabeled_losses.push_back(r.total);
    }
  }

  if (labeled_losses.empty() && unlabeled_losses.empty()) return rep;
  const Value total = semi_total_loss(labeled_losses, unlabeled_losses, cfg.weights.gamma);
  backward(total);
  opt.step(params);
  rep.total = total.data().v[0];
  rep.updated = true;
  return rep;
}

namespace {

double pseudo_label_wer(const Corpus& unlabeled, const std::map<std::string, LabelSeq>& hidden_refs,
                        ModelParams& params, PseudoLabelSource source, int refine_steps) {
  ErrorRateReport pooled;
  for (const Utterance& utt : unlabeled.utts) {
    auto it = hidden_refs.find(utt.id);
    if (it == hidden_refs.end()) continue;
    const LabelSeq pl = generate_pseudo_label(utt.features, params, source, refine_steps);
    const ErrorRateReport r = edit_distance(it->second, pl);
    pooled.substitutions += r.substitutions;
    pooled.deletions += r.deletions;
    pooled.insertions += r.insertions;
    pooled.reference_length += r.reference_length;
  }
  return pooled.rate();
}

}  // namespace

TrainOutput run_self_training(const Corpus& labeled, const Corpus& unlabeled,
                              const std::map<std::string, LabelSeq>& hidden_refs,
                              const RunConfig& cfg) {
  cfg.validate();
  if (labeled.utts.empty()) throw std::invalid_argument("run_self_training: empty labeled pool");
  if (cfg.init_checkpoint.empty() && cfg.start_epoch == 0)
    throw std::invalid_argument("run_self_training: init_checkpoint required");
  fs::create_directories(cfg.out_dir);
  {
    const fs::path snap = fs::path(cfg.out_dir) / "config.snapshot";
    const fs::path tmp = snap.string() + ".tmp";
    std::ofstream f(tmp, std::ios::trunc);
    f << serialize_run_config(cfg);
    f.close();
    fs::rename(tmp, snap);
  }

  // One epoch = one pass over the unlabeled pool (or the labeled pool when
  // no unlabeled data is present); labeled batches are drawn cyclically.
  const std::size_t driver_size = unlabeled.utts.empty() ? labeled.size() : unlabeled.size();
  const std::uint64_t steps_per_epoch = (driver_size + cfg.batch_size - 1) / cfg.batch_size;
  SgdOptimizer opt(cfg.optim, steps_per_epoch * cfg.epochs);

  const PseudoLabelSource source = parse_pl_source(cfg.pl_source);
  ModelParams params;
  if (cfg.start_epoch > 0) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "epoch_%03d.ckpt", cfg.start_epoch - 1);
    params = load_checkpoint((fs::path(cfg.out_dir) / buf).string(), &opt.state());
  } else {
    params = load_checkpoint(cfg.init_checkpoint);
  }

  TrainOutput out;
  out.metrics_path = (fs::path(cfg.out_dir) / "metrics.jsonl").string();
  std::ofstream metrics(out.metrics_path, cfg.start_epoch > 0 ? std::ios::app : std::ios::trunc);
  if (!metrics) throw std::runtime_error("cannot open metrics log: " + out.metrics_path);

  std::vector<std::size_t> u_order(unlabeled.size());
  for (std::size_t i = 0; i < u_order.size(); ++i) u_order[i] = i;
  std::vector<std::size_t> l_order(labeled.size());
  for (std::size_t i = 0; i < l_order.size(); ++i) l_order[i] = i;

  for (int epoch = cfg.start_epoch; epoch < cfg.epochs; ++epoch) {
    // Shuffle from the identity each epoch so the permutation depends only on
    // (seed, epoch), not on how many epochs this process already ran (resume).
    for (std::size_t i = 0; i < u_order.size(); ++i) u_order[i] = i;
    std::mt19937_64 u_rng(augment_seed(cfg.seed, epoch, "__unlabeled_order__", 0));
    std::shuffle(u_order.begin(), u_order.end(), u_rng);
    for (std::size_t i = 0; i < l_order.size(); ++i) l_order[i] = i;
    std::mt19937_64 l_rng(augment_seed(cfg.seed, epoch, "__labeled_order__", 0));
    std::shuffle(l_order.begin(), l_order.end(), l_rng);

    std::size_t l_cursor = 0;
    for (std::uint64_t s = 0; s < steps_per_epoch; ++s) {
      std::vector<const Utterance*> lb;
      for (int i = 0; i < cfg.batch_size && !labeled.utts.empty(); ++i) {
        lb.push_back(&labeled.utts[l_order[l_cursor]]);
        l_cursor = (l_cursor + 1) % l_order.size();
      }
      std::vector<const Utterance*> ub;
      if (!unlabeled.utts.empty()) {
        const std::size_t b0 = s * cfg.batch_size;
        const std::size_t b1 = std::min(unlabeled.size(), b0 + cfg.batch_size);
        for (std::size_t i = b0; i < b1; ++i) ub.push_back(&unlabeled.utts[u_order[i]]);
      }
      SelfTrainStepReport rep = self_train_step(lb, ub, params, opt, cfg, epoch);
      json rec;
      rec["mode"] = "selftrain";
      rec["epoch"] = epoch;
      rec["step"] = opt.state().step - (rep.updated ? 1 : 0);
      rec["flagged"] = rep.flagged;
      rec["pl_mean_len"] = rep.pl_mean_len;
      if (rep.updated) rec["loss"] = rep.total;
      metrics << rec.dump() << '\n';
    }

    if (!unlabeled.utts.empty() && !hidden_refs.empty()) {
      json rec;
      rec["mode"] = "pl_quality";
      rec["epoch"] = epoch;
      rec["pl_wer"] = pseudo_label_wer(unlabeled, hidden_refs, params, source, cfg.model.refine_steps);
      metrics << rec.dump() << '\n';
    }

    char buf[32];
    std::snprintf(buf, sizeof buf, "epoch_%03d.ckpt", epoch);
    const std::string ckpt = (fs::path(cfg.out_dir) / buf).string();
    save_checkpoint(params, ckpt, &opt.state());
    out.epoch_checkpoints.push_back(ckpt);
  }

  const int k = std::min<int>(cfg.avg_last, cfg.epochs);
  std::vector<ModelParams> last;
  for (int epoch = cfg.epochs - k; epoch < cfg.epochs; ++epoch) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "epoch_%03d.ckpt", epoch);
    last.push_back(load_checkpoint((fs::path(cfg.out_dir) / buf).string()));
  }
  ModelParams avg = average_checkpoints(last);
  out.final_checkpoint = (fs::path(cfg.out_dir) / "final_averaged.ckpt").string();
  save_checkpoint(avg, out.final_checkpoint);
  return out;
}

}  // namespace aligncr
