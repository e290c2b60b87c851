#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "aligncr/checkpoint.hpp"
#include "aligncr/semisup.hpp"
#include "aligncr/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace aligncr;

namespace {

bool verbose() {
  const char* v = std::getenv("ALIGNCR_LOG");
  return v && *v;
}

void log_line(const std::string& msg) {
  if (verbose()) std::cerr << "[aligncr] " << msg << '\n';
}

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> sets;  // raw key=value overrides
  // Named flags mirrored onto config keys; NaN/empty means "not given".
  std::map<std::string, std::string> flag_values;
};

void add_common_flags(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "run config file (key=value lines)");
  cmd->add_option("--set", opts.sets, "extra overrides, key=value")->take_all();
  auto bind = [cmd, &opts](const std::string& flag, const std::string& key, const std::string& desc) {
    cmd->add_option_function<std::string>(
           flag, [&opts, key](const std::string& v) { opts.flag_values[key] = v; }, desc);
  };
  bind("--alpha", "loss.alpha", "CTC-vs-refinement mix");
  bind("--lambda0", "loss.lambda0", "CR weight, base CTC step");
  bind("--lambda1", "loss.lambda1", "CR weight, refinement steps");
  bind("--gamma", "loss.gamma", "unsupervised loss weight");
  bind("--unsup-lambda0", "loss.lambda0_u", "CR weight on unlabeled data, base step");
  bind("--unsup-lambda1", "loss.lambda1_u", "CR weight on unlabeled data, refinement steps");
  bind("--seed", "train.seed", "run seed");
  bind("--epochs", "train.epochs", "training epochs");
  bind("--batch-size", "train.batch_size", "utterances per optimizer step");
  bind("--avg-last", "train.avg_last", "checkpoints averaged into the final model");
  bind("--lr", "optim.lr", "initial learning rate");
  bind("--out-dir", "io.out_dir", "output directory");
  bind("--data", "io.data_dir", "corpus directory");
  bind("--pl-source", "selftrain.pl_source", "pseudo-label source: ctc | last-step");
  bind("--labeled-fraction", "selftrain.labeled_fraction", "labeled pool fraction");
  bind("--init", "selftrain.init_checkpoint", "initial checkpoint for self-training");
}

RunConfig resolve_config(const CommonOpts& opts) {
  RunConfig cfg = opts.config_path.empty() ? RunConfig{} : load_run_config(opts.config_path);
  for (const auto& [key, value] : opts.flag_values) apply_override(cfg, key, value);
  for (const std::string& kv : opts.sets) {
    const std::size_t eq = kv.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
    apply_override(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  return cfg;
}

std::vector<int> parse_steps(const std::string& spec) {
  std::vector<int> steps;
  std::istringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    steps.push_back(std::stoi(tok));
  }
  if (steps.empty()) throw std::invalid_argument("--steps: no steps given");
  return steps;
}

void check_corpus_vocab(const Corpus& corpus, const ModelConfig& mc) {
  for (const Utterance& utt : corpus.utts) {
    if (!utt.transcript) continue;
    for (int tok : *utt.transcript)
      if (tok <= 0 || tok >= mc.vocab_size)
        throw std::runtime_error("utterance " + utt.id + " has token " + std::to_string(tok) +
                                 " outside model vocab (size " + std::to_string(mc.vocab_size) + ")");
  }
}

int cmd_gen_data(const std::string& spec_path, const std::string& out_dir) {
  RunConfig cfg = load_run_config(spec_path);
  log_line("generating corpus into " + out_dir);
  Corpus corpus = generate_corpus(cfg.gen);
  write_corpus(corpus, out_dir);
  std::cout << "wrote " << corpus.size() << " utterances to " << out_dir << '\n';
  return 0;
}

int cmd_train(const CommonOpts& opts) {
  RunConfig cfg = resolve_config(opts);
  if (cfg.data_dir.empty()) throw std::invalid_argument("train: io.data_dir (--data) required");
  if (cfg.out_dir.empty()) throw std::invalid_argument("train: io.out_dir (--out-dir) required");
  Corpus corpus = read_corpus(cfg.data_dir);
  check_corpus_vocab(corpus, cfg.model);
  log_line("supervised training, " + std::to_string(corpus.size()) + " utterances");
  TrainOutput out = train_supervised(corpus, cfg);
  std::cout << "final checkpoint: " << out.final_checkpoint << '\n';
  return 0;
}

int cmd_selftrain(const CommonOpts& opts) {
  RunConfig cfg = resolve_config(opts);
  if (cfg.data_dir.empty()) throw std::invalid_argument("selftrain: io.data_dir (--data) required");
  if (cfg.out_dir.empty()) throw std::invalid_argument("selftrain: io.out_dir (--out-dir) required");
  if (cfg.init_checkpoint.empty())
    throw std::invalid_argument("selftrain: selftrain.init_checkpoint (--init) required");
  if (!fs::exists(cfg.init_checkpoint))
    throw std::runtime_error("selftrain: missing init checkpoint: " + cfg.init_checkpoint);
  Corpus corpus = read_corpus(cfg.data_dir);
  check_corpus_vocab(corpus, cfg.model);
  PoolSplit split = split_pools(corpus, cfg.labeled_fraction, cfg.split_seed);
  log_line("self-training, " + std::to_string(split.labeled.size()) + " labeled / " +
           std::to_string(split.unlabeled.size()) + " unlabeled");
  TrainOutput out = run_self_training(split.labeled, split.unlabeled, split.hidden_refs, cfg);
  std::cout << "final checkpoint: " << out.final_checkpoint << '\n';
  return 0;
}

int cmd_eval(const std::string& ckpt_path, const std::string& data_dir, const std::string& steps_spec,
             const std::string& out_path) {
  ModelParams params = load_checkpoint(ckpt_path);
  Corpus corpus = read_corpus(data_dir);
  const std::vector<int> steps = parse_steps(steps_spec);
  auto pooled = evaluate_corpus(corpus, params, steps);
  json rep;
  for (const auto& [s, r] : pooled) {
    json entry;
    entry["substitutions"] = r.substitutions;
    entry["deletions"] = r.deletions;
    entry["insertions"] = r.insertions;
    entry["reference_length"] = r.reference_length;
    entry["rate"] = r.rate();
    if (r.empty_reference) entry["empty_reference"] = true;
    rep["step_" + std::to_string(s)] = entry;
  }
  const std::string text = rep.dump(2) + "\n";
  if (out_path.empty()) {
    std::cout << text;
  } else {
    const fs::path tmp = out_path + ".tmp";
    std::ofstream f(tmp, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write report: " + out_path);
    f << text;
    f.close();
    fs::rename(tmp, out_path);
    std::cout << "wrote " << out_path << '\n';
  }
  return 0;
}

int cmd_decode(const std::string& ckpt_path, const std::string& data_dir, int step,
               const std::string& out_path) {
  ModelParams params = load_checkpoint(ckpt_path);
  Corpus corpus = read_corpus(data_dir);
  std::ostringstream out;
  for (const Utterance& utt : corpus.utts) {
    StepOutputs so = forward_all_steps(utt.features, params, step);
    const LabelSeq hyp = collapse(so.alignments[step]);
    out << utt.id << '\t';
    for (std::size_t i = 0; i < hyp.size(); ++i) {
      if (i) out << ' ';
      out << hyp[i];
    }
    out << '\n';
  }
  const fs::path tmp = out_path + ".tmp";
  std::ofstream f(tmp, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write transcripts: " + out_path);
  f << out.str();
  f.close();
  fs::rename(tmp, out_path);
  std::cout << "wrote " << out_path << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Align-Consistency lab: iterative alignment refinement with consistency regularization"};
  app.require_subcommand(1);

  std::string spec_path, out_dir;
  auto* gen = app.add_subcommand("gen-data", "generate a synthetic corpus");
  gen->add_option("--spec", spec_path, "generator config file")->required();
  gen->add_option("--out", out_dir, "output corpus directory")->required();

  CommonOpts train_opts;
  auto* train = app.add_subcommand("train", "supervised Align-Consistency training");
  add_common_flags(train, train_opts);

  CommonOpts st_opts;
  auto* st = app.add_subcommand("selftrain", "semi-supervised self-training");
  add_common_flags(st, st_opts);

  std::string ckpt, data_dir, steps_spec = "0,2", report_path;
  auto* ev = app.add_subcommand("eval", "toy-WER at the requested inference steps");
  ev->add_option("--checkpoint", ckpt, "model checkpoint")->required();
  ev->add_option("--data", data_dir, "labeled corpus directory")->required();
  ev->add_option("--steps", steps_spec, "comma-separated inference steps (default 0,2)");
  ev->add_option("--out", report_path, "report file (stdout if omitted)");

  std::string d_ckpt, d_data, d_out;
  int d_step = 0;
  auto* dec = app.add_subcommand("decode", "greedy decode + collapse to transcripts");
  dec->add_option("--checkpoint", d_ckpt, "model checkpoint")->required();
  dec->add_option("--data", d_data, "corpus directory")->required();
  dec->add_option("--step", d_step, "inference step (0 = base CTC)");
  dec->add_option("--out", d_out, "output transcript file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen_data(spec_path, out_dir);
    if (train->parsed()) return cmd_train(train_opts);
    if (st->parsed()) return cmd_selftrain(st_opts);
    if (ev->parsed()) return cmd_eval(ckpt, data_dir, steps_spec, report_path);
    if (dec->parsed()) return cmd_decode(d_ckpt, d_data, d_step, d_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
