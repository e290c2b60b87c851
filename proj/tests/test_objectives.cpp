#include <doctest.h>

#include <random>

#include "aligncr/objectives.hpp"
#include "test_support.hpp"

using namespace aligncr;

namespace {

ModelConfig tiny_config(std::uint64_t seed = 7) {
  ModelConfig cfg;
  cfg.feat_dim = 4;
  cfg.hidden_dim = 6;
  cfg.vocab_size = 4;
  cfg.embed_dim = 5;
  cfg.refine_steps = 2;
  cfg.seed = seed;
  return cfg;
}

StepOutputs forward(ModelParams& mp, std::uint64_t data_seed, int steps, int T = 12) {
  std::mt19937_64 rng(data_seed);
  return forward_all_steps(testutil::random_array({T, mp.config.feat_dim}, rng), mp, steps);
}

}  // namespace

TEST_CASE("LossWeights validation") {
  LossWeights w;
  w.validate();  // defaults are fine
  w.alpha = 1.5;
  CHECK_THROWS_AS(w.validate(), std::invalid_argument);
  w = LossWeights{};
  w.lambda1 = -0.1;
  CHECK_THROWS_AS(w.validate(), std::invalid_argument);
  w = LossWeights{};
  w.gamma = -1.0;
  CHECK_THROWS_AS(w.validate(), std::invalid_argument);
}

TEST_CASE("nar_loss: decomposition into CTC and refinement terms") {
  ModelParams mp = ModelParams::init(tiny_config());
  StepOutputs out = forward(mp, 61, 2);
  const LabelSeq y = {1, 2};

  LossReport r = nar_loss(out, y, 0.3);
  REQUIRE(r.flagged == 0);
  const double ctc0 = ctc_loss(out.logits[0], y).loss.data().v[0];
  const double ctc1 = ctc_loss(out.logits[1], y).loss.data().v[0];
  const double ctc2 = ctc_loss(out.logits[2], y).loss.data().v[0];
  const double expect = 0.3 * ctc0 + 0.7 * 0.5 * (ctc1 + ctc2);
  CHECK(std::abs(r.total.data().v[0] - expect) <= 1e-10);
  CHECK(r.components.at("ctc") == doctest::Approx(ctc0).epsilon(1e-12));
  CHECK(r.components.at("refine_s1") == doctest::Approx(ctc1).epsilon(1e-12));
  CHECK(r.components.at("refine_s2") == doctest::Approx(ctc2).epsilon(1e-12));

  // alpha=1: pure CTC on the base posteriors, refinement terms absent
  LossReport pure = nar_loss(out, y, 1.0);
  CHECK(std::abs(pure.total.data().v[0] - ctc0) <= 1e-12);
}

TEST_CASE("nar_loss: alpha<1 with no refinement steps is an error") {
  ModelParams mp = ModelParams::init(tiny_config());
  StepOutputs out = forward(mp, 62, 0);
  CHECK_THROWS_AS(nar_loss(out, {1}, 0.3), std::invalid_argument);
  CHECK_NOTHROW(nar_loss(out, {1}, 1.0));
}

TEST_CASE("align_consistency_loss: decomposes into named components") {
  ModelParams mp = ModelParams::init(tiny_config());
  StepOutputs b1 = forward(mp, 63, 2);
  StepOutputs b2 = forward(mp, 64, 2);
  const LabelSeq y = {1, 2, 1};

  const double alpha = 0.3, l0 = 0.2, l1 = 0.2;
  LossReport r = align_consistency_loss(b1, b2, y, alpha, l0, l1);
  REQUIRE(r.flagged == 0);

  const double nar1 = nar_loss(b1, y, alpha).total.data().v[0];
  const double nar2 = nar_loss(b2, y, alpha).total.data().v[0];
  const double cr0 = cr_loss(b1.log_probs[0], b2.log_probs[0]).data().v[0];
  const double cr1 = cr_loss(b1.log_probs[1], b2.log_probs[1]).data().v[0];
  const double cr2 = cr_loss(b1.log_probs[2], b2.log_probs[2]).data().v[0];
  const double expect = 0.5 * (nar1 + nar2) + l0 * cr0 + (l1 / 2.0) * (cr1 + cr2);
  CHECK(std::abs(r.total.data().v[0] - expect) <= 1e-10);

  CHECK(r.components.at("nar_branch1") == doctest::Approx(nar1).epsilon(1e-12));
  CHECK(r.components.at("nar_branch2") == doctest::Approx(nar2).epsilon(1e-12));
  CHECK(r.components.at("cr_s0") == doctest::Approx(cr0).epsilon(1e-12));
  CHECK(r.components.at("cr_s1") == doctest::Approx(cr1).epsilon(1e-12));
  CHECK(r.components.at("cr_s2") == doctest::Approx(cr2).epsilon(1e-12));
}

TEST_CASE("align_consistency_loss: lambda=0 leaves the pure averaged NAR loss") {
  ModelParams mp = ModelParams::init(tiny_config());
  StepOutputs b1 = forward(mp, 65, 2);
  StepOutputs b2 = forward(mp, 66, 2);
  const LabelSeq y = {2, 1};
  LossReport r = align_consistency_loss(b1, b2, y, 0.3, 0.0, 0.0);
  const double nar1 = nar_loss(b1, y, 0.3).total.data().v[0];
  const double nar2 = nar_loss(b2, y, 0.3).total.data().v[0];
  CHECK(std::abs(r.total.data().v[0] - 0.5 * (nar1 + nar2)) <= 1e-10);
}

TEST_CASE("align_consistency_loss: alpha=1 reduction keeps only the s=0 CR term") {
  ModelParams mp = ModelParams::init(tiny_config());
  StepOutputs b1 = forward(mp, 67, 0);
  StepOutputs b2 = forward(mp, 68, 0);
  const LabelSeq y = {1};
  LossReport r = align_consistency_loss(b1, b2, y, 1.0, 0.2, 0.2);
  const double ctc1 = ctc_loss(b1.logits[0], y).loss.data().v[0];
  const double ctc2 = ctc_loss(b2.logits[0], y).loss.data().v[0];
  const double cr0 = cr_loss(b1.log_probs[0], b2.log_probs[0]).data().v[0];
  CHECK(std::abs(r.total.data().v[0] - (0.5 * (ctc1 + ctc2) + 0.2 * cr0)) <= 1e-10);
  CHECK(r.components.count("cr_s1") == 0);
}

TEST_CASE("align_consistency_loss: unreachable targets are flagged") {
  ModelParams mp = ModelParams::init(tiny_config());
  // 4 input frames pool to 2, which cannot carry 3 distinct labels
  StepOutputs b1 = forward(mp, 69, 2, 4);
  StepOutputs b2 = forward(mp, 70, 2, 4);
  LossReport r = align_consistency_loss(b1, b2, {1, 2, 1}, 0.3, 0.2, 0.2);
  CHECK(r.flagged > 0);
}

TEST_CASE("align_consistency_loss: end-to-end gradient vs finite differences") {
  ModelConfig cfg = tiny_config(9);
  cfg.hidden_dim = 4;
  cfg.embed_dim = 3;
  std::mt19937_64 rng(71);
  Array x1 = testutil::random_array({8, 4}, rng);
  Array x2 = testutil::random_array({8, 4}, rng);
  const LabelSeq y = {1, 2};

  auto eval = [&](ModelParams& p) {
    StepOutputs b1 = forward_all_steps(x1, p, 1);
    StepOutputs b2 = forward_all_steps(x2, p, 1);
    return align_consistency_loss(b1, b2, y, 0.3, 0.2, 0.2);
  };

  ModelParams mp = ModelParams::init(cfg);
  LossReport r = eval(mp);
  REQUIRE(r.flagged == 0);
  backward(r.total);

  // Finite differences of the live-term-only objective: the CR targets are
  // frozen at the base point, matching the stop-gradient semantics.
  StepOutputs base1 = forward_all_steps(x1, mp, 1);
  StepOutputs base2 = forward_all_steps(x2, mp, 1);
  auto frozen_eval = [&](ModelParams& p) {
    StepOutputs b1 = forward_all_steps(x1, p, 1);
    StepOutputs b2 = forward_all_steps(x2, p, 1);
    double total = 0.5 * (nar_loss(b1, y, 0.3).total.data().v[0] +
                          nar_loss(b2, y, 0.3).total.data().v[0]);
    auto cr_frozen = [&](int s, double weight) {
      const Array& a0 = base1.log_probs[s].data();
      const Array& b0 = base2.log_probs[s].data();
      const Array& a = b1.log_probs[s].data();
      const Array& b = b2.log_probs[s].data();
      double sum = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i)
        sum += std::exp(a0.v[i]) * (a0.v[i] - b.v[i]) + std::exp(b0.v[i]) * (b0.v[i] - a.v[i]);
      total += weight * 0.5 * sum;
    };
    cr_frozen(0, 0.2);
    cr_frozen(1, 0.2);  // lambda1 / S with S = 1
    return total;
  };

  const double h = 1e-5;
  double worst = 0.0;
  for (auto& [name, v] : mp.params) {
    for (std::size_t i = 0; i < v.data().size(); ++i) {
      ModelParams plus = ModelParams::init(cfg), minus = ModelParams::init(cfg);
      plus.at(name).data_mut().v[i] += h;
      minus.at(name).data_mut().v[i] -= h;
      const double fd = (frozen_eval(plus) - frozen_eval(minus)) / (2.0 * h);
      const double g = v.grad().v[i];
      worst = std::max(worst, std::abs(g - fd) / std::max(1.0, std::abs(g) + std::abs(fd)));
    }
  }
  CHECK(worst <= 1e-4);
}

TEST_CASE("semi_total_loss: mean plus gamma-weighted mean") {
  auto v = [](double x) { return Value::leaf(Array::scalar(x)); };
  std::vector<Value> lab = {v(1.0), v(3.0)};
  std::vector<Value> unl = {v(2.0), v(4.0), v(6.0)};
  CHECK(semi_total_loss(lab, unl, 1.0).data().v[0] == doctest::Approx(2.0 + 4.0).epsilon(1e-12));
  CHECK(semi_total_loss(lab, unl, 0.5).data().v[0] == doctest::Approx(2.0 + 2.0).epsilon(1e-12));
  CHECK(semi_total_loss(lab, {}, 1.0).data().v[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(semi_total_loss({}, unl, 1.0).data().v[0] == doctest::Approx(4.0).epsilon(1e-12));
  CHECK_THROWS_AS(semi_total_loss({}, {}, 1.0), std::invalid_argument);
}
