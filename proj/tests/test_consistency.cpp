#include <doctest.h>

#include <cmath>
#include <random>

#include "aligncr/consistency.hpp"
#include "test_support.hpp"

using namespace aligncr;
using testutil::random_log_probs;

namespace {

std::vector<double> row(const Array& a, int r) {
  std::vector<double> out(a.cols());
  for (int j = 0; j < a.cols(); ++j) out[j] = a.at(r, j);
  return out;
}

// Independent oracle: 1/2 sum_t [KL(p1||p2) + KL(p2||p1)] on plain doubles.
double cr_oracle(const Array& l1, const Array& l2) {
  double s = 0.0;
  for (int t = 0; t < l1.rows(); ++t)
    s += 0.5 * (kl_frame(row(l1, t), row(l2, t)) + kl_frame(row(l2, t), row(l1, t)));
  return s;
}

}  // namespace

TEST_CASE("kl_frame: zero on identical rows, positive otherwise") {
  std::vector<double> p = {std::log(0.5), std::log(0.3), std::log(0.2)};
  CHECK(kl_frame(p, p) == 0.0);

  std::vector<double> q = {std::log(0.2), std::log(0.3), std::log(0.5)};
  CHECK(kl_frame(p, q) > 0.0);
  // hand value: sum p_i log(p_i/q_i)
  const double expect = 0.5 * std::log(0.5 / 0.2) + 0.2 * std::log(0.2 / 0.5);
  CHECK(kl_frame(p, q) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("cr_loss: exactly zero on identical branches") {
  std::mt19937_64 rng(31);
  Value logits = Value::leaf(testutil::random_array({6, 4}, rng), true);
  Value p = log_softmax_rows(logits);
  Value loss = cr_loss(p, p);
  CHECK(loss.data().v[0] == 0.0);
  // The gradient cancels once log_softmax projects out the common -p term.
  backward(loss);
  for (double g : logits.grad().v) CHECK(std::abs(g) <= 1e-12);
}

TEST_CASE("cr_loss: symmetric under branch swap") {
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 10; ++trial) {
    Array a = random_log_probs(5, 3, rng), b = random_log_probs(5, 3, rng);
    const double fwd = cr_loss(Value::leaf(a), Value::leaf(b)).data().v[0];
    const double rev = cr_loss(Value::leaf(b), Value::leaf(a)).data().v[0];
    CHECK(fwd == rev);  // bitwise, the two terms just swap
    CHECK(fwd == doctest::Approx(cr_oracle(a, b)).epsilon(1e-12));
    CHECK(fwd >= 0.0);
  }
}

TEST_CASE("cr_loss: sums over frames, no averaging") {
  std::mt19937_64 rng(33);
  Array a1 = random_log_probs(1, 3, rng), b1 = random_log_probs(1, 3, rng);
  // stack the same frame pair 4 times
  Array a4 = Array::zeros({4, 3}), b4 = Array::zeros({4, 3});
  for (int t = 0; t < 4; ++t)
    for (int j = 0; j < 3; ++j) {
      a4.at(t, j) = a1.at(0, j);
      b4.at(t, j) = b1.at(0, j);
    }
  const double one = cr_loss(Value::leaf(a1), Value::leaf(b1)).data().v[0];
  const double four = cr_loss(Value::leaf(a4), Value::leaf(b4)).data().v[0];
  CHECK(four == doctest::Approx(4.0 * one).epsilon(1e-12));
}

TEST_CASE("cr_loss: stop-gradient contract") {
  // The gradient into branch 1 must equal the gradient of the half-loss
  // where branch 2's distribution is a frozen constant, to 1e-12.
  std::mt19937_64 rng(34);
  for (int trial = 0; trial < 10; ++trial) {
    Array a = random_log_probs(4, 3, rng), b = random_log_probs(4, 3, rng);

    Value v1 = Value::leaf(a, true);
    Value v2 = Value::leaf(b, true);
    backward(cr_loss(v1, v2));

    // frozen counterpart: only p1 is live, p2 is a constant leaf
    Value w1 = Value::leaf(a, true);
    backward(cr_loss(w1, Value::leaf(b)));

    for (std::size_t i = 0; i < a.size(); ++i)
      CHECK(std::abs(v1.grad().v[i] - w1.grad().v[i]) <= 1e-12);
  }
}

TEST_CASE("cr_loss: gradient matches finite differences of the frozen-target objective") {
  // The KL targets are gradient-blocked, so the consistent finite-difference
  // oracle holds them fixed at the base point while the live distributions
  // vary (the same live-term-only functional as the stop-grad contract).
  std::mt19937_64 rng(35);
  for (int trial = 0; trial < 10; ++trial) {
    Array x = testutil::random_array({4, 3}, rng);
    Array y = testutil::random_array({4, 3}, rng);

    Value vx = Value::leaf(x, true), vy = Value::leaf(y, true);
    backward(cr_loss(log_softmax_rows(vx), log_softmax_rows(vy)));

    const Array a0 = log_softmax_rows(Value::leaf(x)).data();
    const Array b0 = log_softmax_rows(Value::leaf(y)).data();
    auto frozen = [&](const Array& xs, const Array& ys) {
      const Array a = log_softmax_rows(Value::leaf(xs)).data();
      const Array b = log_softmax_rows(Value::leaf(ys)).data();
      double s = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i)
        s += std::exp(a0.v[i]) * (a0.v[i] - b.v[i]) + std::exp(b0.v[i]) * (b0.v[i] - a.v[i]);
      return 0.5 * s;
    };

    const double h = 1e-5;
    double worst = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      Array p = x, m = x;
      p.v[i] += h;
      m.v[i] -= h;
      double fd = (frozen(p, y) - frozen(m, y)) / (2.0 * h);
      double g = vx.grad().v[i];
      worst = std::max(worst, std::abs(g - fd) / std::max(1.0, std::abs(g) + std::abs(fd)));
      p = y;
      m = y;
      p.v[i] += h;
      m.v[i] -= h;
      fd = (frozen(x, p) - frozen(x, m)) / (2.0 * h);
      g = vy.grad().v[i];
      worst = std::max(worst, std::abs(g - fd) / std::max(1.0, std::abs(g) + std::abs(fd)));
    }
    CHECK(worst <= 1e-5);
  }
}

TEST_CASE("cr_loss: shape mismatch throws") {
  std::mt19937_64 rng(36);
  Value a = Value::leaf(random_log_probs(3, 3, rng));
  Value b = Value::leaf(random_log_probs(4, 3, rng));
  CHECK_THROWS_AS(cr_loss(a, b), std::invalid_argument);
}
