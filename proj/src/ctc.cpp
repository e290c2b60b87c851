#include "aligncr/ctc.hpp"

#include <algorithm>
#include <cmath>

namespace aligncr {

namespace {

double logsumexp2(double a, double b) {
  if (a == kLogZero) return b;
  if (b == kLogZero) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

double logsumexp3(double a, double b, double c) { return logsumexp2(logsumexp2(a, b), c); }

void check_log_probs(const Array& p) {
  if (p.rank() != 2 || p.rows() < 1 || p.cols() < 2)
    throw std::invalid_argument("ctc: log_probs must be a T' x |V| matrix, |V| >= 2");
}

}  // namespace

std::vector<int> expand_target(const LabelSeq& y) {
  std::vector<int> e;
  e.reserve(2 * y.size() + 1);
  e.push_back(kBlankId);
  for (int t : y) {
    if (t == kBlankId) throw std::invalid_argument("expand_target: label contains blank");
    e.push_back(t);
    e.push_back(kBlankId);
  }
  return e;
}

ForwardBackward forward_backward(const Array& p, const LabelSeq& y) {
  check_log_probs(p);
  const int T = p.rows(), V = p.cols();
  const std::vector<int> e = expand_target(y);
  const int L = static_cast<int>(e.size());

  ForwardBackward fb;
  fb.alpha = Array::full({T, L}, kLogZero);
  fb.beta = Array::full({T, L}, kLogZero);
  fb.occupancy = Array::zeros({T, V});

  auto can_skip = [&](int l) { return l >= 2 && e[l] != kBlankId && e[l] != e[l - 2]; };

  fb.alpha.at(0, 0) = p.at(0, e[0]);
  if (L > 1) fb.alpha.at(0, 1) = p.at(0, e[1]);
  for (int t = 1; t < T; ++t)
    for (int l = 0; l < L; ++l) {
      double acc = fb.alpha.at(t - 1, l);
      if (l >= 1) acc = logsumexp2(acc, fb.alpha.at(t - 1, l - 1));
      if (can_skip(l)) acc = logsumexp2(acc, fb.alpha.at(t - 1, l - 2));
      if (acc != kLogZero) fb.alpha.at(t, l) = acc + p.at(t, e[l]);
    }

  fb.log_lik = fb.alpha.at(T - 1, L - 1);
  if (L > 1) fb.log_lik = logsumexp2(fb.log_lik, fb.alpha.at(T - 1, L - 2));
  if (fb.log_lik == kLogZero) return fb;

  // beta[t][l] includes frame t's emission, mirroring alpha.
  fb.beta.at(T - 1, L - 1) = p.at(T - 1, e[L - 1]);
  if (L > 1) fb.beta.at(T - 1, L - 2) = p.at(T - 1, e[L - 2]);
  for (int t = T - 2; t >= 0; --t)
    for (int l = L - 1; l >= 0; --l) {
      double acc = fb.beta.at(t + 1, l);
      if (l + 1 < L) acc = logsumexp2(acc, fb.beta.at(t + 1, l + 1));
      if (l + 2 < L && can_skip(l + 2)) acc = logsumexp2(acc, fb.beta.at(t + 1, l + 2));
      if (acc != kLogZero) fb.beta.at(t, l) = acc + p.at(t, e[l]);
    }

  // gamma[t][l] = P(lattice state l at frame t | y); alpha+beta double-counts
  // the frame-t emission, so it is divided back out.
  for (int t = 0; t < T; ++t)
    for (int l = 0; l < L; ++l) {
      const double a = fb.alpha.at(t, l), b = fb.beta.at(t, l);
      if (a == kLogZero || b == kLogZero) continue;
      fb.occupancy.at(t, e[l]) += std::exp(a + b - p.at(t, e[l]) - fb.log_lik);
    }
  return fb;
}

double ctc_log_likelihood(const Array& p, const LabelSeq& y) {
  check_log_probs(p);
  const int T = p.rows();
  const std::vector<int> e = expand_target(y);
  const int L = static_cast<int>(e.size());

  std::vector<double> prev(L, kLogZero), cur(L, kLogZero);
  auto can_skip = [&](int l) { return l >= 2 && e[l] != kBlankId && e[l] != e[l - 2]; };
  prev[0] = p.at(0, e[0]);
  if (L > 1) prev[1] = p.at(0, e[1]);
  for (int t = 1; t < T; ++t) {
    for (int l = 0; l < L; ++l) {
      double acc = prev[l];
      if (l >= 1) acc = logsumexp2(acc, prev[l - 1]);
      if (can_skip(l)) acc = logsumexp2(acc, prev[l - 2]);
      cur[l] = acc == kLogZero ? kLogZero : acc + p.at(t, e[l]);
    }
    std::swap(prev, cur);
  }
  double ll = prev[L - 1];
  if (L > 1) ll = logsumexp2(ll, prev[L - 2]);
  return ll;
}

CtcLoss ctc_loss(const Value& logits, const LabelSeq& y, double unreachable_cap) {
  const Array& X = logits.data();
  check_log_probs(X);
  const int T = X.rows(), V = X.cols();

  // Row softmax / log-softmax of the logits, outside the tape.
  Array logp = X;
  Array sm = Array::zeros({T, V});
  for (int t = 0; t < T; ++t) {
    double m = logp.at(t, 0);
    for (int v = 1; v < V; ++v) m = std::max(m, logp.at(t, v));
    double s = 0.0;
    for (int v = 0; v < V; ++v) s += std::exp(logp.at(t, v) - m);
    const double lse = m + std::log(s);
    for (int v = 0; v < V; ++v) {
      logp.at(t, v) -= lse;
      sm.at(t, v) = std::exp(logp.at(t, v));
    }
  }

  ForwardBackward fb = forward_backward(logp, y);

  CtcLoss out;
  out.log_lik = fb.log_lik;
  if (fb.log_lik == kLogZero) {
    out.reachable = false;
    out.loss = Value::leaf(Array::scalar(unreachable_cap));
    return out;
  }

  auto pa = logits.node();
  auto n = std::make_shared<Node>();
  n->data = Array::scalar(-fb.log_lik);
  n->requires_grad = pa->requires_grad;
  if (n->requires_grad) {
    n->parents = {pa};
    Array occ = fb.occupancy;
    n->backward_fn = [pa, sm, occ, T, V](Node& nn) {
      if (pa->work.size() != pa->data.size()) pa->work = Array::zeros(pa->data.shape);
      const double g = nn.work.v[0];
      for (int t = 0; t < T; ++t)
        for (int v = 0; v < V; ++v)
          pa->work.at(t, v) += g * (sm.at(t, v) - occ.at(t, v));
    };
  }
  out.loss = Value(n);
  return out;
}

}  // namespace aligncr
