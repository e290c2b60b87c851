#include "aligncr/autodiff.hpp"

#include <algorithm>
#include <cmath>

namespace aligncr {

namespace {

std::shared_ptr<Node> make_node(Array data, std::vector<std::shared_ptr<Node>> parents,
                                std::function<void(Node&)> backward_fn) {
  auto n = std::make_shared<Node>();
  n->data = std::move(data);
  n->requires_grad = false;
  for (const auto& p : parents)
    if (p->requires_grad) n->requires_grad = true;
  if (n->requires_grad) {
    n->parents = std::move(parents);
    n->backward_fn = std::move(backward_fn);
  }
  return n;
}

void ensure_work(Node& n) {
  if (!n.work.same_shape(n.data) || n.work.size() != n.data.size()) n.work = Array::zeros(n.data.shape);
}

}  // namespace

Value Value::leaf(Array data, bool requires_grad) {
  auto n = std::make_shared<Node>();
  n->data = std::move(data);
  n->requires_grad = requires_grad;
  if (requires_grad) n->grad = Array::zeros(n->data.shape);
  return Value(n);
}

void Value::zero_grad() { node_->grad = Array::zeros(node_->data.shape); }

void backward(const Value& root) {
  if (!root.defined() || !root.data().is_scalar())
    throw std::invalid_argument("backward: root must be a scalar");
  if (!root.node()->requires_grad) return;

  // Iterative post-order DFS over the requires_grad subgraph.
  std::vector<Node*> topo;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.push_back({root.node().get(), 0});
  root.node()->visited = true;
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      Node* p = n->parents[next++].get();
      if (p->requires_grad && !p->visited) {
        p->visited = true;
        stack.push_back({p, 0});
      }
    } else {
      topo.push_back(n);
      stack.pop_back();
    }
  }

  for (Node* n : topo) {
    ensure_work(*n);
    std::fill(n->work.v.begin(), n->work.v.end(), 0.0);
    n->visited = false;
  }
  root.node()->work.v[0] = 1.0;

  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn) n->backward_fn(*n);
  }
  for (Node* n : topo) {
    if (n->grad.size() != n->data.size()) n->grad = Array::zeros(n->data.shape);
    for (std::size_t i = 0; i < n->grad.size(); ++i) n->grad.v[i] += n->work.v[i];
  }
}

namespace {

// Shapes legal for a binary elementwise op: identical, or one side scalar.
void check_elementwise(const Array& a, const Array& b) {
  if (!a.same_shape(b) && !a.is_scalar() && !b.is_scalar())
    throw std::invalid_argument("elementwise op: shape mismatch " + a.shape_str() + " vs " + b.shape_str());
}

void accum_work(Node& p, const Array& g) {
  ensure_work(p);
  if (p.data.is_scalar()) {
    double s = 0.0;
    for (double x : g.v) s += x;
    p.work.v[0] += s;
  } else {
    for (std::size_t i = 0; i < g.size(); ++i) p.work.v[i] += g.v[i];
  }
}

}  // namespace

Value add(const Value& a, const Value& b) {
  check_elementwise(a.data(), b.data());
  const Array& da = a.data();
  const Array& db = b.data();
  Array out = da.is_scalar() ? db : da;
  for (std::size_t i = 0; i < out.size(); ++i)
    out.v[i] = (da.is_scalar() ? da.v[0] : da.v[i]) + (db.is_scalar() ? db.v[0] : db.v[i]);
  auto pa = a.node();
  auto pb = b.node();
  return Value(make_node(std::move(out), {pa, pb}, [pa, pb](Node& n) {
    if (pa->requires_grad) accum_work(*pa, n.work);
    if (pb->requires_grad) accum_work(*pb, n.work);
  }));
}

Value sub(const Value& a, const Value& b) { return add(a, neg(b)); }

Value neg(const Value& a) {
  Array out = a.data();
  for (double& x : out.v) x = -x;
  auto pa = a.node();
  return Value(make_node(std::move(out), {pa}, [pa](Node& n) {
    ensure_work(*pa);
    for (std::size_t i = 0; i < n.work.size(); ++i) pa->work.v[i] -= n.work.v[i];
  }));
}

Value mul(const Value& a, const Value& b) {
  check_elementwise(a.data(), b.data());
  const Array& da = a.data();
  const Array& db = b.data();
  Array out = da.is_scalar() ? db : da;
  for (std::size_t i = 0; i < out.size(); ++i)
    out.v[i] = (da.is_scalar() ? da.v[0] : da.v[i]) * (db.is_scalar() ? db.v[0] : db.v[i]);
  auto pa = a.node();
  auto pb = b.node();
  return Value(make_node(std::move(out), {pa, pb}, [pa, pb](Node& n) {
    if (pa->requires_grad) {
      Array g = n.work;
      for (std::size_t i = 0; i < g.size(); ++i)
        g.v[i] *= pb->data.is_scalar() ? pb->data.v[0] : pb->data.v[i];
      accum_work(*pa, g);
    }
    if (pb->requires_grad) {
      Array g = n.work;
      for (std::size_t i = 0; i < g.size(); ++i)
        g.v[i] *= pa->data.is_scalar() ? pa->data.v[0] : pa->data.v[i];
      accum_work(*pb, g);
    }
  }));
}

Value scalar_mul(const Value& a, double c) {
  Array out = a.data();
  for (double& x : out.v) x *= c;
  auto pa = a.node();
  return Value(make_node(std::move(out), {pa}, [pa, c](Node& n) {
    ensure_work(*pa);
    for (std::size_t i = 0; i < n.work.size(); ++i) pa->work.v[i] += c * n.work.v[i];
  }));
}

Value matmul(const Value& a, const Value& b) {
  const Array& A = a.data();
  const Array& B = b.data();
  if (A.rank() != 2 || B.rank() != 2 || A.cols() != B.rows())
    throw std::invalid_argument("matmul: incompatible shapes " + A.shape_str() + " x " + B.shape_str());
  const int M = A.rows(), K = A.cols(), N = B.cols();
  Array out = Array::zeros({M, N});
  for (int i = 0; i < M; ++i)
    for (int k = 0; k < K; ++k) {
      const double aik = A.at(i, k);
      for (int j = 0; j < N; ++j) out.at(i, j) += aik * B.at(k, j);
    }
  auto pa = a.node();
  auto pb = b.node();
  return Value(make_node(std::move(out), {pa, pb}, [pa, pb, M, K, N](Node& n) {
    if (pa->requires_grad) {
      ensure_work(*pa);
      for (int i = 0; i < M; ++i)
        for (int j = 0; j < N; ++j) {
          const double g = n.work.at(i, j);
          for (int k = 0; k < K; ++k) pa->work.at(i, k) += g * pb->data.at(k, j);
        }
    }
    if (pb->requires_grad) {
      ensure_work(*pb);
      for (int i = 0; i < M; ++i)
        for (int k = 0; k < K; ++k) {
          const double aik = pa->data.at(i, k);
          for (int j = 0; j < N; ++j) pb->work.at(k, j) += aik * n.work.at(i, j);
        }
    }
  }));
}

Value transpose(const Value& a) {
  const Array& A = a.data();
  if (A.rank() != 2) throw std::invalid_argument("transpose: not a matrix");
  const int R = A.rows(), C = A.cols();
  Array out = Array::zeros({C, R});
  for (int i = 0; i < R; ++i)
    for (int j = 0; j < C; ++j) out.at(j, i) = A.at(i, j);
  auto pa = a.node();
  return Value(make_node(std::move(out), {pa}, [pa, R, C](Node& n) {
    ensure_work(*pa);
    for (int i = 0; i < R; ++i)
      for (int j = 0; j < C; ++j) pa->work.at(i, j) += n.work.at(j, i);
  }));
}

Value sum(const Value& a) {
  double s = 0.0;
  for (double x : a.data().v) s += x;
  auto pa = a.node();
  return Value(make_node(Array::scalar(s), {pa}, [pa](Node& n) {
    ensure_work(*pa);
    const double g = n.work.v[0];
    for (double& w : pa->work.v) w += g;
  }));
}

Value mean(const Value& a) {
  const double inv = 1.0 / static_cast<double>(a.data().size());
  return scalar_mul(sum(a), inv);
}

Value sum_axis(const Value& a, int axis) {
  const Array& A = a.data();
  if (A.rank() != 2 || (axis != 0 && axis != 1)) throw std::invalid_argument("sum_axis: need matrix and axis 0/1");
  const int R = A.rows(), C = A.cols();
  Array out = Array::zeros({axis == 0 ? C : R});
  for (int i = 0; i < R; ++i)
    for (int j = 0; j < C; ++j) out.v[axis == 0 ? j : i] += A.at(i, j);
  auto pa = a.node();
  return Value(make_node(std::move(out), {pa}, [pa, R, C, axis](Node& n) {
    ensure_work(*pa);
    for (int i = 0; i < R; ++i)
      for (int j = 0; j < C; ++j) pa->work.at(i, j) += n.work.v[axis == 0 ? j : i];
  }));
}

Value exp(const Value& a) {
  Array out = a.data();
  for (double& x : out.v) x = std::exp(x);
  auto pa = a.node();
  auto n = make_node(std::move(out), {pa}, nullptr);
  if (n->requires_grad) {
    Node* raw = n.get();
    n->backward_fn = [pa, raw](Node& nn) {
      ensure_work(*pa);
      for (std::size_t i = 0; i < nn.work.size(); ++i) pa->work.v[i] += nn.work.v[i] * raw->data.v[i];
    };
  }
  return Value(n);
}

Value log(const Value& a) {
  Array out = a.data();
  for (double& x : out.v) x = std::log(x);
  auto pa = a.node();
  return Value(make_node(std::move(out), {pa}, [pa](Node& n) {
    ensure_work(*pa);
    for (std::size_t i = 0; i < n.work.size(); ++i) pa->work.v[i] += n.work.v[i] / pa->data.v[i];
  }));
}

Value tanh(const Value& a) {
  Array out = a.data();
  for (double& x : out.v) x = std::tanh(x);
  auto pa = a.node();
  auto n = make_node(std::move(out), {pa}, nullptr);
  if (n->requires_grad) {
    Node* raw = n.get();
    n->backward_fn = [pa, raw](Node& nn) {
      ensure_work(*pa);
      for (std::size_t i = 0; i < nn.work.size(); ++i) {
        const double y = raw->data.v[i];
        pa->work.v[i] += nn.work.v[i] * (1.0 - y * y);
      }
    };
  }
  return Value(n);
}

Value log_softmax_rows(const Value& x) {
  const Array& X = x.data();
  if (X.rank() != 2) throw std::invalid_argument("log_softmax_rows: not a matrix");
  const int R = X.rows(), C = X.cols();
  Array out = X;
  for (int i = 0; i < R; ++i) {
    double m = out.at(i, 0);
    for (int j = 1; j < C; ++j) m = std::max(m, out.at(i, j));
    double s = 0.0;
    for (int j = 0; j < C; ++j) s += std::exp(out.at(i, j) - m);
    const double lse = m + std::log(s);
    for (int j = 0; j < C; ++j) out.at(i, j) -= lse;
  }
  auto pa = x.node();
  auto n = make_node(std::move(out), {pa}, nullptr);
  if (n->requires_grad) {
    Node* raw = n.get();
    n->backward_fn = [pa, raw, R, C](Node& nn) {
      ensure_work(*pa);
      for (int i = 0; i < R; ++i) {
        double gsum = 0.0;
        for (int j = 0; j < C; ++j) gsum += nn.work.at(i, j);
        for (int j = 0; j < C; ++j)
          pa->work.at(i, j) += nn.work.at(i, j) - std::exp(raw->data.at(i, j)) * gsum;
      }
    };
  }
  return Value(n);
}

Value softmax_rows(const Value& x) {
  const Array& X = x.data();
  if (X.rank() != 2) throw std::invalid_argument("softmax_rows: not a matrix");
  const int R = X.rows(), C = X.cols();
  Array out = X;
  for (int i = 0; i < R; ++i) {
    double m = out.at(i, 0);
    for (int j = 1; j < C; ++j) m = std::max(m, out.at(i, j));
    double s = 0.0;
    for (int j = 0; j < C; ++j) {
      out.at(i, j) = std::exp(out.at(i, j) - m);
      s += out.at(i, j);
    }
    for (int j = 0; j < C; ++j) out.at(i, j) /= s;
  }
  auto pa = x.node();
  auto n = make_node(std::move(out), {pa}, nullptr);
  if (n->requires_grad) {
    Node* raw = n.get();
    n->backward_fn = [pa, raw, R, C](Node& nn) {
      ensure_work(*pa);
      for (int i = 0; i < R; ++i) {
        double dot = 0.0;
        for (int j = 0; j < C; ++j) dot += nn.work.at(i, j) * raw->data.at(i, j);
        for (int j = 0; j < C; ++j)
          pa->work.at(i, j) += raw->data.at(i, j) * (nn.work.at(i, j) - dot);
      }
    };
  }
  return Value(n);
}

Value stop_gradient(const Value& x) {
  auto n = std::make_shared<Node>();
  n->data = x.data();
  n->requires_grad = false;
  return Value(n);
}

Value embedding_rows(const Value& table, const std::vector<int>& ids) {
  const Array& T = table.data();
  if (T.rank() != 2) throw std::invalid_argument("embedding_rows: table must be a matrix");
  const int V = T.rows(), E = T.cols();
  for (int id : ids)
    if (id < 0 || id >= V) throw std::invalid_argument("embedding_rows: id out of range");
  Array out = Array::zeros({static_cast<int>(ids.size()), E});
  for (std::size_t i = 0; i < ids.size(); ++i)
    for (int j = 0; j < E; ++j) out.at(static_cast<int>(i), j) = T.at(ids[i], j);
  auto pt = table.node();
  return Value(make_node(std::move(out), {pt}, [pt, ids, E](Node& n) {
    ensure_work(*pt);
    for (std::size_t i = 0; i < ids.size(); ++i)
      for (int j = 0; j < E; ++j) pt->work.at(ids[i], j) += n.work.at(static_cast<int>(i), j);
  }));
}

Value concat_cols(const Value& a, const Value& b) {
  const Array& A = a.data();
  const Array& B = b.data();
  if (A.rank() != 2 || B.rank() != 2 || A.rows() != B.rows())
    throw std::invalid_argument("concat_cols: row counts differ");
  const int R = A.rows(), Ca = A.cols(), Cb = B.cols();
  Array out = Array::zeros({R, Ca + Cb});
  for (int i = 0; i < R; ++i) {
    for (int j = 0; j < Ca; ++j) out.at(i, j) = A.at(i, j);
    for (int j = 0; j < Cb; ++j) out.at(i, Ca + j) = B.at(i, j);
  }
  auto pa = a.node();
  auto pb = b.node();
  return Value(make_node(std::move(out), {pa, pb}, [pa, pb, R, Ca, Cb](Node& n) {
    if (pa->requires_grad) {
      ensure_work(*pa);
      for (int i = 0; i < R; ++i)
        for (int j = 0; j < Ca; ++j) pa->work.at(i, j) += n.work.at(i, j);
    }
    if (pb->requires_grad) {
      ensure_work(*pb);
      for (int i = 0; i < R; ++i)
        for (int j = 0; j < Cb; ++j) pb->work.at(i, j) += n.work.at(i, Ca + j);
    }
  }));
}

Value add_rowvec(const Value& mat, const Value& vec) {
  const Array& M = mat.data();
  const Array& b = vec.data();
  if (M.rank() != 2 || b.rank() != 1 || b.shape[0] != M.cols())
    throw std::invalid_argument("add_rowvec: need (R x C) matrix and length-C vector");
  const int R = M.rows(), C = M.cols();
  Array out = M;
  for (int i = 0; i < R; ++i)
    for (int j = 0; j < C; ++j) out.at(i, j) += b.v[j];
  auto pm = mat.node();
  auto pv = vec.node();
  return Value(make_node(std::move(out), {pm, pv}, [pm, pv, R, C](Node& n) {
    if (pm->requires_grad) accum_work(*pm, n.work);
    if (pv->requires_grad) {
      ensure_work(*pv);
      for (int i = 0; i < R; ++i)
        for (int j = 0; j < C; ++j) pv->work.v[j] += n.work.at(i, j);
    }
  }));
}

Value masked_fill(const Value& x, int r0, int r1, int c0, int c1, double value) {
  const Array& X = x.data();
  if (X.rank() != 2) throw std::invalid_argument("masked_fill: not a matrix");
  if (r0 < 0 || c0 < 0 || r1 > X.rows() || c1 > X.cols() || r0 > r1 || c0 > c1)
    throw std::out_of_range("masked_fill: rectangle out of bounds");
  Array out = X;
  for (int i = r0; i < r1; ++i)
    for (int j = c0; j < c1; ++j) out.at(i, j) = value;
  auto pa = x.node();
  return Value(make_node(std::move(out), {pa}, [pa, r0, r1, c0, c1](Node& n) {
    ensure_work(*pa);
    const int R = pa->data.rows(), C = pa->data.cols();
    for (int i = 0; i < R; ++i)
      for (int j = 0; j < C; ++j) {
        const bool masked = i >= r0 && i < r1 && j >= c0 && j < c1;
        if (!masked) pa->work.at(i, j) += n.work.at(i, j);
      }
  }));
}

Value avg_pool_time(const Value& x, int window, int stride) {
  const Array& X = x.data();
  if (X.rank() != 2) throw std::invalid_argument("avg_pool_time: not a matrix");
  if (window < 1 || stride < 1) throw std::invalid_argument("avg_pool_time: window/stride must be >= 1");
  if (X.rows() < window) throw std::invalid_argument("avg_pool_time: input shorter than window");
  const int T = X.rows(), C = X.cols();
  const int Tp = (T - window) / stride + 1;
  Array out = Array::zeros({Tp, C});
  const double inv = 1.0 / window;
  for (int t = 0; t < Tp; ++t)
    for (int w = 0; w < window; ++w)
      for (int j = 0; j < C; ++j) out.at(t, j) += inv * X.at(t * stride + w, j);
  auto pa = x.node();
  return Value(make_node(std::move(out), {pa}, [pa, Tp, C, window, stride, inv](Node& n) {
    ensure_work(*pa);
    for (int t = 0; t < Tp; ++t)
      for (int w = 0; w < window; ++w)
        for (int j = 0; j < C; ++j) pa->work.at(t * stride + w, j) += inv * n.work.at(t, j);
  }));
}

}  // namespace aligncr
