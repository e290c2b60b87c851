#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "aligncr/array.hpp"

namespace aligncr {

// One node of the dynamic computation tape. The tape is rebuilt on every
// forward pass; backward() replays it once in reverse topological order.
struct Node {
  Array data;
  Array grad;  // accumulated across backward() calls until zeroed
  Array work;  // scratch gradient for the current backward traversal
  bool requires_grad = false;
  bool visited = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Propagates this node's `work` into the parents' `work` buffers.
  std::function<void(Node&)> backward_fn;
};

// Handle to a tape node. Copying a Value aliases the node.
class Value {
 public:
  Value() = default;
  explicit Value(std::shared_ptr<Node> n) : node_(std::move(n)) {}

  static Value leaf(Array data, bool requires_grad = false);
  static Value scalar(double x) { return leaf(Array::scalar(x)); }

  bool defined() const { return node_ != nullptr; }
  const Array& data() const { return node_->data; }
  Array& data_mut() { return node_->data; }
  const Array& grad() const { return node_->grad; }
  bool requires_grad() const { return node_->requires_grad; }
  void zero_grad();

  std::shared_ptr<Node> node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

// Runs reverse-mode differentiation from a scalar root. Gradients of every
// reachable requires_grad node are accumulated into .grad (not overwritten).
void backward(const Value& root);

Value add(const Value& a, const Value& b);
Value sub(const Value& a, const Value& b);
Value mul(const Value& a, const Value& b);  // elementwise; scalar broadcasts
Value scalar_mul(const Value& a, double c);
Value neg(const Value& a);

Value matmul(const Value& a, const Value& b);
Value transpose(const Value& a);

Value sum(const Value& a);
Value mean(const Value& a);
Value sum_axis(const Value& a, int axis);  // matrix -> rank-1 vector

Value exp(const Value& a);
Value log(const Value& a);
Value tanh(const Value& a);

Value log_softmax_rows(const Value& x);
Value softmax_rows(const Value& x);

// Forward identity, backward zero.
Value stop_gradient(const Value& x);

// Gathers table rows by id; gradients scatter-add back into the table.
Value embedding_rows(const Value& table, const std::vector<int>& ids);

Value concat_cols(const Value& a, const Value& b);

// mat (R x C) + vec (C), broadcast over rows. Vector gradient sums over rows.
Value add_rowvec(const Value& mat, const Value& vec);

// Sets the half-open rectangle [r0,r1) x [c0,c1) to `value`.
Value masked_fill(const Value& x, int r0, int r1, int c0, int c1, double value);

// Average pooling over rows (time) of a matrix.
Value avg_pool_time(const Value& x, int window, int stride);

inline Value operator+(const Value& a, const Value& b) { return add(a, b); }
inline Value operator-(const Value& a, const Value& b) { return sub(a, b); }
inline Value operator*(const Value& a, const Value& b) { return mul(a, b); }
inline Value operator*(double c, const Value& a) { return scalar_mul(a, c); }
inline Value operator*(const Value& a, double c) { return scalar_mul(a, c); }
inline Value operator-(const Value& a) { return neg(a); }

}  // namespace aligncr
