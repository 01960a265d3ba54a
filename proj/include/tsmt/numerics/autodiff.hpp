#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <vector>

#include "tsmt/numerics/array.hpp"
#include "tsmt/numerics/rng.hpp"

namespace tsmt::ad {

class Graph;

/// Handle to a node on a Graph tape. Cheap to copy.
struct Var {
  Graph* graph = nullptr;
  std::size_t id = 0;

  const Array& value() const;
  const Array& grad() const;
  const Shape& shape() const { return value().shape(); }
};

/// Reverse-mode tape. Nodes are appended in evaluation order, so reverse id
/// order is a valid topological order for the backward sweep.
class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, std::size_t self)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Array value);
  /// Trainable leaf that owns its value.
  Var variable(Array value);
  /// Trainable leaf viewing external storage; `value` must outlive the graph.
  Var parameter(const Array& value);

  const Array& value(std::size_t id) const;
  /// Gradient of a node; a zero array when nothing flowed into it.
  const Array& grad(std::size_t id) const;
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  bool is_trainable(std::size_t id) const { return nodes_[id].trainable; }
  std::size_t size() const { return nodes_.size(); }

  /// Runs the chain rule from a scalar loss. A second call without
  /// `zero_grad()` throws std::logic_error.
  void backward(Var loss);
  void zero_grad();

  // Op plumbing.
  Var record(Array value, std::span<const Var> inputs, BackwardFn fn);
  Array& grad_accumulator(std::size_t id);

  // Training-mode state consulted by stochastic ops (dropout).
  bool training = false;
  Rng rng{0};

 private:
  struct Node {
    Array own;
    const Array* external = nullptr;
    Array grad;
    bool requires_grad = false;
    bool trainable = false;
    BackwardFn backward;
  };

  const Array& node_value(const Node& n) const { return n.external ? *n.external : n.own; }

  std::deque<Node> nodes_;  // stable references across appends
  bool backward_done_ = false;
  mutable Array zero_cache_;
};

// Linear algebra and elementwise ops. Shape errors throw std::invalid_argument
// with both shapes in the message.
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
/// a (rows x n) + bias (n), bias broadcast over rows.
Var add_row(Var a, Var bias);
Var relu(Var a);
Var transpose(Var a);
Var reshape(Var a, Shape shape);

// Last-axis normalizers.
Var softmax(Var a);
Var log_softmax(Var a);
/// Layer norm over the last axis with learned gain/bias; variance floored by eps.
Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5);

/// Causal 1-D convolution along rows (time): x (T x Cin), w (K x Cin x Cout),
/// bias (Cout). Output row t sees input rows t-K+1..t, zero left padding.
Var conv1d_causal(Var x, Var w, Var bias);

/// Embedding gather. tokens is rows x cols (row-major). With `by_column`
/// the table is (D x V) and entry v is column v; otherwise (V x D) rows.
/// Output is rows x (cols * D).
Var embed(Var table, std::span<const int> tokens, std::size_t rows, std::size_t cols, bool by_column);

Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
Var slice_cols(Var a, std::size_t start, std::size_t len);
Var slice_rows(Var a, std::size_t start, std::size_t len);

/// Sets entries with column > row to -inf (square score matrices).
Var causal_mask(Var scores);
/// Inverted dropout; identity when the graph is not training or p == 0.
Var dropout(Var a, double p);

Var sum(Var a);
Var mean(Var a);
/// Mean of -logp[i, targets[i]] over rows of a (rows x C) log-probability matrix.
Var nll(Var logp, std::span<const int> targets);
/// Cross-entropy of logits (rows x C) against integer targets, mean over rows.
Var cross_entropy(Var logits, std::span<const int> targets);

}  // namespace tsmt::ad
