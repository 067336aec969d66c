#pragma once

#include <deque>
#include <functional>
#include <vector>

#include "swe/tensor.hpp"

namespace swe::ad {

class Graph;

// Handle to a node in a Graph. Cheap to copy; valid for the graph's lifetime.
struct Var {
  Graph* graph = nullptr;
  int id = -1;

  const Tensor& value() const;
  const Tensor& grad() const;
  const std::vector<int>& shape() const { return value().shape(); }
};

// Reverse-mode tape. Nodes are appended in forward order, so creation order
// is a valid topological order; backward walks it in reverse once.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var leaf(Tensor value, bool requires_grad = false);

  // Registers an operation result. The backprop callback reads the node's
  // accumulated gradient and adds into its parents' gradient buffers; it is
  // dropped when no parent wants a gradient.
  Var emplace(Tensor value, std::vector<int> parents,
              std::function<void(Graph&, int)> backprop);

  // Accumulates d(loss)/d(node) for every node reachable from `loss` that
  // requires a gradient. `loss` must be a scalar. Calling backward a second
  // time on the same graph is an error; build a fresh graph instead.
  void backward(Var loss);

  const Tensor& value(Var v) const;
  const Tensor& grad(Var v) const;
  bool has_grad(Var v) const;
  bool requires_grad(Var v) const;
  std::size_t node_count() const { return nodes_.size(); }

  // id-based access for backprop callbacks
  const Tensor& value_of(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  const Tensor& grad_of(int id) const { return nodes_[static_cast<std::size_t>(id)].grad; }
  bool wants_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].requires_grad; }
  const std::vector<int>& parents_of(int id) const {
    return nodes_[static_cast<std::size_t>(id)].parents;
  }
  Tensor& grad_buffer(int id);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    bool grad_alloc = false;
    std::vector<int> parents;
    std::function<void(Graph&, int self)> backprop;
  };

  std::deque<Node> nodes_;
  bool backward_done_ = false;

  void check(Var v) const;
};

// Matrix product of two rank-2 tensors: [m x k] * [k x n] -> [m x n].
Var matmul(Var a, Var b);
Var transpose(Var a);

// Elementwise ops. Binary kinds demand identical shapes; the only implicit
// broadcast anywhere is the scalar in `scale`.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double c);
Var gelu(Var a);
Var relu(Var a);
Var tanh_op(Var a);
Var sigmoid(Var a);

// Softmax along the last dimension, max-subtracted; rows sum to 1.
Var softmax_lastdim(Var a);

// Per-row standardization (x - mean) / sqrt(var + eps) along the last
// dimension. Affine scale/shift live in the layer, not here.
Var layer_norm_lastdim(Var a, double eps);

// Explicit row-wise broadcasts of a length-n vector against an [m x n] matrix.
Var add_rowvec(Var a, Var b);
Var mul_rowvec(Var a, Var b);

Var concat_cols(Var a, Var b);
Var concat_rows(const std::vector<Var>& parts);
Var slice_cols(Var a, int start, int width);
Var slice_rows(Var a, int start, int count);
Var reshape(Var a, std::vector<int> shape);

// Sum of all elements -> scalar [1].
Var sum(Var a);

}  // namespace swe::ad
