#pragma once

#include <functional>
#include <initializer_list>
#include <vector>

#include "condyn/tensor.hpp"

namespace condyn::diff {

class Graph;

// Handle to a node in a Graph. Plain value; valid while its graph lives.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Computation tape. Nodes are appended in evaluation order; backward walks
// them in reverse, which is a topological order by construction. Single
// threaded, fixed accumulation order: repeated sweeps over an identical graph
// are bit-identical.
class Graph {
 public:
  using BackFn = std::function<void(Graph&)>;

  // Node with no gradient (inputs, recorded data, detached values).
  Var constant(Tensor value, const char* op = "constant");
  // Gradient-carrying terminal (parameters bound into this graph).
  Var leaf(Tensor value, const char* op = "leaf");

  const Tensor& value(Var v) const;
  const char* op_name(Var v) const;
  bool wants_grad(Var v) const;
  std::size_t size() const { return nodes_.size(); }

  // Reverse sweep from a scalar loss. Throws NonFiniteError naming the first
  // op that produced a non-finite value when the loss is not finite.
  void backward(Var loss);

  // Gradient of the last backward() at v; exact zeros when v was not reached.
  Tensor grad(Var v) const;

  // --- used by op implementations ---
  Var make(const char* op, Tensor value, std::initializer_list<Var> inputs,
           BackFn back);
  Var make(const char* op, Tensor value, const std::vector<Var>& inputs,
           BackFn back);
  const Tensor& out_grad(int id) const;
  // Accumulation buffer for node id, or nullptr when the node takes no
  // gradient. Allocated zero-filled on first use.
  double* grad_buffer(int id, const Shape& shape);
  void add_grad(int id, const Tensor& g);
  bool node_wants(int id) const { return nodes_[static_cast<std::size_t>(id)].needs_grad; }

 private:
  struct Node {
    const char* op;
    Tensor value;
    BackFn back;  // empty when needs_grad is false
    bool needs_grad = false;
  };
  int check(Var v) const;

  std::vector<Node> nodes_;
  std::vector<Tensor> grads_;
};

}  // namespace condyn::diff
