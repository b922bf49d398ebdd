#include "condyn/graph.hpp"

#include <cmath>
#include <string>

namespace condyn::diff {

int Graph::check(Var v) const {
  if (v.id < 0 || static_cast<std::size_t>(v.id) >= nodes_.size())
    throw ShapeError("invalid graph handle");
  return v.id;
}

Var Graph::constant(Tensor value, const char* op) {
  if (value.empty()) throw ShapeError("empty tensor fed to graph");
  nodes_.push_back(Node{op, std::move(value), BackFn{}, false});
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Graph::leaf(Tensor value, const char* op) {
  if (value.empty()) throw ShapeError("empty tensor fed to graph");
  nodes_.push_back(Node{op, std::move(value), BackFn{}, true});
  return Var{static_cast<int>(nodes_.size()) - 1};
}

const Tensor& Graph::value(Var v) const { return nodes_[static_cast<std::size_t>(check(v))].value; }

const char* Graph::op_name(Var v) const { return nodes_[static_cast<std::size_t>(check(v))].op; }

bool Graph::wants_grad(Var v) const { return nodes_[static_cast<std::size_t>(check(v))].needs_grad; }

Var Graph::make(const char* op, Tensor value, std::initializer_list<Var> inputs,
                BackFn back) {
  if (value.empty()) throw ShapeError(std::string(op) + ": empty result");
  bool needs = false;
  for (Var in : inputs) needs = needs || nodes_[static_cast<std::size_t>(check(in))].needs_grad;
  nodes_.push_back(Node{op, std::move(value), needs ? std::move(back) : BackFn{}, needs});
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Graph::make(const char* op, Tensor value, const std::vector<Var>& inputs,
                BackFn back) {
  if (value.empty()) throw ShapeError(std::string(op) + ": empty result");
  bool needs = false;
  for (Var in : inputs) needs = needs || nodes_[static_cast<std::size_t>(check(in))].needs_grad;
  nodes_.push_back(Node{op, std::move(value), needs ? std::move(back) : BackFn{}, needs});
  return Var{static_cast<int>(nodes_.size()) - 1};
}

void Graph::backward(Var loss) {
  int lid = check(loss);
  const Tensor& lv = nodes_[static_cast<std::size_t>(lid)].value;
  if (lv.size() != 1)
    throw ShapeError("backward needs a scalar loss, got shape " +
                     shape_str(lv.shape()));
  if (!std::isfinite(lv[0])) {
    for (const Node& n : nodes_)
      if (!n.value.all_finite())
        throw NonFiniteError(std::string("non-finite value produced by op '") +
                             n.op + "'");
    throw NonFiniteError("non-finite loss");
  }
  grads_.assign(nodes_.size(), Tensor());
  if (!nodes_[static_cast<std::size_t>(lid)].needs_grad) return;  // loss independent of leaves
  grads_[static_cast<std::size_t>(lid)] = Tensor::scalar(1.0);
  for (int i = lid; i >= 0; --i) {
    auto& n = nodes_[static_cast<std::size_t>(i)];
    if (grads_[static_cast<std::size_t>(i)].empty() || !n.back) continue;
    n.back(*this);
  }
}

Tensor Graph::grad(Var v) const {
  int id = check(v);
  if (static_cast<std::size_t>(id) < grads_.size() && !grads_[static_cast<std::size_t>(id)].empty())
    return grads_[static_cast<std::size_t>(id)];
  return Tensor::zeros(nodes_[static_cast<std::size_t>(id)].value.shape());
}

const Tensor& Graph::out_grad(int id) const { return grads_[static_cast<std::size_t>(id)]; }

double* Graph::grad_buffer(int id, const Shape& shape) {
  auto& n = nodes_[static_cast<std::size_t>(id)];
  if (!n.needs_grad) return nullptr;
  Tensor& g = grads_[static_cast<std::size_t>(id)];
  if (g.empty()) g = Tensor::zeros(shape);
  return g.data();
}

void Graph::add_grad(int id, const Tensor& g) {
  if (!nodes_[static_cast<std::size_t>(id)].needs_grad) return;
  double* buf = grad_buffer(id, g.shape());
  const double* src = g.data();
  for (std::size_t i = 0; i < g.size(); ++i) buf[i] += src[i];
}

}  // namespace condyn::diff
