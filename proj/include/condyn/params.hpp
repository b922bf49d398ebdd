#pragma once

#include <map>
#include <string>
#include <vector>

#include "condyn/graph.hpp"
#include "condyn/rng.hpp"
#include "condyn/tensor.hpp"

namespace condyn::diff {

// Named tensors, ordered by name. Value-like; iteration and serialization
// order are the sorted names, so every traversal is deterministic.
class ParameterSet {
 public:
  void add(const std::string& name, Tensor t);
  bool has(const std::string& name) const { return p_.count(name) > 0; }
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  std::vector<std::string> names() const;
  std::vector<std::string> names_with_prefix(const std::string& prefix) const;
  std::size_t size() const { return p_.size(); }

  auto begin() const { return p_.begin(); }
  auto end() const { return p_.end(); }

 private:
  std::map<std::string, Tensor> p_;
};

// Per-parameter gradients from one backward sweep. Parameters the loss never
// touched carry exact zeros.
class GradientRecord {
 public:
  void add(const std::string& name, Tensor g);
  bool has(const std::string& name) const { return g_.count(name) > 0; }
  const Tensor& at(const std::string& name) const;
  auto begin() const { return g_.begin(); }
  auto end() const { return g_.end(); }

 private:
  std::map<std::string, Tensor> g_;
};

// A ParameterSet bound into one Graph. trainable=false binds constants
// (evaluation-only graphs skip all gradient bookkeeping).
class BoundParams {
 public:
  BoundParams(Graph& g, const ParameterSet& ps, bool trainable = true);
  Var at(const std::string& name) const;

 private:
  std::map<std::string, Var> v_;
};

// Gradients of a scalar loss with respect to every bound parameter.
GradientRecord backward_gradients(Graph& g, Var loss, const BoundParams& bp,
                                  const ParameterSet& ps);

// Uniform init on [-1/sqrt(fan_in), +1/sqrt(fan_in)] from the stream derived
// as base.derive(name): values depend only on (root seed, stream name,
// parameter name), never on creation order.
void init_uniform(ParameterSet& ps, const std::string& name, Shape shape,
                  std::size_t fan_in, const RngStream& base);

// Linear layer pair "<name>.w" [out,in] and "<name>.b" [out].
void init_linear(ParameterSet& ps, const std::string& name, std::size_t out,
                 std::size_t in, const RngStream& base);

Var linear_layer(Graph& g, const BoundParams& bp, const std::string& name, Var x);

}  // namespace condyn::diff
