#include "condyn/params.hpp"

#include <cmath>

#include "condyn/nn.hpp"

namespace condyn::diff {

void ParameterSet::add(const std::string& name, Tensor t) {
  if (name.empty()) throw ConfigError("parameter with empty name");
  if (t.empty()) throw ShapeError("parameter '" + name + "' is empty");
  auto [it, fresh] = p_.emplace(name, std::move(t));
  (void)it;
  if (!fresh) throw ConfigError("duplicate parameter '" + name + "'");
}

Tensor& ParameterSet::at(const std::string& name) {
  auto it = p_.find(name);
  if (it == p_.end()) throw ConfigError("unknown parameter '" + name + "'");
  return it->second;
}

const Tensor& ParameterSet::at(const std::string& name) const {
  auto it = p_.find(name);
  if (it == p_.end()) throw ConfigError("unknown parameter '" + name + "'");
  return it->second;
}

std::vector<std::string> ParameterSet::names() const {
  std::vector<std::string> out;
  out.reserve(p_.size());
  for (const auto& [k, v] : p_) out.push_back(k);
  return out;
}

std::vector<std::string> ParameterSet::names_with_prefix(
    const std::string& prefix) const {
  std::vector<std::string> out;
  for (const auto& [k, v] : p_)
    if (k.rfind(prefix, 0) == 0) out.push_back(k);
  return out;
}

void GradientRecord::add(const std::string& name, Tensor g) {
  g_[name] = std::move(g);
}

const Tensor& GradientRecord::at(const std::string& name) const {
  auto it = g_.find(name);
  if (it == g_.end()) throw ConfigError("no gradient for '" + name + "'");
  return it->second;
}

BoundParams::BoundParams(Graph& g, const ParameterSet& ps, bool trainable) {
  for (const auto& [name, t] : ps)
    v_.emplace(name, trainable ? g.leaf(t, "param") : g.constant(t, "param"));
}

Var BoundParams::at(const std::string& name) const {
  auto it = v_.find(name);
  if (it == v_.end()) throw ConfigError("parameter '" + name + "' is not bound");
  return it->second;
}

GradientRecord backward_gradients(Graph& g, Var loss, const BoundParams& bp,
                                  const ParameterSet& ps) {
  g.backward(loss);
  GradientRecord out;
  for (const auto& [name, t] : ps) out.add(name, g.grad(bp.at(name)));
  return out;
}

void init_uniform(ParameterSet& ps, const std::string& name, Shape shape,
                  std::size_t fan_in, const RngStream& base) {
  if (fan_in == 0) throw ConfigError("init_uniform: zero fan_in for '" + name + "'");
  RngStream s = base.derive(name);
  double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = s.uniform(-bound, bound);
  ps.add(name, std::move(t));
}

void init_linear(ParameterSet& ps, const std::string& name, std::size_t out,
                 std::size_t in, const RngStream& base) {
  init_uniform(ps, name + ".w", Shape{out, in}, in, base);
  init_uniform(ps, name + ".b", Shape{out}, in, base);
}

Var linear_layer(Graph& g, const BoundParams& bp, const std::string& name, Var x) {
  return linear(g, bp.at(name + ".w"), bp.at(name + ".b"), x);
}

}  // namespace condyn::diff
