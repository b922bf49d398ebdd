#pragma once

#include <span>
#include <string>

#include "condyn/params.hpp"

namespace condyn::model {

using diff::BoundParams;
using diff::Graph;
using diff::ParameterSet;
using diff::Shape;
using diff::Tensor;
using diff::Var;

// Running per-feature mean/std (Welford). Until the first update the stats
// are mean 0, std 1, so apply() is the near-identity (x - 0)/(1 + 1e-8).
class RunningStats {
 public:
  explicit RunningStats(std::size_t dim);

  void update(std::span<const Tensor> batch);
  std::size_t count() const { return count_; }
  std::size_t dim() const { return mean_.size(); }
  const Tensor& mean() const { return mean_; }
  // Population std; exact zeros stay zero (the epsilon guard handles them).
  Tensor stddev() const;

  Tensor apply(const Tensor& x) const;
  Tensor invert(const Tensor& y) const;
  Var apply(Graph& g, Var x) const;
  Var invert(Graph& g, Var y) const;

  void to_params(ParameterSet& ps, const std::string& prefix) const;
  static RunningStats from_params(const ParameterSet& ps, const std::string& prefix);

 private:
  std::size_t count_ = 0;
  Tensor mean_;
  Tensor m2_;
};

// Normalization state for the observation-space dynamics model: inputs
// (state, action encoding) and targets (state deltas). Statistics come from
// closed-loop data only and are frozen between updates by construction (the
// trainer calls update once per iteration, before building losses).
struct Normalizer {
  RunningStats state;
  RunningStats action;
  RunningStats delta;

  Normalizer(std::size_t state_dim, std::size_t action_dim)
      : state(state_dim), action(action_dim), delta(state_dim) {}

  // Absorbs a batch and returns the normalized state batch.
  std::vector<Tensor> update_apply(std::span<const Tensor> states,
                                   std::span<const Tensor> actions,
                                   std::span<const Tensor> deltas);

  void to_params(ParameterSet& ps) const;
  static Normalizer from_params(const ParameterSet& ps);
};

}  // namespace condyn::model
