#pragma once

#include <span>

#include "condyn/config.hpp"
#include "condyn/consistency.hpp"

namespace condyn::train {

using cc::RolloutResult;
using diff::BoundParams;
using diff::Graph;
using diff::Tensor;
using diff::Var;

// Per-episode advantage actor-critic surrogate, averaged over the batch:
//   -sum_t log pi(a_t|s_t) * (R_t - V(s_t))
//   + c_v * sum_t (V(s_t) - R_t)^2
//   - c_e * sum_t H(pi(.|s_t))
// R_t is the discounted return-to-go; the advantage is a constant in the
// policy term.
Var a2c_loss(Graph& g, std::span<const RolloutResult> episodes, double gamma,
             double c_v, double c_e);

// Mean over aligned pairs of -log pi(a_t | s_t).
Var imitation_loss(Graph& g, const BoundParams& bp,
                   const model::PolicySpec& spec,
                   std::span<const Tensor> states,
                   std::span<const Tensor> actions);

// Batch dispersion of encoding vectors: per-dimension population std across
// the batch, averaged over dimensions. Near-zero values flag a sequence
// encoder that has collapsed to a constant output.
double encoding_spread(std::span<const Tensor> encodings);

// Joint A2C + dynamics-likelihood + consistency training in the raw state
// space. Writes metrics.csv and snapshot.condyn under cfg.run_dir().
// Returns 0 on completion, 1 if training diverged (the last completed
// update's parameters are still written out).
int train_obs_space(const run::RunConfig& cfg);

// Imitation + sequence-model ELBO + consistency training on rendered expert
// trajectories. Same outputs and return convention. Expects the expert
// datasets to exist under cfg.data_dir.
int train_state_space(const run::RunConfig& cfg);

}  // namespace condyn::train
