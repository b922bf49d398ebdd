#pragma once

#include <functional>
#include <span>

#include "condyn/dynmodel.hpp"
#include "condyn/envs.hpp"

namespace condyn::cc {

using diff::BoundParams;
using diff::Graph;
using diff::ParameterSet;
using diff::RngStream;
using diff::Tensor;
using diff::Var;

// GRU sequence encoder over state vectors; hidden 32, zero initial hidden
// state, final hidden state as the encoding. Parameter prefix "enc.".
struct SeqEncoderSpec {
  std::size_t in_dim;
  std::size_t hidden = 32;
  bool frozen = false;  // frozen: excluded from optimization, still saved
};

void encoder_init(ParameterSet& ps, const SeqEncoderSpec& spec,
                  const RngStream& base);

Var encode_sequence(Graph& g, const BoundParams& bp, const SeqEncoderSpec& spec,
                    std::span<const Var> states);

// One imagined transition: state_{t+1} from (state_t, action_t). The step
// index is available for error reporting.
using TransitionFn =
    std::function<Var(Graph&, Var state, Var action, std::size_t step)>;

TransitionFn model_transition_fn(const BoundParams& bp,
                                 const model::DynModelSpec& spec,
                                 const model::Normalizer& norm,
                                 model::SampleMode mode, RngStream* rng);

// Open-loop unroll from s0 under the recorded actions. Imagined states depend
// only on (s0, actions, model); real successor states are never read. Throws
// NonFiniteError naming the step index on divergence.
std::vector<Var> open_loop_rollout(Graph& g, const TransitionFn& fn, Var s0,
                                   std::span<const Var> actions);

struct RolloutResult {
  env::Trajectory traj;
  std::vector<model::PolicyEval> steps;
};

// Runs the policy in the environment for up to `horizon` steps (stops early
// on terminal states). Policy evaluations stay on the graph so their
// log-probs, entropies, values, and reparameterized actions remain
// differentiable.
RolloutResult closed_loop_rollout(Graph& g, const BoundParams& bp,
                                  const model::PolicySpec& pspec,
                                  const env::EnvSpec& espec,
                                  const env::EnvState& start,
                                  std::size_t horizon, model::ActMode mode,
                                  RngStream* rng, bool render = false);

// || enc(closed) - enc(open) ||_2. Sequences must agree in length and width.
// The caller passes the closed-loop branch as constants (stop-gradient).
Var consistency_loss(Graph& g, const BoundParams& bp, const SeqEncoderSpec& spec,
                     std::span<const Var> closed, std::span<const Var> open);

// l_rl + alpha * l_cc; alpha must be >= 0.
Var total_loss(Graph& g, Var l_rl, Var l_cc, double alpha);

}  // namespace condyn::cc
