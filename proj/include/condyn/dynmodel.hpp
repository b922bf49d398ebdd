#pragma once

#include <functional>
#include <optional>
#include <span>

#include "condyn/envs.hpp"
#include "condyn/nn.hpp"
#include "condyn/normalizer.hpp"

namespace condyn::model {

using diff::RngStream;

enum class SampleMode { Mean, Sample };

// Gaussian MLP over normalized state deltas: two tanh layers of 64 units,
// then mean and log-variance heads (log-variance clamped to [-10,5]).
struct DynModelSpec {
  std::size_t state_dim;
  std::size_t action_dim;  // encoded width (one-hot for discrete)
  std::size_t hidden = 64;
};

void dynmodel_init(ParameterSet& ps, const DynModelSpec& spec,
                   const RngStream& base);

struct DeltaDist {
  Var mean_n;     // normalized-delta mean
  Var log_var_n;  // clamped log-variance
};

DeltaDist dynmodel_forward(Graph& g, const BoundParams& bp,
                           const DynModelSpec& spec, const Normalizer& norm,
                           Var s, Var a);

// s + denormalized delta. Sample mode draws epsilon from rng.
Var dynmodel_next_state(Graph& g, const BoundParams& bp, const DynModelSpec& spec,
                        const Normalizer& norm, Var s, Var a, SampleMode mode,
                        RngStream* rng);

struct DeltaPrediction {
  Tensor mean_n;
  Tensor log_var_n;
  Tensor next_state;
};

// Convenience wrapper over a throwaway graph.
DeltaPrediction predict_delta(const ParameterSet& ps, const DynModelSpec& spec,
                              const Normalizer& norm, const Tensor& s,
                              const Tensor& a, SampleMode mode, RngStream* rng);

struct Transition {
  Tensor s;
  Tensor a;  // encoded model input
  Tensor s_next;
};

// Mean over transitions of the Gaussian NLL of normalized deltas.
Var dynamics_nll(Graph& g, const BoundParams& bp, const DynModelSpec& spec,
                 const Normalizer& norm, std::span<const Transition> batch);

// ---- policy ----

struct PolicySpec {
  std::size_t obs_dim;
  env::ActionKind kind;
  std::size_t action_dim;  // components or categories
  std::size_t hidden = 64;
};

// Creates policy.* (two tanh layers + mean or logits head, plus a
// state-independent log-std initialized to log 0.5 for continuous actions)
// and, when with_value is set, the separate value head value.*.
void policy_init(ParameterSet& ps, const PolicySpec& spec, const RngStream& base,
                 bool with_value = true);

enum class ActMode { Mean, Sample, Reparam };

struct PolicyEval {
  Tensor action_value;  // as sampled, unclipped
  Var action;           // reparameterized node when mode == Reparam
  Var log_prob;         // of action_value under the current policy
  Var entropy;
  Var value;
};

// One policy evaluation. In Sample/Reparam mode, `eps` (or a draw from rng)
// provides the noise; log_prob is always computed at the recorded action
// value, so the policy-gradient path is the score function while the
// reparameterized `action` node carries pathwise gradients.
PolicyEval policy_act(Graph& g, const BoundParams& bp, const PolicySpec& spec,
                      const Tensor& obs, ActMode mode, RngStream* rng,
                      const Tensor* eps = nullptr);

// log pi(action | obs) for a given action (index tensor for discrete
// policies); gradients flow into the policy parameters.
Var policy_log_prob(Graph& g, const BoundParams& bp, const PolicySpec& spec,
                    const Tensor& obs, const Tensor& action);

// Re-evaluates log-prob, entropy, and value on a recorded step without
// sampling; the action node is a constant. Lets losses over stored
// trajectories be rebuilt as pure functions of the parameters.
PolicyEval policy_eval_recorded(Graph& g, const BoundParams& bp,
                                const PolicySpec& spec, const Tensor& obs,
                                const Tensor& action);

}  // namespace condyn::model
