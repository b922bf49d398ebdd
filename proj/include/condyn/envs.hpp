#pragma once

#include <span>
#include <string>
#include <vector>

#include "condyn/rng.hpp"
#include "condyn/tensor.hpp"

namespace condyn::env {

using diff::RngStream;
using diff::Tensor;

enum class EnvId { PointMass2D, PendulumSwingUp, DiscreteGridNav };
enum class ActionKind { Continuous, Discrete };

struct EnvSpec {
  EnvId id;
  std::string name;
  std::size_t state_dim;
  // Component count for continuous actions, category count for discrete.
  std::size_t action_dim;
  ActionKind kind;
  std::size_t horizon;
  double dt;
};

// Known names: pointmass2d, pendulum, gridnav.
EnvSpec make_env(const std::string& name);

struct EnvState {
  std::vector<double> v;
};

struct StepResult {
  EnvState state;
  double reward;
  bool done;
};

EnvState env_reset(const EnvSpec& spec, RngStream& rng);

// Deterministic transition. Continuous actions are clipped to [-1,1] inside;
// discrete actions are a single index stored as a 1-element tensor.
StepResult env_step(const EnvSpec& spec, const EnvState& s, const Tensor& action);

// Stacked [4,16,16] frame observation, oldest to newest, left-padded by
// repeating the earliest frame in `history`. `history` holds the most recent
// states ending at the observed one.
Tensor render_observation(const EnvSpec& spec, std::span<const EnvState> history);

// Scripted controller for the continuous environments. Throws ConfigError for
// DiscreteGridNav.
Tensor expert_action(const EnvSpec& spec, const EnvState& s);

// sum_t gamma^t * r_t; gamma must lie in [0,1).
double discounted_return(std::span<const double> rewards, double gamma);

Tensor state_tensor(const EnvState& s);

// Model-input encoding of an action: identity for continuous, one-hot for
// discrete.
Tensor action_input(const EnvSpec& spec, const Tensor& action);
std::size_t action_input_dim(const EnvSpec& spec);

struct Trajectory {
  EnvState start;
  std::vector<EnvState> states;        // s_1..s_T
  std::vector<Tensor> observations;    // o_1..o_T when rendered
  std::vector<Tensor> actions;         // a_0..a_{T-1}, unclipped as sampled
  std::vector<double> rewards;         // r_0..r_{T-1}
};

}  // namespace condyn::env
