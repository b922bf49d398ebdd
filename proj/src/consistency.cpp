#include "condyn/consistency.hpp"

#include <cmath>
#include <string>

#include "condyn/errors.hpp"
#include "condyn/nn.hpp"
#include "condyn/ops.hpp"

namespace condyn::cc {

namespace {

diff::GruParams encoder_gru(const BoundParams& bp) {
  diff::GruParams p;
  p.wz = bp.at("enc.wz");
  p.uz = bp.at("enc.uz");
  p.bz = bp.at("enc.bz");
  p.wr = bp.at("enc.wr");
  p.ur = bp.at("enc.ur");
  p.br = bp.at("enc.br");
  p.wh = bp.at("enc.wh");
  p.uh = bp.at("enc.uh");
  p.bh = bp.at("enc.bh");
  return p;
}

}  // namespace

void encoder_init(ParameterSet& ps, const SeqEncoderSpec& spec,
                  const RngStream& base) {
  const std::size_t in = spec.in_dim;
  const std::size_t h = spec.hidden;
  auto gate = [&](const std::string& w, const std::string& u,
                  const std::string& b) {
    diff::init_uniform(ps, w, {h, in}, in, base);
    diff::init_uniform(ps, u, {h, h}, h, base);
    diff::init_uniform(ps, b, {h}, in, base);
  };
  gate("enc.wz", "enc.uz", "enc.bz");
  gate("enc.wr", "enc.ur", "enc.br");
  gate("enc.wh", "enc.uh", "enc.bh");
}

Var encode_sequence(Graph& g, const BoundParams& bp, const SeqEncoderSpec& spec,
                    std::span<const Var> states) {
  if (states.empty()) {
    throw ConfigError("encode_sequence: empty state sequence");
  }
  const diff::GruParams p = encoder_gru(bp);
  Var h = g.constant(Tensor::zeros({spec.hidden}), "enc_h0");
  for (const Var& s : states) {
    h = diff::gru_cell(g, p, s, h);
  }
  return h;
}

TransitionFn model_transition_fn(const BoundParams& bp,
                                 const model::DynModelSpec& spec,
                                 const model::Normalizer& norm,
                                 model::SampleMode mode, RngStream* rng) {
  return [&bp, spec, &norm, mode, rng](Graph& g, Var state, Var action,
                                       std::size_t /*step*/) {
    return model::dynmodel_next_state(g, bp, spec, norm, state, action, mode,
                                      rng);
  };
}

std::vector<Var> open_loop_rollout(Graph& g, const TransitionFn& fn, Var s0,
                                   std::span<const Var> actions) {
  std::vector<Var> states;
  states.reserve(actions.size());
  Var s = s0;
  for (std::size_t t = 0; t < actions.size(); ++t) {
    s = fn(g, s, actions[t], t);
    const Tensor& v = g.value(s);
    if (!v.all_finite()) {
      throw NonFiniteError("open-loop rollout produced a non-finite state at step " +
                           std::to_string(t));
    }
    states.push_back(s);
  }
  return states;
}

RolloutResult closed_loop_rollout(Graph& g, const BoundParams& bp,
                                  const model::PolicySpec& pspec,
                                  const env::EnvSpec& espec,
                                  const env::EnvState& start,
                                  std::size_t horizon, model::ActMode mode,
                                  RngStream* rng, bool render) {
  RolloutResult out;
  out.traj.start = start;
  env::EnvState state = start;
  std::vector<env::EnvState> history;
  history.push_back(state);
  for (std::size_t t = 0; t < horizon; ++t) {
    model::PolicyEval ev =
        model::policy_act(g, bp, pspec, env::state_tensor(state), mode, rng);
    env::StepResult sr = env::env_step(espec, state, ev.action_value);
    out.steps.push_back(ev);
    out.traj.actions.push_back(ev.action_value);
    out.traj.states.push_back(sr.state);
    out.traj.rewards.push_back(sr.reward);
    if (render) {
      history.push_back(sr.state);
      out.traj.observations.push_back(
          env::render_observation(espec, history));
    }
    state = sr.state;
    if (sr.done) {
      break;
    }
  }
  return out;
}

Var consistency_loss(Graph& g, const BoundParams& bp, const SeqEncoderSpec& spec,
                     std::span<const Var> closed, std::span<const Var> open) {
  if (closed.size() != open.size()) {
    throw ConfigError("consistency_loss: sequence lengths differ (" +
                      std::to_string(closed.size()) + " vs " +
                      std::to_string(open.size()) + ")");
  }
  Var ec = encode_sequence(g, bp, spec, closed);
  Var eo = encode_sequence(g, bp, spec, open);
  return diff::l2_diff_norm(g, ec, eo);
}

Var total_loss(Graph& g, Var l_rl, Var l_cc, double alpha) {
  if (alpha < 0.0) {
    throw ConfigError("consistency weight must be >= 0, got " +
                      std::to_string(alpha));
  }
  if (alpha == 0.0) {
    return l_rl;
  }
  return diff::add(g, l_rl, diff::mul_scalar(g, l_cc, alpha));
}

}  // namespace condyn::cc
