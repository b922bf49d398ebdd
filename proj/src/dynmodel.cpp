#include "condyn/dynmodel.hpp"

#include <cmath>
#include <string>

#include "condyn/errors.hpp"
#include "condyn/ops.hpp"

namespace condyn::model {

namespace {
constexpr double kLvLo = -10.0, kLvHi = 5.0;
}

void dynmodel_init(ParameterSet& ps, const DynModelSpec& spec,
                   const RngStream& base) {
  std::size_t in = spec.state_dim + spec.action_dim;
  diff::init_linear(ps, "dyn.l1", spec.hidden, in, base);
  diff::init_linear(ps, "dyn.l2", spec.hidden, spec.hidden, base);
  diff::init_linear(ps, "dyn.mu", spec.state_dim, spec.hidden, base);
  diff::init_linear(ps, "dyn.lv", spec.state_dim, spec.hidden, base);
}

DeltaDist dynmodel_forward(Graph& g, const BoundParams& bp,
                           const DynModelSpec& spec, const Normalizer& norm,
                           Var s, Var a) {
  Var sn = norm.state.apply(g, s);
  Var an = norm.action.apply(g, a);
  Var x = diff::concat(g, {sn, an});
  Var h1 = diff::tanh_v(g, diff::linear_layer(g, bp, "dyn.l1", x));
  Var h2 = diff::tanh_v(g, diff::linear_layer(g, bp, "dyn.l2", h1));
  Var mu = diff::linear_layer(g, bp, "dyn.mu", h2);
  Var lv = diff::clamp_v(g, diff::linear_layer(g, bp, "dyn.lv", h2), kLvLo, kLvHi);
  (void)spec;
  return DeltaDist{mu, lv};
}

Var dynmodel_next_state(Graph& g, const BoundParams& bp, const DynModelSpec& spec,
                        const Normalizer& norm, Var s, Var a, SampleMode mode,
                        RngStream* rng) {
  DeltaDist d = dynmodel_forward(g, bp, spec, norm, s, a);
  Var delta_n = d.mean_n;
  if (mode == SampleMode::Sample) {
    if (!rng) throw ConfigError("dynmodel: sample mode without an RNG stream");
    Tensor eps(diff::Shape{spec.state_dim});
    for (std::size_t i = 0; i < eps.size(); ++i) eps[i] = rng->normal();
    Var sd = diff::exp_v(g, diff::mul_scalar(g, d.log_var_n, 0.5));
    delta_n = diff::add(g, delta_n, diff::mul(g, sd, g.constant(eps, "eps")));
  }
  Var delta = norm.delta.invert(g, delta_n);
  return diff::add(g, s, delta);
}

DeltaPrediction predict_delta(const ParameterSet& ps, const DynModelSpec& spec,
                              const Normalizer& norm, const Tensor& s,
                              const Tensor& a, SampleMode mode, RngStream* rng) {
  Graph g;
  BoundParams bp(g, ps, /*trainable=*/false);
  DeltaDist d = dynmodel_forward(g, bp, spec, norm, g.constant(s, "state"),
                                 g.constant(a, "action"));
  Var next = dynmodel_next_state(g, bp, spec, norm, g.constant(s, "state"),
                                 g.constant(a, "action"), mode, rng);
  return DeltaPrediction{g.value(d.mean_n), g.value(d.log_var_n), g.value(next)};
}

Var dynamics_nll(Graph& g, const BoundParams& bp, const DynModelSpec& spec,
                 const Normalizer& norm, std::span<const Transition> batch) {
  if (batch.empty()) throw ConfigError("dynamics_nll: empty batch");
  std::vector<Var> terms;
  terms.reserve(batch.size());
  for (const Transition& tr : batch) {
    Tensor delta(tr.s.shape());
    for (std::size_t i = 0; i < delta.size(); ++i)
      delta[i] = tr.s_next[i] - tr.s[i];
    Tensor target = norm.delta.apply(delta);
    DeltaDist d = dynmodel_forward(g, bp, spec, norm, g.constant(tr.s, "state"),
                                   g.constant(tr.a, "action"));
    terms.push_back(diff::gaussian_diag_nll(g, g.constant(target, "delta"),
                                            d.mean_n, d.log_var_n));
  }
  return diff::mul_scalar(g, diff::sum_vars(g, terms),
                          1.0 / static_cast<double>(terms.size()));
}

void policy_init(ParameterSet& ps, const PolicySpec& spec, const RngStream& base,
                 bool with_value) {
  diff::init_linear(ps, "policy.l1", spec.hidden, spec.obs_dim, base);
  diff::init_linear(ps, "policy.l2", spec.hidden, spec.hidden, base);
  diff::init_linear(ps, "policy.head", spec.action_dim, spec.hidden, base);
  if (spec.kind == env::ActionKind::Continuous)
    ps.add("policy.log_std",
           Tensor::full({spec.action_dim}, std::log(0.5)));
  if (with_value) {
    diff::init_linear(ps, "value.l1", spec.hidden, spec.obs_dim, base);
    diff::init_linear(ps, "value.l2", spec.hidden, spec.hidden, base);
    diff::init_linear(ps, "value.out", 1, spec.hidden, base);
  }
}

namespace {

Var policy_head(Graph& g, const BoundParams& bp, const PolicySpec& spec, Var obs) {
  Var h1 = diff::tanh_v(g, diff::linear_layer(g, bp, "policy.l1", obs));
  Var h2 = diff::tanh_v(g, diff::linear_layer(g, bp, "policy.l2", h1));
  (void)spec;
  return diff::linear_layer(g, bp, "policy.head", h2);
}

Var value_head(Graph& g, const BoundParams& bp, Var obs) {
  Var h1 = diff::tanh_v(g, diff::linear_layer(g, bp, "value.l1", obs));
  Var h2 = diff::tanh_v(g, diff::linear_layer(g, bp, "value.l2", h1));
  return diff::linear_layer(g, bp, "value.out", h2);
}

std::vector<double> softmax_of(const Tensor& logits) {
  double mx = logits[0];
  for (std::size_t i = 1; i < logits.size(); ++i) mx = std::max(mx, logits[i]);
  double z = 0.0;
  std::vector<double> p(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - mx);
    z += p[i];
  }
  for (double& x : p) x /= z;
  return p;
}

}  // namespace

PolicyEval policy_act(Graph& g, const BoundParams& bp, const PolicySpec& spec,
                      const Tensor& obs, ActMode mode, RngStream* rng,
                      const Tensor* eps) {
  Var obs_v = g.constant(obs, "obs");
  Var head = policy_head(g, bp, spec, obs_v);
  PolicyEval out;
  out.value = value_head(g, bp, obs_v);

  if (spec.kind == env::ActionKind::Continuous) {
    Var log_std = diff::clamp_v(g, bp.at("policy.log_std"), -5.0, 2.0);
    Tensor noise(diff::Shape{spec.action_dim});
    if (mode != ActMode::Mean) {
      if (eps) {
        if (eps->size() != spec.action_dim)
          throw ShapeError("policy_act: eps shape " + diff::shape_str(eps->shape()));
        noise = *eps;
      } else if (rng) {
        for (std::size_t i = 0; i < noise.size(); ++i) noise[i] = rng->normal();
      } else {
        throw ConfigError("policy_act: sampling without an RNG stream");
      }
    }
    const Tensor& mu_val = g.value(head);
    const Tensor& ls_val = g.value(log_std);
    Tensor a_val(diff::Shape{spec.action_dim});
    for (std::size_t i = 0; i < a_val.size(); ++i)
      a_val[i] = mu_val[i] + std::exp(ls_val[i]) * noise[i];
    out.action_value = a_val;
    if (mode == ActMode::Reparam) {
      Var sd = diff::exp_v(g, log_std);
      out.action = diff::add(g, head, diff::mul(g, sd, g.constant(noise, "eps")));
    } else {
      out.action = g.constant(a_val, "action");
    }
    Var log_var = diff::mul_scalar(g, log_std, 2.0);
    out.log_prob = diff::neg(
        g, diff::gaussian_diag_nll(g, g.constant(a_val, "action"), head, log_var));
    out.entropy = diff::gaussian_entropy(g, log_var);
  } else {
    std::size_t idx = 0;
    const Tensor& logits = g.value(head);
    if (mode == ActMode::Mean) {
      for (std::size_t i = 1; i < logits.size(); ++i)
        if (logits[i] > logits[idx]) idx = i;
    } else {
      if (!rng) throw ConfigError("policy_act: sampling without an RNG stream");
      auto p = softmax_of(logits);
      double u = rng->uniform();
      double acc = 0.0;
      idx = p.size() - 1;
      for (std::size_t i = 0; i < p.size(); ++i) {
        acc += p[i];
        if (u < acc) {
          idx = i;
          break;
        }
      }
    }
    out.action_value = Tensor::scalar(static_cast<double>(idx));
    out.action = g.constant(out.action_value, "action");
    out.log_prob = diff::categorical_log_prob(g, head, idx);
    out.entropy = diff::categorical_entropy(g, head);
  }
  return out;
}

Var policy_log_prob(Graph& g, const BoundParams& bp, const PolicySpec& spec,
                    const Tensor& obs, const Tensor& action) {
  Var head = policy_head(g, bp, spec, g.constant(obs, "obs"));
  if (spec.kind == env::ActionKind::Continuous) {
    if (action.size() != spec.action_dim)
      throw ShapeError("policy_log_prob: action shape " +
                       diff::shape_str(action.shape()));
    Var log_std = diff::clamp_v(g, bp.at("policy.log_std"), -5.0, 2.0);
    Var log_var = diff::mul_scalar(g, log_std, 2.0);
    return diff::neg(
        g, diff::gaussian_diag_nll(g, g.constant(action, "action"), head, log_var));
  }
  const auto idx = static_cast<std::size_t>(action[0]);
  if (idx >= spec.action_dim)
    throw ConfigError("policy_log_prob: action index out of range");
  return diff::categorical_log_prob(g, head, idx);
}

PolicyEval policy_eval_recorded(Graph& g, const BoundParams& bp,
                                const PolicySpec& spec, const Tensor& obs,
                                const Tensor& action) {
  Var obs_v = g.constant(obs, "obs");
  Var head = policy_head(g, bp, spec, obs_v);
  PolicyEval out;
  out.value = value_head(g, bp, obs_v);
  out.action_value = action;
  out.action = g.constant(action, "action");
  if (spec.kind == env::ActionKind::Continuous) {
    Var log_std = diff::clamp_v(g, bp.at("policy.log_std"), -5.0, 2.0);
    Var log_var = diff::mul_scalar(g, log_std, 2.0);
    out.log_prob = diff::neg(
        g, diff::gaussian_diag_nll(g, g.constant(action, "action"), head, log_var));
    out.entropy = diff::gaussian_entropy(g, log_var);
  } else {
    const auto idx = static_cast<std::size_t>(action[0]);
    if (idx >= spec.action_dim)
      throw ConfigError("policy_eval_recorded: action index out of range");
    out.log_prob = diff::categorical_log_prob(g, head, idx);
    out.entropy = diff::categorical_entropy(g, head);
  }
  return out;
}

}  // namespace condyn::model
