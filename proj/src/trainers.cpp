#include "condyn/trainers.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "condyn/adam.hpp"
#include "condyn/dataset.hpp"
#include "condyn/errors.hpp"
#include "condyn/metrics.hpp"
#include "condyn/ops.hpp"
#include "condyn/snapshot.hpp"
#include "condyn/ssm.hpp"

namespace condyn::train {

namespace {

using diff::Adam;
using diff::AdamConfig;
using diff::ParameterSet;
using diff::RngStream;

constexpr double kCollapseWarn = 1e-4;

void make_run_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw IoError("cannot create output directory '" + dir +
                  "': " + ec.message());
  }
}

std::vector<std::string> group_names(const ParameterSet& ps,
                                     std::initializer_list<const char*> prefixes) {
  std::vector<std::string> out;
  for (const char* p : prefixes) {
    for (std::string& n : ps.names_with_prefix(p)) {
      out.push_back(std::move(n));
    }
  }
  return out;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

void progress_line(const run::RunConfig& cfg, std::size_t update,
                   double wallclock) {
  std::fprintf(stderr, "[%s seed %llu] update %zu/%zu, %.1fs elapsed\n",
               cfg.pathway.c_str(),
               static_cast<unsigned long long>(cfg.seed), update, cfg.updates,
               wallclock);
}

}  // namespace

Var a2c_loss(Graph& g, std::span<const RolloutResult> episodes, double gamma,
             double c_v, double c_e) {
  if (episodes.empty()) {
    throw ConfigError("a2c_loss: empty batch");
  }
  std::vector<Var> per_episode;
  per_episode.reserve(episodes.size());
  for (const RolloutResult& ep : episodes) {
    const std::size_t t_len = ep.steps.size();
    if (t_len == 0 || ep.traj.rewards.size() != t_len) {
      throw ConfigError("a2c_loss: malformed episode");
    }
    std::vector<double> rtg(t_len);
    double acc = 0.0;
    for (std::size_t t = t_len; t-- > 0;) {
      acc = ep.traj.rewards[t] + gamma * acc;
      rtg[t] = acc;
    }
    std::vector<Var> pg_terms, v_terms, h_terms;
    pg_terms.reserve(t_len);
    v_terms.reserve(t_len);
    h_terms.reserve(t_len);
    for (std::size_t t = 0; t < t_len; ++t) {
      const model::PolicyEval& ev = ep.steps[t];
      const double adv = rtg[t] - g.value(ev.value).item();
      pg_terms.push_back(diff::mul_scalar(g, ev.log_prob, -adv));
      Var err = diff::add_scalar(g, ev.value, -rtg[t]);
      v_terms.push_back(diff::square_v(g, err));
      h_terms.push_back(ev.entropy);
    }
    Var loss = diff::sum_vars(g, pg_terms);
    loss = diff::add(g, loss,
                     diff::mul_scalar(g, diff::sum_vars(g, v_terms), c_v));
    loss = diff::add(g, loss,
                     diff::mul_scalar(g, diff::sum_vars(g, h_terms), -c_e));
    per_episode.push_back(loss);
  }
  return diff::mul_scalar(g, diff::sum_vars(g, per_episode),
                          1.0 / static_cast<double>(per_episode.size()));
}

Var imitation_loss(Graph& g, const BoundParams& bp,
                   const model::PolicySpec& spec,
                   std::span<const Tensor> states,
                   std::span<const Tensor> actions) {
  if (states.empty() || states.size() != actions.size()) {
    throw ConfigError("imitation_loss: state/action pair count mismatch");
  }
  std::vector<Var> terms;
  terms.reserve(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    terms.push_back(
        diff::neg(g, model::policy_log_prob(g, bp, spec, states[i], actions[i])));
  }
  return diff::mul_scalar(g, diff::sum_vars(g, terms),
                          1.0 / static_cast<double>(terms.size()));
}

double encoding_spread(std::span<const Tensor> encodings) {
  if (encodings.empty()) {
    throw ConfigError("encoding_spread: empty batch");
  }
  const std::size_t dim = encodings[0].size();
  const double n = static_cast<double>(encodings.size());
  double total = 0.0;
  for (std::size_t d = 0; d < dim; ++d) {
    double mean = 0.0;
    for (const Tensor& e : encodings) {
      mean += e[d];
    }
    mean /= n;
    double sq = 0.0;
    for (const Tensor& e : encodings) {
      const double diff = e[d] - mean;
      sq += diff * diff;
    }
    total += std::sqrt(sq / n);
  }
  return total / static_cast<double>(dim);
}

int train_obs_space(const run::RunConfig& cfg) {
  const env::EnvSpec espec = env::make_env(cfg.env);
  const std::size_t act_in = env::action_input_dim(espec);
  const model::PolicySpec pspec{espec.state_dim, espec.kind, espec.action_dim,
                                64};
  const model::DynModelSpec dspec{espec.state_dim, act_in, 64};
  const cc::SeqEncoderSpec enc_spec{espec.state_dim, 32,
                                    cfg.encoder_mode == "frozen"};

  ParameterSet ps;
  const RngStream init_rng(cfg.seed, "init");
  model::policy_init(ps, pspec, init_rng, /*with_value=*/true);
  model::dynmodel_init(ps, dspec, init_rng);
  cc::encoder_init(ps, enc_spec, init_rng);
  model::Normalizer norm(espec.state_dim, act_in);

  Adam opt_policy(AdamConfig{cfg.lr_policy, 0.9, 0.999, 1e-8},
                  group_names(ps, {"policy.", "value."}));
  Adam opt_model(AdamConfig{cfg.lr_model, 0.9, 0.999, 1e-8},
                 group_names(ps, {"dyn."}));
  Adam opt_enc(AdamConfig{cfg.lr_encoder, 0.9, 0.999, 1e-8},
               group_names(ps, {"enc."}));

  const std::string run_dir = cfg.run_dir();
  make_run_dir(run_dir);
  run::MetricsWriter writer(run_dir + "/metrics.csv");
  const std::string snap_path = run_dir + "/snapshot.condyn";
  auto save_state = [&]() {
    ParameterSet merged = ps;
    norm.to_params(merged);
    diff::save_snapshot(snap_path, merged);
  };

  const RngStream root(cfg.seed, "train");
  const auto t0 = std::chrono::steady_clock::now();
  const model::ActMode act_mode = espec.kind == env::ActionKind::Continuous
                                      ? model::ActMode::Reparam
                                      : model::ActMode::Sample;

  for (std::size_t u = 1; u <= cfg.updates; ++u) {
    try {
      Graph g;
      BoundParams bp(g, ps);

      std::vector<RolloutResult> episodes;
      episodes.reserve(cfg.batch);
      for (std::size_t b = 0; b < cfg.batch; ++b) {
        RngStream ep_rng = root.derive("update", u).derive("episode", b);
        RngStream reset_rng = ep_rng.derive("reset");
        RngStream policy_rng = ep_rng.derive("act");
        env::EnvState start = env::env_reset(espec, reset_rng);
        episodes.push_back(cc::closed_loop_rollout(
            g, bp, pspec, espec, start, cfg.horizon, act_mode, &policy_rng));
      }

      // Refresh normalization statistics before any loss sees this batch;
      // they stay frozen for the rest of the update.
      std::vector<Tensor> s_in, a_in, deltas;
      std::vector<model::Transition> transitions;
      for (const RolloutResult& ep : episodes) {
        Tensor prev = env::state_tensor(ep.traj.start);
        for (std::size_t t = 0; t < ep.traj.states.size(); ++t) {
          Tensor next = env::state_tensor(ep.traj.states[t]);
          Tensor a_enc = env::action_input(espec, ep.traj.actions[t]);
          Tensor delta(prev.shape());
          for (std::size_t i = 0; i < delta.size(); ++i) {
            delta[i] = next[i] - prev[i];
          }
          s_in.push_back(prev);
          a_in.push_back(a_enc);
          deltas.push_back(delta);
          transitions.push_back(model::Transition{prev, a_enc, next});
          prev = next;
        }
      }
      norm.state.update(s_in);
      norm.action.update(a_in);
      norm.delta.update(deltas);

      Var l_rl = a2c_loss(g, episodes, cfg.gamma, cfg.value_coef,
                          cfg.entropy_coef);
      Var l_model = dynamics_nll(g, bp, dspec, norm, transitions);

      // Consistency over each episode's first k steps: imagined mean-mode
      // unroll from the start state under the executed actions, against the
      // stop-gradient real state sequence.
      cc::TransitionFn fn = cc::model_transition_fn(
          bp, dspec, norm, model::SampleMode::Mean, nullptr);
      std::vector<Var> cc_terms;
      std::vector<Tensor> closed_encodings;
      for (const RolloutResult& ep : episodes) {
        const std::size_t kk = std::min(cfg.k, ep.traj.states.size());
        std::vector<Var> closed, acts;
        closed.reserve(kk);
        acts.reserve(kk);
        for (std::size_t t = 0; t < kk; ++t) {
          closed.push_back(
              g.constant(env::state_tensor(ep.traj.states[t]), "real_state"));
          if (espec.kind == env::ActionKind::Continuous) {
            acts.push_back(diff::clamp_v(g, ep.steps[t].action, -1.0, 1.0));
          } else {
            acts.push_back(g.constant(
                env::action_input(espec, ep.traj.actions[t]), "action_onehot"));
          }
        }
        Var s0 = g.constant(env::state_tensor(ep.traj.start), "start_state");
        std::vector<Var> open = cc::open_loop_rollout(g, fn, s0, acts);
        Var e_closed = cc::encode_sequence(g, bp, enc_spec, closed);
        Var e_open = cc::encode_sequence(g, bp, enc_spec, open);
        cc_terms.push_back(diff::l2_diff_norm(g, e_closed, e_open));
        closed_encodings.push_back(g.value(e_closed));
      }
      Var l_cc = diff::mul_scalar(g, diff::sum_vars(g, cc_terms),
                                  1.0 / static_cast<double>(cc_terms.size()));

      Var total = diff::add(g, l_rl, l_model);
      if (cfg.alpha > 0.0) {
        total = diff::add(g, total, diff::mul_scalar(g, l_cc, cfg.alpha));
      }

      diff::GradientRecord grads = diff::backward_gradients(g, total, bp, ps);
      opt_policy.step(ps, grads);
      opt_model.step(ps, grads);
      if (cfg.encoder_mode != "frozen") {
        opt_enc.step(ps, grads);
      }

      double sum_ret = 0.0, sum_disc = 0.0;
      for (const RolloutResult& ep : episodes) {
        double r = 0.0;
        for (double x : ep.traj.rewards) {
          r += x;
        }
        sum_ret += r;
        sum_disc += env::discounted_return(ep.traj.rewards, cfg.gamma);
      }
      const double batch_d = static_cast<double>(episodes.size());

      run::MetricsRow row;
      row.update = u;
      row.field("avg_return") = sum_ret / batch_d;
      row.field("avg_discounted_return") = sum_disc / batch_d;
      row.field("rl_loss") = g.value(l_rl).item();
      row.field("model_nll") = g.value(l_model).item();
      row.field("consistency_loss") = g.value(l_cc).item();
      const double spread = encoding_spread(closed_encodings);
      row.field("collapse_monitor") = spread;
      writer.write(row);
      if (spread < kCollapseWarn) {
        std::fprintf(stderr,
                     "warning: sequence encoder may have collapsed at update "
                     "%zu (spread %.3g)\n",
                     u, spread);
      }
      if (u % cfg.eval_every == 0 || u == cfg.updates) {
        progress_line(cfg, u, seconds_since(t0));
      }
    } catch (const NonFiniteError& e) {
      std::fprintf(stderr,
                   "training diverged at update %zu: %s\n"
                   "keeping the last completed update's parameters\n",
                   u, e.what());
      save_state();
      return 1;
    }
  }
  save_state();
  return 0;
}

int train_state_space(const run::RunConfig& cfg) {
  const env::EnvSpec espec = env::make_env(cfg.env);
  const ssm::SsmSpec spec{.action_dim = espec.action_dim};
  const std::size_t t_len = cfg.horizon;

  const diff::Shape obs_shape{spec.frame_channels, spec.frame_h, spec.frame_w};
  const std::vector<data::TrajData> train_set = data::load_dataset(
      data::train_dataset_path(cfg.data_dir, cfg.env), obs_shape,
      espec.action_dim);
  const std::vector<data::TrajData> eval_set = data::load_dataset(
      data::eval_dataset_path(cfg.data_dir, cfg.env), obs_shape,
      espec.action_dim);
  const std::vector<ssm::EvalTraj> eval_trajs = data::to_eval(eval_set);
  if (train_set.empty()) {
    throw ConfigError("training dataset is empty");
  }
  for (std::size_t i = 0; i < train_set.size(); ++i) {
    if (train_set[i].observations.size() < t_len + 1) {
      throw ConfigError("training trajectory " + std::to_string(i) +
                        " is shorter than the segment length plus one");
    }
  }

  const model::PolicySpec pspec{spec.state_dim, env::ActionKind::Continuous,
                                espec.action_dim, 64};
  const cc::SeqEncoderSpec enc_spec{spec.state_dim, 32,
                                    cfg.encoder_mode == "frozen"};

  ParameterSet ps;
  const RngStream init_rng(cfg.seed, "init");
  ssm::ssm_init(ps, spec, init_rng);
  model::policy_init(ps, pspec, init_rng, /*with_value=*/false);
  cc::encoder_init(ps, enc_spec, init_rng);

  Adam opt_policy(AdamConfig{cfg.lr_policy, 0.9, 0.999, 1e-8},
                  group_names(ps, {"policy."}));
  Adam opt_model(AdamConfig{cfg.lr_model, 0.9, 0.999, 1e-8},
                 group_names(ps, {"ssm."}));
  Adam opt_enc(AdamConfig{cfg.lr_encoder, 0.9, 0.999, 1e-8},
               group_names(ps, {"enc."}));

  const std::string run_dir = cfg.run_dir();
  make_run_dir(run_dir);
  run::MetricsWriter writer(run_dir + "/metrics.csv");
  const std::string snap_path = run_dir + "/snapshot.condyn";

  const RngStream root(cfg.seed, "train");
  const auto t0 = std::chrono::steady_clock::now();

  for (std::size_t u = 1; u <= cfg.updates; ++u) {
    try {
      Graph g;
      BoundParams bp(g, ps);
      RngStream su = root.derive("update", u);
      RngStream sample_rng = su.derive("sample");

      std::vector<Var> elbo_terms, cc_terms, imit_terms;
      std::vector<Tensor> closed_encodings;
      for (std::size_t b = 0; b < cfg.batch; ++b) {
        const std::size_t ti = sample_rng.uniform_index(train_set.size());
        const data::TrajData& tr = train_set[ti];
        const std::size_t j_max = tr.observations.size() - 1 - t_len;
        const std::size_t j = sample_rng.uniform_index(j_max + 1);

        ssm::SegmentView seg;
        for (std::size_t t = 0; t <= t_len; ++t) {
          seg.frames.push_back(tr.observations[j + t]);
        }
        for (std::size_t t = 0; t < t_len; ++t) {
          seg.prev_actions.push_back(tr.actions[j + t]);
        }

        RngStream lat_rng = su.derive("latent", b);
        ssm::FilterResult fr = ssm::sequence_elbo(
            g, bp, spec, seg, ssm::LatentMode::Sample, &lat_rng);
        elbo_terms.push_back(fr.loss);

        // Consistency branch: detach the filtered sequence, then re-imagine
        // it from the first filtered state with prior-driven latents.
        std::vector<Var> closed;
        closed.reserve(t_len);
        for (const Var& s : fr.states) {
          closed.push_back(g.constant(g.value(s), "filtered_state"));
        }
        diff::HiddenCell start{closed[0],
                               g.constant(g.value(fr.cells[0]), "filtered_cell")};
        std::vector<Tensor> open_actions(seg.prev_actions.begin() + 1,
                                         seg.prev_actions.end());
        RngStream open_rng = su.derive("open", b);
        ssm::GenResult gen = ssm::open_loop_generate(
            g, bp, spec, start, open_actions, ssm::LatentMode::Sample,
            &open_rng);
        std::vector<Var> open;
        open.reserve(t_len);
        open.push_back(closed[0]);
        for (const Var& s : gen.states) {
          open.push_back(s);
        }
        Var e_closed = cc::encode_sequence(g, bp, enc_spec, closed);
        Var e_open = cc::encode_sequence(g, bp, enc_spec, open);
        cc_terms.push_back(diff::l2_diff_norm(g, e_closed, e_open));
        closed_encodings.push_back(g.value(e_closed));

        // Behavior cloning on the filtered states (gradient-isolated from
        // the model): the expert action at the matching position is the one
        // taken right after each filtered observation.
        std::vector<Tensor> imit_states, imit_actions;
        imit_states.reserve(t_len);
        imit_actions.reserve(t_len);
        for (std::size_t t = 0; t < t_len; ++t) {
          imit_states.push_back(g.value(fr.states[t]));
          imit_actions.push_back(tr.actions[j + t + 1]);
        }
        imit_terms.push_back(
            imitation_loss(g, bp, pspec, imit_states, imit_actions));
      }
      const double batch_d = static_cast<double>(cfg.batch);
      Var elbo_mean = diff::mul_scalar(g, diff::sum_vars(g, elbo_terms),
                                       1.0 / batch_d);
      Var cc_mean =
          diff::mul_scalar(g, diff::sum_vars(g, cc_terms), 1.0 / batch_d);
      Var imit_mean =
          diff::mul_scalar(g, diff::sum_vars(g, imit_terms), 1.0 / batch_d);

      Var total = diff::add(g, imit_mean, elbo_mean);
      if (cfg.alpha > 0.0) {
        total = diff::add(g, total, diff::mul_scalar(g, cc_mean, cfg.alpha));
      }

      diff::GradientRecord grads = diff::backward_gradients(g, total, bp, ps);
      opt_policy.step(ps, grads);
      opt_model.step(ps, grads);
      if (cfg.encoder_mode != "frozen") {
        opt_enc.step(ps, grads);
      }

      run::MetricsRow row;
      row.update = u;
      row.field("consistency_loss") = g.value(cc_mean).item();
      row.field("elbo") =
          g.value(elbo_mean).item() / static_cast<double>(t_len);
      row.field("imitation_loss") = g.value(imit_mean).item();
      const double spread = encoding_spread(closed_encodings);
      row.field("collapse_monitor") = spread;
      if (u % cfg.eval_every == 0 || u == cfg.updates) {
        row.field("imagination_ll") =
            ssm::imagination_log_likelihood(ps, spec, eval_trajs, cfg.k);
        progress_line(cfg, u, seconds_since(t0));
      }
      writer.write(row);
      if (spread < kCollapseWarn) {
        std::fprintf(stderr,
                     "warning: sequence encoder may have collapsed at update "
                     "%zu (spread %.3g)\n",
                     u, spread);
      }
    } catch (const NonFiniteError& e) {
      std::fprintf(stderr,
                   "training diverged at update %zu: %s\n"
                   "keeping the last completed update's parameters\n",
                   u, e.what());
      diff::save_snapshot(snap_path, ps);
      return 1;
    }
  }
  diff::save_snapshot(snap_path, ps);
  return 0;
}

}  // namespace condyn::train
