#include "condyn/ssm.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include "condyn/errors.hpp"
#include "condyn/ops.hpp"

namespace condyn::ssm {

namespace {

constexpr double kLogVarLo = -10.0;
constexpr double kLogVarHi = 5.0;

// Root seed of the evaluation stream used by imagination_log_likelihood.
// Fixed on purpose: the metric must depend only on parameters and data so
// that models trained under different run seeds stay comparable.
constexpr std::uint64_t kEvalSeed = kImaginationSeed;

void validate(const SsmSpec& spec) {
  if (spec.frame_h % 4 != 0 || spec.frame_w % 4 != 0 || spec.frame_h < 4 ||
      spec.frame_w < 4) {
    throw ConfigError("frame height/width must be multiples of 4, got " +
                      std::to_string(spec.frame_h) + "x" +
                      std::to_string(spec.frame_w));
  }
  if (spec.frame_channels == 0 || spec.conv_channels == 0 ||
      spec.enc_dim == 0 || spec.latent_dim == 0 || spec.state_dim == 0 ||
      spec.action_dim == 0 || spec.mlp_hidden == 0) {
    throw ConfigError("all sequence-model dimensions must be positive");
  }
}

diff::LstmParams trans_params(const BoundParams& bp) {
  diff::LstmParams p;
  p.wi = bp.at("ssm.trans.wi");
  p.ui = bp.at("ssm.trans.ui");
  p.bi = bp.at("ssm.trans.bi");
  p.wf = bp.at("ssm.trans.wf");
  p.uf = bp.at("ssm.trans.uf");
  p.bf = bp.at("ssm.trans.bf");
  p.wg = bp.at("ssm.trans.wg");
  p.ug = bp.at("ssm.trans.ug");
  p.bg = bp.at("ssm.trans.bg");
  p.wo = bp.at("ssm.trans.wo");
  p.uo = bp.at("ssm.trans.uo");
  p.bo = bp.at("ssm.trans.bo");
  return p;
}

LatentDist latent_heads(Graph& g, const BoundParams& bp,
                        const std::string& prefix, Var input) {
  Var hid = diff::tanh_v(g, diff::linear_layer(g, bp, prefix + ".l1", input));
  LatentDist d;
  d.mu = diff::linear_layer(g, bp, prefix + ".mu", hid);
  d.log_var =
      diff::clamp_v(g, diff::linear_layer(g, bp, prefix + ".lv", hid),
                    kLogVarLo, kLogVarHi);
  return d;
}

Tensor draw_normal(RngStream& rng, std::size_t n) {
  Tensor t = Tensor::zeros({n});
  for (std::size_t i = 0; i < n; ++i) {
    t.data()[i] = rng.normal();
  }
  return t;
}

}  // namespace

void ssm_init(ParameterSet& ps, const SsmSpec& spec, const RngStream& base) {
  validate(spec);
  const std::size_t fc = spec.frame_channels;
  const std::size_t cc = spec.conv_channels;
  const std::size_t a = spec.action_dim;
  const std::size_t s = spec.state_dim;
  const std::size_t z = spec.latent_dim;

  diff::init_uniform(ps, "ssm.enc.c1.w", {cc, fc, 4, 4}, fc * 16, base);
  diff::init_uniform(ps, "ssm.enc.c1.b", {cc}, fc * 16, base);
  diff::init_uniform(ps, "ssm.enc.c2.w", {cc, cc, 4, 4}, cc * 16, base);
  diff::init_uniform(ps, "ssm.enc.c2.b", {cc}, cc * 16, base);
  diff::init_linear(ps, "ssm.enc.fc", spec.enc_dim, spec.dec_dense(), base);

  diff::init_linear(ps, "ssm.prior.l1", spec.mlp_hidden, s + a, base);
  diff::init_linear(ps, "ssm.prior.mu", z, spec.mlp_hidden, base);
  diff::init_linear(ps, "ssm.prior.lv", z, spec.mlp_hidden, base);

  diff::init_linear(ps, "ssm.post.l1", spec.mlp_hidden, spec.enc_dim + s + a,
                    base);
  diff::init_linear(ps, "ssm.post.mu", z, spec.mlp_hidden, base);
  diff::init_linear(ps, "ssm.post.lv", z, spec.mlp_hidden, base);

  const std::size_t in = z + a;
  auto gate = [&](const std::string& w, const std::string& u,
                  const std::string& b) {
    diff::init_uniform(ps, w, {s, in}, in, base);
    diff::init_uniform(ps, u, {s, s}, s, base);
    diff::init_uniform(ps, b, {s}, in, base);
  };
  gate("ssm.trans.wi", "ssm.trans.ui", "ssm.trans.bi");
  gate("ssm.trans.wf", "ssm.trans.uf", "ssm.trans.bf");
  gate("ssm.trans.wg", "ssm.trans.ug", "ssm.trans.bg");
  gate("ssm.trans.wo", "ssm.trans.uo", "ssm.trans.bo");

  diff::init_linear(ps, "ssm.dec.fc", spec.dec_dense(), s + z, base);
  diff::init_uniform(ps, "ssm.dec.d1.w", {cc, cc, 4, 4}, cc * 16, base);
  diff::init_uniform(ps, "ssm.dec.d1.b", {cc}, cc * 16, base);
  diff::init_uniform(ps, "ssm.dec.d2.w", {cc, fc, 4, 4}, cc * 16, base);
  diff::init_uniform(ps, "ssm.dec.d2.b", {fc}, cc * 16, base);
  ps.add("ssm.dec.log_var", Tensor::zeros({1}));
}

Var encode_obs(Graph& g, const BoundParams& bp, const SsmSpec& spec, Var obs) {
  const Tensor& v = g.value(obs);
  if (v.rank() != 3 || v.dim(0) != spec.frame_channels ||
      v.dim(1) != spec.frame_h || v.dim(2) != spec.frame_w) {
    throw ShapeError("observation must be [" +
                     std::to_string(spec.frame_channels) + "," +
                     std::to_string(spec.frame_h) + "," +
                     std::to_string(spec.frame_w) + "], got " +
                     diff::shape_str(v.shape()));
  }
  Var h1 = diff::tanh_v(g, diff::conv2d(g, obs, bp.at("ssm.enc.c1.w"),
                                        bp.at("ssm.enc.c1.b"), 2, 1));
  Var h2 = diff::tanh_v(g, diff::conv2d(g, h1, bp.at("ssm.enc.c2.w"),
                                        bp.at("ssm.enc.c2.b"), 2, 1));
  Var flat = diff::reshape(g, h2, {spec.dec_dense()});
  return diff::linear_layer(g, bp, "ssm.enc.fc", flat);
}

LatentDist prior_params(Graph& g, const BoundParams& bp, const SsmSpec& spec,
                        Var s_prev, Var a_prev) {
  (void)spec;
  Var input = diff::concat(g, {s_prev, a_prev});
  return latent_heads(g, bp, "ssm.prior", input);
}

LatentDist posterior_params(Graph& g, const BoundParams& bp, const SsmSpec& spec,
                            Var e_obs, Var s_prev, Var a_prev) {
  (void)spec;
  Var input = diff::concat(g, {e_obs, s_prev, a_prev});
  return latent_heads(g, bp, "ssm.post", input);
}

Var sample_latent(Graph& g, const LatentDist& d, const Tensor& eps) {
  Var sigma = diff::exp_v(g, diff::mul_scalar(g, d.log_var, 0.5));
  Var noise = g.constant(eps, "latent_eps");
  return diff::add(g, d.mu, diff::mul(g, sigma, noise));
}

HiddenCell transition_step(Graph& g, const BoundParams& bp, const SsmSpec& spec,
                           Var z, Var a_prev, const HiddenCell& prev) {
  (void)spec;
  Var x = diff::concat(g, {z, a_prev});
  return diff::lstm_cell(g, trans_params(bp), x, prev);
}

HiddenCell initial_state(Graph& g, const SsmSpec& spec) {
  HiddenCell hc;
  hc.h = g.constant(Tensor::zeros({spec.state_dim}), "ssm_h0");
  hc.c = g.constant(Tensor::zeros({spec.state_dim}), "ssm_c0");
  return hc;
}

DecodeResult decode_obs(Graph& g, const BoundParams& bp, const SsmSpec& spec,
                        Var s, Var z) {
  Var input = diff::concat(g, {s, z});
  Var hid = diff::tanh_v(g, diff::linear_layer(g, bp, "ssm.dec.fc", input));
  Var map = diff::reshape(
      g, hid, {spec.conv_channels, spec.map_h(), spec.map_w()});
  Var up1 = diff::tanh_v(
      g, diff::conv2d_transpose(g, map, bp.at("ssm.dec.d1.w"),
                                bp.at("ssm.dec.d1.b"), 2, 1));
  DecodeResult out;
  out.mean = diff::conv2d_transpose(g, up1, bp.at("ssm.dec.d2.w"),
                                    bp.at("ssm.dec.d2.b"), 2, 1);
  out.log_var =
      diff::clamp_v(g, bp.at("ssm.dec.log_var"), kLogVarLo, kLogVarHi);
  return out;
}

Var decode_nll(Graph& g, const DecodeResult& dec, const Tensor& target) {
  const Tensor& mv = g.value(dec.mean);
  if (mv.shape() != target.shape()) {
    throw ShapeError("decoder target shape " + diff::shape_str(target.shape()) +
                     " does not match mean shape " + diff::shape_str(mv.shape()));
  }
  const double n = static_cast<double>(target.size());
  Var t = g.constant(target, "decode_target");
  Var sq = diff::sum_v(g, diff::square_v(g, diff::sub(g, t, dec.mean)));
  Var prec = diff::exp_v(g, diff::neg(g, dec.log_var));
  Var quad = diff::mul(g, sq, prec);
  Var lv_term = diff::mul_scalar(g, dec.log_var, n);
  Var total = diff::add_scalar(g, diff::add(g, quad, lv_term),
                               n * std::log(2.0 * std::numbers::pi));
  return diff::mul_scalar(g, total, 0.5);
}

FilterResult sequence_elbo(Graph& g, const BoundParams& bp, const SsmSpec& spec,
                           const SegmentView& segment, LatentMode mode,
                           RngStream* rng) {
  const std::size_t steps = segment.prev_actions.size();
  if (steps == 0) {
    throw ConfigError("sequence ELBO needs at least one step");
  }
  if (segment.frames.size() != steps + 1) {
    throw ConfigError("segment must hold one more frame than actions: " +
                      std::to_string(segment.frames.size()) + " frames for " +
                      std::to_string(steps) + " actions");
  }
  if (mode == LatentMode::Sample && rng == nullptr) {
    throw ConfigError("sampled latents need a random stream");
  }

  FilterResult out;
  HiddenCell hc = initial_state(g, spec);
  std::vector<Var> losses;
  for (std::size_t i = 0; i < steps; ++i) {
    Var a = g.constant(segment.prev_actions[i], "prev_action");
    Var e = encode_obs(g, bp, spec, g.constant(segment.frames[i], "frame"));
    LatentDist prior = prior_params(g, bp, spec, hc.h, a);
    LatentDist post = posterior_params(g, bp, spec, e, hc.h, a);
    Var z = mode == LatentMode::Sample
                ? sample_latent(g, post, draw_normal(*rng, spec.latent_dim))
                : post.mu;
    hc = transition_step(g, bp, spec, z, a, hc);
    DecodeResult dec = decode_obs(g, bp, spec, hc.h, z);
    Var recon = decode_nll(g, dec, segment.frames[i + 1]);
    Var kl = diff::kl_diag_gaussian(g, post.mu, post.log_var, prior.mu,
                                    prior.log_var);
    if (!std::isfinite(g.value(recon).item()) ||
        !std::isfinite(g.value(kl).item())) {
      throw NonFiniteError("sequence ELBO became non-finite at step " +
                           std::to_string(i));
    }
    out.states.push_back(hc.h);
    out.cells.push_back(hc.c);
    out.step_recon.push_back(recon);
    out.step_kl.push_back(kl);
    losses.push_back(diff::add(g, recon, kl));
  }
  out.loss = diff::sum_vars(g, losses);
  return out;
}

GenResult open_loop_generate(Graph& g, const BoundParams& bp, const SsmSpec& spec,
                             const HiddenCell& start,
                             std::span<const Tensor> actions, LatentMode mode,
                             RngStream* rng) {
  if (mode == LatentMode::Sample && rng == nullptr) {
    throw ConfigError("sampled latents need a random stream");
  }
  GenResult out;
  HiddenCell hc = start;
  for (std::size_t t = 0; t < actions.size(); ++t) {
    Var a = g.constant(actions[t], "gen_action");
    LatentDist prior = prior_params(g, bp, spec, hc.h, a);
    Var z = mode == LatentMode::Sample
                ? sample_latent(g, prior, draw_normal(*rng, spec.latent_dim))
                : prior.mu;
    hc = transition_step(g, bp, spec, z, a, hc);
    if (!g.value(hc.h).all_finite()) {
      throw NonFiniteError("open-loop generation diverged at step " +
                           std::to_string(t));
    }
    out.states.push_back(hc.h);
    out.cells.push_back(hc.c);
    out.latents.push_back(z);
  }
  return out;
}

double imagination_log_likelihood(const ParameterSet& ps, const SsmSpec& spec,
                                  std::span<const EvalTraj> trajs,
                                  std::size_t k) {
  if (k == 0) {
    throw ConfigError("imagination unroll length must be >= 1");
  }
  if (trajs.empty()) {
    throw ConfigError("imagination log-likelihood needs at least one trajectory");
  }
  std::ostringstream bad;
  bool any_bad = false;
  for (std::size_t i = 0; i < trajs.size(); ++i) {
    if (trajs[i].observations.size() < k + 1 ||
        trajs[i].actions.size() < k) {
      bad << (any_bad ? ", " : "") << i;
      any_bad = true;
    }
  }
  if (any_bad) {
    throw ConfigError("trajectories too short for unroll length " +
                      std::to_string(k) + " (need k+1 observations): indices " +
                      bad.str());
  }

  const RngStream root(kEvalSeed, "imagination");
  double total = 0.0;
  for (std::size_t i = 0; i < trajs.size(); ++i) {
    const EvalTraj& tr = trajs[i];
    RngStream rng = root.derive("traj", i).derive("k", k);
    Graph g;
    // Evaluation only; bind parameters as constants so no tape builds up.
    BoundParams bp(g, ps, /*trainable=*/false);

    // Posterior-initialize on the first stored observation.
    HiddenCell hc = initial_state(g, spec);
    Var a0 = g.constant(tr.actions[0], "prev_action");
    Var e0 = encode_obs(g, bp, spec, g.constant(tr.observations[0], "frame"));
    LatentDist post = posterior_params(g, bp, spec, e0, hc.h, a0);
    Var z = sample_latent(g, post, draw_normal(rng, spec.latent_dim));
    hc = transition_step(g, bp, spec, z, a0, hc);

    double ll = 0.0;
    for (std::size_t m = 1; m <= k; ++m) {
      DecodeResult dec = decode_obs(g, bp, spec, hc.h, z);
      Var nll = decode_nll(g, dec, tr.observations[m]);
      ll -= g.value(nll).item();
      if (m < k) {
        Var a = g.constant(tr.actions[m], "prev_action");
        LatentDist prior = prior_params(g, bp, spec, hc.h, a);
        z = sample_latent(g, prior, draw_normal(rng, spec.latent_dim));
        hc = transition_step(g, bp, spec, z, a, hc);
      }
    }
    if (!std::isfinite(ll)) {
      throw NonFiniteError(
          "imagination log-likelihood became non-finite on trajectory " +
          std::to_string(i));
    }
    total += ll / static_cast<double>(k);
  }
  return total / static_cast<double>(trajs.size());
}

double mean_image_nll(std::span<const EvalTraj> trajs, const SsmSpec& spec) {
  const std::size_t p = spec.frame_size();
  std::vector<double> mean(p, 0.0);
  std::size_t count = 0;
  for (const EvalTraj& tr : trajs) {
    for (const Tensor& o : tr.observations) {
      if (o.size() != p) {
        throw ShapeError("observation size " + std::to_string(o.size()) +
                         " does not match frame size " + std::to_string(p));
      }
      for (std::size_t j = 0; j < p; ++j) {
        mean[j] += o.data()[j];
      }
      ++count;
    }
  }
  if (count == 0) {
    throw ConfigError("mean-image reference needs at least one observation");
  }
  for (double& m : mean) {
    m /= static_cast<double>(count);
  }
  double sq = 0.0;
  for (const EvalTraj& tr : trajs) {
    for (const Tensor& o : tr.observations) {
      for (std::size_t j = 0; j < p; ++j) {
        const double d = o.data()[j] - mean[j];
        sq += d * d;
      }
    }
  }
  double var = sq / (static_cast<double>(count) * static_cast<double>(p));
  if (var < 1e-12) {
    var = 1e-12;
  }
  return 0.5 * static_cast<double>(p) *
         (1.0 + std::log(var) + std::log(2.0 * std::numbers::pi));
}

SsmSpec infer_spec(const ParameterSet& ps) {
  const char* required[] = {"ssm.enc.c1.w", "ssm.enc.fc.w", "ssm.prior.mu.b",
                            "ssm.prior.l1.b", "ssm.trans.ui", "ssm.trans.wi"};
  for (const char* name : required) {
    if (!ps.has(name)) {
      throw ConfigError(std::string("snapshot does not contain a sequence "
                                    "model (missing '") +
                        name + "')");
    }
  }
  SsmSpec spec;
  const Tensor& c1 = ps.at("ssm.enc.c1.w");
  if (c1.rank() != 4) {
    throw ConfigError("snapshot tensor 'ssm.enc.c1.w' has unexpected rank");
  }
  spec.conv_channels = c1.dim(0);
  spec.frame_channels = c1.dim(1);
  spec.enc_dim = ps.at("ssm.enc.fc.w").dim(0);
  spec.latent_dim = ps.at("ssm.prior.mu.b").size();
  spec.mlp_hidden = ps.at("ssm.prior.l1.b").size();
  spec.state_dim = ps.at("ssm.trans.ui").dim(0);
  const Tensor& wi = ps.at("ssm.trans.wi");
  if (wi.dim(1) <= spec.latent_dim) {
    throw ConfigError(
        "snapshot transition weights imply a non-positive action dimension");
  }
  spec.action_dim = wi.dim(1) - spec.latent_dim;
  const std::size_t dec_dense = ps.at("ssm.enc.fc.w").dim(1);
  if (dec_dense % spec.conv_channels != 0) {
    throw ConfigError("snapshot encoder shapes are inconsistent");
  }
  const std::size_t map_area = dec_dense / spec.conv_channels;
  const auto side = static_cast<std::size_t>(
      std::llround(std::sqrt(static_cast<double>(map_area))));
  if (side * side != map_area) {
    throw ConfigError(
        "cannot infer the frame size from the snapshot: the convolution map "
        "is not square");
  }
  spec.frame_h = 4 * side;
  spec.frame_w = 4 * side;
  return spec;
}

}  // namespace condyn::ssm
