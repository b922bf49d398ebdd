#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "condyn/nn.hpp"
#include "condyn/params.hpp"

namespace condyn::ssm {

using diff::BoundParams;
using diff::Graph;
using diff::HiddenCell;
using diff::ParameterSet;
using diff::RngStream;
using diff::Tensor;
using diff::Var;

// Latent-variable sequence model over rendered frame stacks: convolutional
// observation encoder, prior/posterior latent MLPs, LSTM state transition,
// and a deconvolutional Gaussian decoder with one shared log-variance.
// Frame height/width must be divisible by 4 (two stride-2 stages each way).
struct SsmSpec {
  std::size_t frame_channels = 4;
  std::size_t frame_h = 16;
  std::size_t frame_w = 16;
  std::size_t conv_channels = 16;
  std::size_t enc_dim = 32;
  std::size_t latent_dim = 8;
  std::size_t state_dim = 32;
  std::size_t action_dim = 2;
  std::size_t mlp_hidden = 64;

  std::size_t map_h() const { return frame_h / 4; }
  std::size_t map_w() const { return frame_w / 4; }
  std::size_t dec_dense() const { return conv_channels * map_h() * map_w(); }
  std::size_t frame_size() const { return frame_channels * frame_h * frame_w; }
};

// Registers all "ssm.*" parameters. Throws ConfigError on invalid geometry.
void ssm_init(ParameterSet& ps, const SsmSpec& spec, const RngStream& base);

// obs [C,H,W] -> deterministic feature vector [enc_dim].
Var encode_obs(Graph& g, const BoundParams& bp, const SsmSpec& spec, Var obs);

struct LatentDist {
  Var mu;
  Var log_var;  // clamped to [-10, 5]
};

LatentDist prior_params(Graph& g, const BoundParams& bp, const SsmSpec& spec,
                        Var s_prev, Var a_prev);
LatentDist posterior_params(Graph& g, const BoundParams& bp, const SsmSpec& spec,
                            Var e_obs, Var s_prev, Var a_prev);

// Reparameterized draw mu + exp(0.5*log_var) * eps.
Var sample_latent(Graph& g, const LatentDist& d, const Tensor& eps);

// One LSTM step on (z, a_prev) from the previous hidden/cell pair.
HiddenCell transition_step(Graph& g, const BoundParams& bp, const SsmSpec& spec,
                           Var z, Var a_prev, const HiddenCell& prev);

HiddenCell initial_state(Graph& g, const SsmSpec& spec);

struct DecodeResult {
  Var mean;     // [C,H,W]
  Var log_var;  // [1], shared across pixels, clamped
};

DecodeResult decode_obs(Graph& g, const BoundParams& bp, const SsmSpec& spec,
                        Var s, Var z);

// 0.5 * sum_pixels [ (target-mean)^2 * e^{-lv} + lv + log 2pi ].
Var decode_nll(Graph& g, const DecodeResult& dec, const Tensor& target);

enum class LatentMode { Mean, Sample };

// A training slice: frames[0..T] (T+1 of them) with prev_actions[0..T-1],
// where prev_actions[i] is the action taken immediately before frames[i].
struct SegmentView {
  std::vector<Tensor> frames;
  std::vector<Tensor> prev_actions;
};

struct FilterResult {
  Var loss;                    // sum over steps of (recon NLL + KL)
  std::vector<Var> states;     // filtered states, one per step
  std::vector<Var> cells;      // matching LSTM cell states
  std::vector<Var> step_recon; // per-step reconstruction NLL
  std::vector<Var> step_kl;    // per-step KL(posterior || prior)
};

// Closed-loop filtering over a segment. Step i absorbs (frames[i],
// prev_actions[i]) through the posterior and reconstructs frames[i+1];
// the KL is taken against the prior at the same step. Sample mode draws
// reparameterized latents from rng. Throws NonFiniteError with the step
// index if any term stops being finite.
FilterResult sequence_elbo(Graph& g, const BoundParams& bp, const SsmSpec& spec,
                           const SegmentView& segment, LatentMode mode,
                           RngStream* rng);

struct GenResult {
  std::vector<Var> states;   // imagined states, one per action
  std::vector<Var> cells;
  std::vector<Var> latents;  // the prior latent driving each step
};

// Prior-driven unroll from `start`; step t consumes actions[t] only — no
// observation is read. Throws NonFiniteError with the step index on
// divergence.
GenResult open_loop_generate(Graph& g, const BoundParams& bp, const SsmSpec& spec,
                             const HiddenCell& start,
                             std::span<const Tensor> actions, LatentMode mode,
                             RngStream* rng);

struct EvalTraj {
  std::vector<Tensor> observations;
  std::vector<Tensor> actions;  // actions[i] precedes observations[i]
};

// Root seed of the fixed evaluation stream behind
// imagination_log_likelihood. Draws come from
// RngStream(kImaginationSeed, "imagination").derive("traj", i).derive("k", k),
// latent_dim normals per latent, so the metric is a pure function of the
// parameters and the data.
inline constexpr std::uint64_t kImaginationSeed = 0x51A7E5EEDULL;

// Average (over trajectories and steps 1..k) log-likelihood of the real
// observations under a prior-driven unroll that is posterior-initialized on
// each trajectory's first observation. Latent draws come from a fixed
// internal stream keyed by (trajectory index, k), so the value depends only
// on the parameters and the data. Trajectories need at least k+1
// observations; violators are reported by index.
double imagination_log_likelihood(const ParameterSet& ps, const SsmSpec& spec,
                                  std::span<const EvalTraj> trajs,
                                  std::size_t k);

// Reference score for the ELBO: Gaussian NLL per frame of the predictor that
// always outputs the dataset's per-pixel mean image, with the variance chosen
// optimally as a single scalar. Equals 0.5 * P * (1 + log var + log 2pi).
double mean_image_nll(std::span<const EvalTraj> trajs, const SsmSpec& spec);

// Recovers the network sizes of a saved sequence model from its parameter
// shapes. Frames are assumed square because the flat decoder width only pins
// down the product of the two spatial map sizes. Throws ConfigError when the
// required "ssm.*" tensors are missing or inconsistent.
SsmSpec infer_spec(const ParameterSet& ps);

}  // namespace condyn::ssm
