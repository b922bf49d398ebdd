#pragma once

#include <string>
#include <vector>

#include "condyn/ssm.hpp"
#include "condyn/tensor.hpp"

namespace condyn::data {

using diff::Shape;
using diff::Tensor;

struct TrajData {
  std::vector<Tensor> observations;  // rendered frame stacks
  std::vector<Tensor> actions;       // actions[i] precedes observations[i]
  std::vector<double> rewards;
};

// Binary container: magic "CONDYN-TRAJ1", trajectory count (u32 LE), then per
// trajectory: step count T (u32 LE), T*obs_size observation doubles,
// T*action_size action doubles, T reward doubles, all little-endian f64.
void save_dataset(const std::string& path, const std::vector<TrajData>& trajs);

// The file does not store shapes; the caller supplies the expected ones.
std::vector<TrajData> load_dataset(const std::string& path,
                                   const Shape& obs_shape,
                                   std::size_t action_dim);

// Rolls the scripted expert for `episodes` episodes of exactly `steps` steps
// (termination-free environments only), rendering frame-stack observations.
// Deterministic in (env, episodes, steps, seed).
std::vector<TrajData> generate_expert_dataset(const std::string& env_name,
                                              std::size_t episodes,
                                              std::size_t steps,
                                              std::uint64_t seed);

std::vector<ssm::EvalTraj> to_eval(const std::vector<TrajData>& trajs);

// Canonical file locations under a data directory, shared by every run that
// uses the same directory.
std::string train_dataset_path(const std::string& data_dir,
                               const std::string& env_name);
std::string eval_dataset_path(const std::string& data_dir,
                              const std::string& env_name);

// Creates the train (200 episodes) and eval (20 episodes) files of 60-step
// expert episodes if they are not already present.
void ensure_default_datasets(const std::string& data_dir,
                             const std::string& env_name);

}  // namespace condyn::data
