#include "condyn/dataset.hpp"

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "condyn/envs.hpp"
#include "condyn/errors.hpp"

namespace condyn::data {

namespace {

constexpr char kMagic[] = "CONDYN-TRAJ1";
constexpr std::size_t kMagicLen = 12;

void write_u32(std::ofstream& f, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) {
    b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  }
  f.write(reinterpret_cast<const char*>(b), 4);
}

void write_f64(std::ofstream& f, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) {
    b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
  }
  f.write(reinterpret_cast<const char*>(b), 8);
}

bool read_u32(std::ifstream& f, std::uint32_t& v) {
  unsigned char b[4];
  if (!f.read(reinterpret_cast<char*>(b), 4)) {
    return false;
  }
  v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  }
  return true;
}

bool read_f64(std::ifstream& f, double& v) {
  unsigned char b[8];
  if (!f.read(reinterpret_cast<char*>(b), 8)) {
    return false;
  }
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) {
    bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  }
  std::memcpy(&v, &bits, 8);
  return true;
}

}  // namespace

void save_dataset(const std::string& path, const std::vector<TrajData>& trajs) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) {
    throw IoError("cannot open '" + path + "' for writing");
  }
  f.write(kMagic, kMagicLen);
  write_u32(f, static_cast<std::uint32_t>(trajs.size()));
  for (const TrajData& tr : trajs) {
    const std::size_t t = tr.observations.size();
    if (tr.actions.size() != t || tr.rewards.size() != t) {
      throw ConfigError("trajectory arrays must share one length");
    }
    write_u32(f, static_cast<std::uint32_t>(t));
    for (const Tensor& o : tr.observations) {
      for (std::size_t i = 0; i < o.size(); ++i) {
        write_f64(f, o[i]);
      }
    }
    for (const Tensor& a : tr.actions) {
      for (std::size_t i = 0; i < a.size(); ++i) {
        write_f64(f, a[i]);
      }
    }
    for (double r : tr.rewards) {
      write_f64(f, r);
    }
  }
  if (!f) {
    throw IoError("write failed for '" + path + "'");
  }
}

std::vector<TrajData> load_dataset(const std::string& path,
                                   const Shape& obs_shape,
                                   std::size_t action_dim) {
  std::ifstream f(path, std::ios::binary);
  if (!f) {
    throw IoError("cannot open dataset '" + path + "'");
  }
  char magic[kMagicLen];
  if (!f.read(magic, kMagicLen) || std::memcmp(magic, kMagic, kMagicLen) != 0) {
    throw IoError("'" + path + "' is not a trajectory dataset");
  }
  std::uint32_t count = 0;
  if (!read_u32(f, count)) {
    throw IoError("truncated dataset '" + path + "'");
  }
  const std::size_t obs_size = diff::shape_size(obs_shape);
  std::vector<TrajData> out;
  out.reserve(count);
  for (std::uint32_t c = 0; c < count; ++c) {
    std::uint32_t t = 0;
    if (!read_u32(f, t) || t == 0) {
      throw IoError("truncated dataset '" + path + "'");
    }
    TrajData tr;
    tr.observations.reserve(t);
    tr.actions.reserve(t);
    tr.rewards.reserve(t);
    for (std::uint32_t i = 0; i < t; ++i) {
      Tensor o = Tensor::zeros(obs_shape);
      for (std::size_t j = 0; j < obs_size; ++j) {
        if (!read_f64(f, o.data()[j])) {
          throw IoError("truncated dataset '" + path + "'");
        }
      }
      tr.observations.push_back(std::move(o));
    }
    for (std::uint32_t i = 0; i < t; ++i) {
      Tensor a = Tensor::zeros({action_dim});
      for (std::size_t j = 0; j < action_dim; ++j) {
        if (!read_f64(f, a.data()[j])) {
          throw IoError("truncated dataset '" + path + "'");
        }
      }
      tr.actions.push_back(std::move(a));
    }
    for (std::uint32_t i = 0; i < t; ++i) {
      double r = 0.0;
      if (!read_f64(f, r)) {
        throw IoError("truncated dataset '" + path + "'");
      }
      tr.rewards.push_back(r);
    }
    out.push_back(std::move(tr));
  }
  char extra;
  if (f.read(&extra, 1)) {
    throw IoError("trailing bytes in dataset '" + path + "'");
  }
  return out;
}

std::vector<TrajData> generate_expert_dataset(const std::string& env_name,
                                              std::size_t episodes,
                                              std::size_t steps,
                                              std::uint64_t seed) {
  if (episodes == 0 || steps == 0) {
    throw ConfigError("dataset generation needs episodes >= 1 and steps >= 1");
  }
  const env::EnvSpec spec = env::make_env(env_name);
  const diff::RngStream root(seed, "gendata");
  std::vector<TrajData> out;
  out.reserve(episodes);
  for (std::size_t e = 0; e < episodes; ++e) {
    diff::RngStream rng = root.derive("episode", e);
    env::EnvState state = env::env_reset(spec, rng);
    std::vector<env::EnvState> history;
    history.push_back(state);
    TrajData tr;
    for (std::size_t t = 0; t < steps; ++t) {
      Tensor a = env::expert_action(spec, state);
      env::StepResult sr = env::env_step(spec, state, a);
      history.push_back(sr.state);
      tr.actions.push_back(a);
      tr.observations.push_back(env::render_observation(spec, history));
      tr.rewards.push_back(sr.reward);
      state = sr.state;
      if (sr.done) {
        throw ConfigError("environment '" + env_name +
                          "' terminated during expert data generation; "
                          "fixed-length episodes are required");
      }
    }
    out.push_back(std::move(tr));
  }
  return out;
}

std::vector<ssm::EvalTraj> to_eval(const std::vector<TrajData>& trajs) {
  std::vector<ssm::EvalTraj> out;
  out.reserve(trajs.size());
  for (const TrajData& tr : trajs) {
    ssm::EvalTraj e;
    e.observations = tr.observations;
    e.actions = tr.actions;
    out.push_back(std::move(e));
  }
  return out;
}

std::string train_dataset_path(const std::string& data_dir,
                               const std::string& env_name) {
  return data_dir + "/" + env_name + "_train.traj";
}

std::string eval_dataset_path(const std::string& data_dir,
                              const std::string& env_name) {
  return data_dir + "/" + env_name + "_eval.traj";
}

void ensure_default_datasets(const std::string& data_dir,
                             const std::string& env_name) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(data_dir, ec);
  if (ec) {
    throw IoError("cannot create data directory '" + data_dir +
                  "': " + ec.message());
  }
  const std::string train_path = train_dataset_path(data_dir, env_name);
  const std::string eval_path = eval_dataset_path(data_dir, env_name);
  if (!fs::exists(train_path)) {
    save_dataset(train_path,
                 generate_expert_dataset(env_name, 200, 60, 1000));
  }
  if (!fs::exists(eval_path)) {
    save_dataset(eval_path, generate_expert_dataset(env_name, 20, 60, 2000));
  }
}

}  // namespace condyn::data
