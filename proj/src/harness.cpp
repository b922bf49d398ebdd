#include "condyn/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "condyn/config.hpp"
#include "condyn/dataset.hpp"
#include "condyn/errors.hpp"
#include "condyn/report.hpp"
#include "condyn/snapshot.hpp"
#include "condyn/ssm.hpp"
#include "condyn/trainers.hpp"

namespace condyn::cli {

namespace {

// Maps the shared error taxonomy onto process exit codes.
int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const NonFiniteError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitDiverged;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitBadConfig;
  } catch (const IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitBadConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitBadConfig;
  }
}

int dispatch_train(const run::RunConfig& cfg) {
  if (cfg.pathway == "ssm") {
    data::ensure_default_datasets(cfg.data_dir, cfg.env);
    return train::train_state_space(cfg);
  }
  return train::train_obs_space(cfg);
}

}  // namespace

int run_train(const std::string& config_path,
              std::optional<std::uint64_t> seed_override) {
  return guarded([&]() {
    run::RunConfig cfg = run::parse_config_file(config_path);
    if (seed_override.has_value()) cfg.seed = *seed_override;
    return dispatch_train(cfg);
  });
}

int run_ablate_k(const std::string& config_path,
                 const std::vector<std::size_t>& ks,
                 const std::vector<std::uint64_t>& seeds) {
  return guarded([&]() {
    if (ks.empty()) throw ConfigError("ablate-k needs at least one k value");
    if (seeds.empty()) {
      throw ConfigError("ablate-k needs at least one seed");
    }
    if (std::set<std::size_t>(ks.begin(), ks.end()).size() != ks.size()) {
      throw ConfigError("ablate-k k values must be distinct");
    }
    if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() !=
        seeds.size()) {
      throw ConfigError("ablate-k seeds must be distinct");
    }
    for (std::size_t k : ks) {
      if (k == 0) throw ConfigError("ablate-k k values must be at least 1");
    }
    const run::RunConfig base = run::parse_config_file(config_path);
    for (std::size_t k : ks) {
      for (std::uint64_t seed : seeds) {
        run::RunConfig cfg = base;
        cfg.k = k;
        cfg.seed = seed;
        cfg.out_dir = base.out_dir + "/k" + std::to_string(k);
        std::fprintf(stderr, "[ablate-k] k=%zu seed=%llu -> %s\n", k,
                     static_cast<unsigned long long>(seed),
                     cfg.run_dir().c_str());
        int rc = dispatch_train(cfg);
        if (rc != kExitOk) return rc;
      }
    }
    return kExitOk;
  });
}

int run_robustness(const std::string& snapshot_path, std::size_t horizon,
                   const std::string& data_path) {
  return guarded([&]() {
    if (horizon == 0) {
      throw ConfigError("robustness horizon must be at least 1");
    }
    diff::ParameterSet ps = diff::load_snapshot(snapshot_path);
    const ssm::SsmSpec spec = ssm::infer_spec(ps);
    const diff::Shape obs_shape = {spec.frame_channels, spec.frame_h,
                                   spec.frame_w};
    std::vector<data::TrajData> trajs =
        data::load_dataset(data_path, obs_shape, spec.action_dim);
    std::vector<ssm::EvalTraj> eval = data::to_eval(trajs);
    const double ll = ssm::imagination_log_likelihood(ps, spec, eval, horizon);
    std::printf("%.17g\n", ll);
    return kExitOk;
  });
}

int run_gen_data(const std::string& env_id, std::size_t episodes,
                 std::size_t steps, std::uint64_t seed,
                 const std::string& out_path) {
  return guarded([&]() {
    if (episodes == 0) {
      throw ConfigError("gen-data needs at least one episode");
    }
    if (steps == 0) {
      throw ConfigError("gen-data needs at least one step per episode");
    }
    std::vector<data::TrajData> trajs =
        data::generate_expert_dataset(env_id, episodes, steps, seed);
    std::filesystem::path out_fs(out_path);
    if (out_fs.has_parent_path()) {
      std::error_code ec;
      std::filesystem::create_directories(out_fs.parent_path(), ec);
    }
    data::save_dataset(out_path, trajs);
    std::fprintf(stderr, "wrote %zu trajectories of %zu steps to %s\n",
                 trajs.size(), steps, out_path.c_str());
    return kExitOk;
  });
}

int run_report(const std::string& runs_dir, const std::string& out_path,
               std::size_t window) {
  return guarded([&]() {
    run::emit_report(runs_dir, out_path, window);
    std::fprintf(stderr, "wrote report to %s\n", out_path.c_str());
    return kExitOk;
  });
}

}  // namespace condyn::cli
