#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace condyn::cli {

// Exit codes shared by every subcommand: 0 success, 1 numerical divergence
// during training, 2 configuration or I/O error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitDiverged = 1;
inline constexpr int kExitBadConfig = 2;

int run_train(const std::string& config_path,
              std::optional<std::uint64_t> seed_override);

int run_ablate_k(const std::string& config_path,
                 const std::vector<std::size_t>& ks,
                 const std::vector<std::uint64_t>& seeds);

int run_robustness(const std::string& snapshot_path, std::size_t horizon,
                   const std::string& data_path);

int run_gen_data(const std::string& env_id, std::size_t episodes,
                 std::size_t steps, std::uint64_t seed,
                 const std::string& out_path);

int run_report(const std::string& runs_dir, const std::string& out_path,
               std::size_t window);

}  // namespace condyn::cli
