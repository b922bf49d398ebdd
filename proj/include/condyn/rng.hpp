#pragma once

#include <cstdint>
#include <string_view>

namespace condyn::diff {

// Deterministic named random stream (xoshiro256** seeded through splitmix64).
// Each (root seed, path) pair is an independent generator: deriving a child
// stream hashes the path, so draw order in one stream never perturbs another.
// Everything is implemented locally so outputs are pinned across platforms
// and standard library versions.
class RngStream {
 public:
  RngStream(std::uint64_t root_seed, std::string_view name);

  RngStream derive(std::string_view sub) const;
  RngStream derive(std::string_view sub, std::uint64_t index) const;

  std::uint64_t next_u64();
  // Uniform on [0, 1).
  double uniform();
  double uniform(double lo, double hi);
  // Standard normal via Box-Muller (second value cached).
  double normal();
  // Uniform index in [0, n).
  std::size_t uniform_index(std::size_t n);

 private:
  explicit RngStream(std::uint64_t key);
  void seed_state();

  std::uint64_t key_ = 0;
  std::uint64_t s_[4] = {0, 0, 0, 0};
  bool has_cached_ = false;
  double cached_ = 0.0;
};

}  // namespace condyn::diff
