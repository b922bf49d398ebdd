#include "condyn/rng.hpp"

#include <cmath>

#include "condyn/errors.hpp"

namespace condyn::diff {

namespace {

inline std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace

RngStream::RngStream(std::uint64_t key) : key_(key) { seed_state(); }

RngStream::RngStream(std::uint64_t root_seed, std::string_view name)
    : RngStream([&] {
        std::uint64_t x = root_seed ^ 0x6a09e667f3bcc908ull;
        std::uint64_t mix = splitmix64(x) ^ fnv1a(name);
        return splitmix64(mix);
      }()) {}

void RngStream::seed_state() {
  std::uint64_t x = key_;
  for (auto& w : s_) w = splitmix64(x);
}

RngStream RngStream::derive(std::string_view sub) const {
  std::uint64_t mix = key_ ^ fnv1a(sub);
  return RngStream(splitmix64(mix));
}

RngStream RngStream::derive(std::string_view sub, std::uint64_t index) const {
  std::uint64_t mix = key_ ^ fnv1a(sub) ^ (0x9e3779b97f4a7c15ull * (index + 1));
  return RngStream(splitmix64(mix));
}

std::uint64_t RngStream::next_u64() {
  // xoshiro256**
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double RngStream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

double RngStream::normal() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  // u1 in (0, 1] so the log is finite.
  double u1 = 1.0 - uniform();
  double u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double a = 2.0 * M_PI * u2;
  cached_ = r * std::sin(a);
  has_cached_ = true;
  return r * std::cos(a);
}

std::size_t RngStream::uniform_index(std::size_t n) {
  if (n == 0) throw ConfigError("uniform_index over an empty range");
  return static_cast<std::size_t>(next_u64() % n);
}

}  // namespace condyn::diff
