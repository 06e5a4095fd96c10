#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace rediscover {

// std::mt19937_64 is fully specified by the standard; the conversion to
// doubles below is done by hand so sequences match across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n).  n must be positive.
  std::uint64_t below(std::uint64_t n);
  bool chance(double p) { return uniform() < p; }
  // Box-Muller; one draw per call, the second value is discarded.
  double normal();

 private:
  std::mt19937_64 engine_;
};

// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ull);

// Seed for one dataset or engine run: hash of the campaign seed, problem id,
// role ("train", "test", "engine") and run index.
std::uint64_t derive_seed(std::uint64_t campaign_seed, std::string_view problem_id,
                          std::string_view role, int run_index);

}  // namespace rediscover
