#include "rediscover/rng.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace rediscover {

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::uint64_t Rng::below(std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

double Rng::normal() {
  double u1;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t campaign_seed, std::string_view problem_id,
                          std::string_view role, int run_index) {
  std::string key = std::to_string(campaign_seed);
  key += '/';
  key += problem_id;
  key += '/';
  key += role;
  key += '/';
  key += std::to_string(run_index);
  return fnv1a(key);
}

}  // namespace rediscover
