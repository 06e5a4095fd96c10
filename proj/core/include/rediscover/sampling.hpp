#pragma once

#include <string>
#include <string_view>

#include "rediscover/rng.hpp"

namespace rediscover {

enum class Distribution { uniform, log_uniform };
enum class Sign { positive, negative, either };

std::string_view name(Distribution d);
std::string_view name(Sign s);
Distribution distribution_from_name(std::string_view s);
Sign sign_from_name(std::string_view s);

// How one input variable is drawn: a magnitude from [low, high] under the
// given distribution, then negated (negative) or negated with probability
// 1/2 (either).
struct SamplingSpec {
  int variable = 1;
  Distribution distribution = Distribution::uniform;
  double low = 0.0;
  double high = 1.0;
  Sign sign = Sign::positive;

  void validate() const;
  double draw(Rng& rng) const;
};

}  // namespace rediscover
