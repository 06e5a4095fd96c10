#include "rediscover/sampling.hpp"

#include <cmath>
#include <stdexcept>

namespace rediscover {

std::string_view name(Distribution d) {
  return d == Distribution::uniform ? "uniform" : "log-uniform";
}

std::string_view name(Sign s) {
  switch (s) {
    case Sign::positive: return "positive";
    case Sign::negative: return "negative";
    case Sign::either: return "either";
  }
  return "positive";
}

Distribution distribution_from_name(std::string_view s) {
  if (s == "uniform") return Distribution::uniform;
  if (s == "log-uniform") return Distribution::log_uniform;
  throw std::invalid_argument("unknown distribution '" + std::string(s) + "'");
}

Sign sign_from_name(std::string_view s) {
  if (s == "positive") return Sign::positive;
  if (s == "negative") return Sign::negative;
  if (s == "either") return Sign::either;
  throw std::invalid_argument("unknown sign '" + std::string(s) + "'");
}

void SamplingSpec::validate() const {
  const std::string who = "v" + std::to_string(variable);
  if (variable < 1) throw std::invalid_argument("variable index must be >= 1");
  if (!std::isfinite(low) || !std::isfinite(high)) {
    throw std::invalid_argument(who + ": bounds must be finite");
  }
  if (!(low < high)) throw std::invalid_argument(who + ": low must be < high");
  if (distribution == Distribution::log_uniform && !(low > 0.0)) {
    throw std::invalid_argument(who + ": log-uniform requires low > 0");
  }
}

double SamplingSpec::draw(Rng& rng) const {
  double x = distribution == Distribution::uniform
                 ? rng.uniform(low, high)
                 : std::exp(rng.uniform(std::log(low), std::log(high)));
  if (sign == Sign::negative || (sign == Sign::either && rng.chance(0.5))) x = -x;
  return x;
}

}  // namespace rediscover
