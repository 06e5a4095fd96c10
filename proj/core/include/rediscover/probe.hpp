#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "rediscover/expr.hpp"
#include "rediscover/sampling.hpp"

namespace rediscover {

enum class ProbeVerdict { equivalent, constant_offset, constant_ratio, not_equivalent, inconclusive };

std::string_view name(ProbeVerdict v);

struct ProbeConfig {
  int points = 100;
  double tolerance = 1e-8;
  // Constants are treated as known only to this many significant digits and
  // may move inside that rounding interval before the comparison.  0 compares
  // the constants as written.
  int constant_digits = 5;
  // Keep b's constants as written, e.g. when b is a ground truth.
  bool exact_b = false;
  double min_constant = 1e-6;
  double max_constant = 1e6;
  std::uint64_t seed = 0x5eed;

  void validate() const;
};

struct ProbeResult {
  ProbeVerdict verdict = ProbeVerdict::inconclusive;
  // Offset a-b or ratio a/b for the constant_* verdicts.
  double k = 0.0;
  int valid_points = 0;
  // Largest |a-b| after the constant refit, and the magnitude it is judged
  // against (largest |a| or |b| over the valid points).
  double max_abs_diff = 0.0;
  double scale = 0.0;
  // Both sides with their refitted constants.
  Expression fitted_a;
  Expression fitted_b;
  std::string note;
};

// Compares a and b on points drawn from `domain`.  Variables of a or b
// without a sampling spec make the result inconclusive.
ProbeResult probe_equivalence(const Expression& a, const Expression& b,
                              std::span<const SamplingSpec> domain, const ProbeConfig& cfg = {});

// Half width of the interval of values that round to round_significant(c, digits).
// Zero for constants that are exact small integers.
double rounding_half_width(double c, int digits);

}  // namespace rediscover
