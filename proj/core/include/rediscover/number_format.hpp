#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace rediscover {

// Shortest decimal digits that round-trip to `value`.  Scientific notation
// ("7.243e22", "3.3356e-9") when the decimal exponent has magnitude >= 5,
// plain decimal ("0.079577", "12345") otherwise.  -0 renders as "0".
std::string format_constant(double value);

// Parses a decimal/scientific literal.  Accepts an optional leading '-'.
std::optional<double> parse_constant(std::string_view text);

// Rounds to `digits` significant decimal digits.  Correctly rounded from the
// exact binary value with ties to even.
double round_significant(double value, int digits);

// floor(log10(|value|)) computed from the decimal expansion, so exact powers
// of ten are not off by one.  Zero maps to 0.
int decimal_exponent(double value);

}  // namespace rediscover
