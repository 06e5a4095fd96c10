#include "rediscover/number_format.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <system_error>

namespace rediscover {
namespace {

struct Decimal {
  bool negative = false;
  std::string digits;  // no leading/trailing zeros, at least one digit
  int exponent = 0;    // value = d.ddd * 10^exponent
};

// Splits the output of to_chars(scientific) into sign, digits and exponent.
Decimal decompose(std::string_view sci) {
  Decimal d;
  std::size_t i = 0;
  if (sci[i] == '-') {
    d.negative = true;
    ++i;
  }
  const auto e_pos = sci.find('e', i);
  for (std::size_t k = i; k < e_pos; ++k) {
    if (sci[k] != '.') d.digits.push_back(sci[k]);
  }
  int exp = 0;
  auto exp_text = sci.substr(e_pos + 1);
  if (!exp_text.empty() && exp_text.front() == '+') exp_text.remove_prefix(1);
  std::from_chars(exp_text.data(), exp_text.data() + exp_text.size(), exp);
  d.exponent = exp;
  while (d.digits.size() > 1 && d.digits.back() == '0') d.digits.pop_back();
  return d;
}

Decimal shortest(double value) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value,
                                 std::chars_format::scientific);
  if (ec != std::errc{}) throw std::runtime_error("to_chars failed");
  return decompose(std::string_view(buf.data(), static_cast<std::size_t>(end - buf.data())));
}

}  // namespace

std::string format_constant(double value) {
  if (!std::isfinite(value)) throw std::invalid_argument("format_constant: non-finite value");
  if (value == 0.0) return "0";
  const Decimal d = shortest(value);
  std::string out;
  if (d.negative) out.push_back('-');
  if (d.exponent >= 5 || d.exponent <= -5) {
    out.push_back(d.digits[0]);
    if (d.digits.size() > 1) {
      out.push_back('.');
      out.append(d.digits, 1, std::string::npos);
    }
    out.push_back('e');
    out.append(std::to_string(d.exponent));
    return out;
  }
  if (d.exponent < 0) {
    out.append("0.");
    out.append(static_cast<std::size_t>(-d.exponent - 1), '0');
    out.append(d.digits);
    return out;
  }
  const auto int_digits = static_cast<std::size_t>(d.exponent) + 1;
  if (d.digits.size() <= int_digits) {
    out.append(d.digits);
    out.append(int_digits - d.digits.size(), '0');
  } else {
    out.append(d.digits, 0, int_digits);
    out.push_back('.');
    out.append(d.digits, int_digits, std::string::npos);
  }
  return out;
}

std::optional<double> parse_constant(std::string_view text) {
  if (text.empty()) return std::nullopt;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
  if (!std::isfinite(value)) return std::nullopt;
  return value;
}

double round_significant(double value, int digits) {
  if (digits < 1) throw std::invalid_argument("round_significant: digits must be >= 1");
  if (value == 0.0 || !std::isfinite(value)) return value;
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value,
                                 std::chars_format::scientific, digits - 1);
  if (ec != std::errc{}) throw std::runtime_error("to_chars failed");
  double rounded = 0.0;
  std::from_chars(buf.data(), end, rounded);
  return rounded;
}

int decimal_exponent(double value) {
  if (value == 0.0 || !std::isfinite(value)) return 0;
  return shortest(value).exponent;
}

}  // namespace rediscover
