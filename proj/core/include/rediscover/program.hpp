#pragma once

#include <optional>
#include <span>
#include <vector>

#include "rediscover/expr.hpp"

namespace rediscover {

// Postfix form of an Expression for repeated evaluation.  Constants live in
// numbered slots (pre-order), so callers can evaluate with substituted
// constant values without rebuilding the tree.
class Program {
 public:
  explicit Program(const Expression& e);

  const std::vector<double>& constants() const { return constants_; }
  int max_variable() const { return max_variable_; }

  std::optional<double> eval(std::span<const double> point) const {
    return eval(point, constants_);
  }
  std::optional<double> eval(std::span<const double> point, std::span<const double> constants) const;

  // Row-major matrix with `stride` values per row.  Invalid rows become NaN.
  void eval_rows(std::span<const double> rows, std::size_t stride, std::span<double> out) const;
  void eval_rows(std::span<const double> rows, std::size_t stride, std::span<double> out,
                 std::span<const double> constants) const;

 private:
  struct Instr {
    enum class Kind : unsigned char { constant, variable, op } kind;
    Operator op;
    int arg;  // constant slot or variable index
  };

  void emit(const Expression& e);

  std::vector<Instr> code_;
  std::vector<double> constants_;
  int max_variable_ = 0;
  int max_depth_ = 0;
};

}  // namespace rediscover
