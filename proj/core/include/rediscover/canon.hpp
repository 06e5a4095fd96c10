#pragma once

#include <cstdint>
#include <string>

#include "rediscover/expr.hpp"

namespace rediscover {

struct CanonConfig {
  // Significant decimal digits kept by round_constants.
  int significant_digits = 5;
  // Evaluate operator applications whose operands are all constants.
  // Coefficients of sums and products are merged either way.
  bool fold_constants = true;
  // Order the operands of + and * chains (constants, then variables by index,
  // then compound terms by their printed form).
  bool sort_commutative = true;
  // Rewrite exp(log(x)) and log(exp(x)) to x.
  bool cancel_exp_log = true;

  void validate() const;
};

// Rewrites to the fixed point of the rule set:
//  * constant folding of variable-free subtrees,
//  * identities x*1, x+0, x/1, x^1, x^0, 1^x,
//  * neg/sub normalization: sums are flattened into signed terms, like terms
//    are collected and the result is rendered as P, -(N) or (P - N),
//  * products are flattened, constant factors and negations are pulled into
//    one leading coefficient, repeated bases merge into powers,
//  * (x^a)^b -> x^(a*b) for constant a, b unless a is even and b fractional,
//  * x/c -> (1/c)*x when c is a power of two (exact reciprocal),
//  * c*(a/b) -> (c*a)/b for a constant coefficient c.
// Equal inputs yield structurally identical outputs.
Expression simplify(const Expression& e, const CanonConfig& cfg = {});

// Replaces every constant by its value rounded to `digits` significant
// digits.  The tree shape is left untouched.
Expression round_constants(const Expression& e, int digits);

// simplify followed by round_constants, repeated until the result no longer
// changes (rounding can make previously distinct terms collide).
Expression canonical_form(const Expression& e, const CanonConfig& cfg = {});

// print_canonical(canonical_form(e)).  Idempotent on its own output.
std::string canonicalize(const Expression& e, const CanonConfig& cfg = {});

// Number of simplify() invocations in this process.
std::uint64_t simplify_call_count();

}  // namespace rediscover
