#pragma once

// Expression IR shared by the parser, the canonicalizer, the callback and the
// toy search engine.  Expressions are immutable trees; copies share nodes.

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rediscover {

// The function set available to every engine: five binary and nine unary
// operators.  pow2/pow3 only exist as spellings; the factories rewrite them
// to pow(x, 2) and pow(x, 3).
enum class Operator {
  add,
  sub,
  mul,
  div,
  pow,
  neg,
  exp,
  log,
  sqrt,
  pow2,
  pow3,
  sin,
  cos,
  tanh,
};

inline constexpr std::size_t kOperatorCount = 14;

int arity(Operator op);
std::string_view name(Operator op);
bool is_binary(Operator op);
std::optional<Operator> operator_from_name(std::string_view name);

class Expression;

namespace detail {
struct Node;
}

class Expression {
 public:
  enum class Kind { constant, variable, apply };

  // The constant 0.
  Expression();
  static Expression constant(double value);
  static Expression variable(int index);
  static Expression apply(Operator op, std::vector<Expression> children);
  static Expression apply(Operator op, Expression child);
  static Expression apply(Operator op, Expression lhs, Expression rhs);

  Kind kind() const;
  bool is_constant() const { return kind() == Kind::constant; }
  bool is_variable() const { return kind() == Kind::variable; }
  bool is_apply() const { return kind() == Kind::apply; }
  bool is(Operator op) const;

  // Valid only for the matching kind; throws std::logic_error otherwise.
  double value() const;
  int index() const;
  Operator op() const;
  const std::vector<Expression>& children() const;
  const Expression& child(std::size_t i) const { return children().at(i); }

  // Number of nodes in the tree.
  std::size_t size() const;

  friend bool operator==(const Expression& a, const Expression& b);

 private:
  explicit Expression(std::shared_ptr<const detail::Node> node)
      : node_(std::move(node)) {}
  std::shared_ptr<const detail::Node> node_;
};

// --- parsing ---------------------------------------------------------------

class ParseError : public std::runtime_error {
 public:
  enum class Kind { syntax, unknown_identifier, outside_function_set, empty };

  ParseError(Kind kind, std::size_t offset, const std::string& message);

  Kind kind() const { return kind_; }
  // Byte offset into the parsed text where the problem was detected.
  std::size_t offset() const { return offset_; }

 private:
  Kind kind_;
  std::size_t offset_;
};

Expression parse(std::string_view text);

// Fully parenthesized rendering; byte-exact representation for list files.
std::string print_canonical(const Expression& e);

// Operators plus operands of the binarized tree.
int complexity(const Expression& e);

// Sorted, deduplicated variable indices occurring in e.
std::vector<int> variables(const Expression& e);

// --- evaluation ------------------------------------------------------------

class UnboundVariable : public std::runtime_error {
 public:
  explicit UnboundVariable(int index);
  int index() const { return index_; }

 private:
  int index_;
};

// point[k - 1] is the value of variable vk.  NaN entries count as unbound.
// Returns std::nullopt ("invalid") for any non-finite intermediate result.
std::optional<double> evaluate(const Expression& e, std::span<const double> point);
std::optional<double> evaluate(const Expression& e, const std::map<int, double>& point);

// --- nesting constraints ---------------------------------------------------

struct NestingRules {
  // Operators in one group may not appear anywhere below another member of
  // the same group (including themselves).
  std::vector<std::vector<Operator>> exclusive_groups;
  // pow may only raise to a constant.
  bool constant_exponent = false;

  static NestingRules defaults();
};

struct NestingViolation {
  enum class Kind { nested, non_constant_exponent };
  Kind kind;
  Operator inner;
  Operator outer;
  std::string subtree;
};

std::vector<NestingViolation> nesting_violations(const Expression& e, const NestingRules& rules);

}  // namespace rediscover
