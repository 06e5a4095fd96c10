#include "rediscover/expr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "rediscover/number_format.hpp"

namespace rediscover {

namespace detail {
struct Node {
  Expression::Kind kind;
  double value = 0.0;
  int index = 0;
  Operator op = Operator::add;
  std::vector<Expression> children;
  std::size_t size = 1;
};
}  // namespace detail

namespace {

struct OperatorInfo {
  Operator op;
  std::string_view name;
  int arity;
};

constexpr OperatorInfo kOperators[] = {
    {Operator::add, "+", 2},     {Operator::sub, "-", 2},     {Operator::mul, "*", 2},
    {Operator::div, "/", 2},     {Operator::pow, "pow", 2},   {Operator::neg, "neg", 1},
    {Operator::exp, "exp", 1},   {Operator::log, "log", 1},   {Operator::sqrt, "sqrt", 1},
    {Operator::pow2, "pow2", 1}, {Operator::pow3, "pow3", 1}, {Operator::sin, "sin", 1},
    {Operator::cos, "cos", 1},   {Operator::tanh, "tanh", 1},
};
static_assert(std::size(kOperators) == kOperatorCount);

const OperatorInfo& info(Operator op) {
  return kOperators[static_cast<std::size_t>(op)];
}

}  // namespace

int arity(Operator op) { return info(op).arity; }
std::string_view name(Operator op) { return info(op).name; }
bool is_binary(Operator op) { return arity(op) == 2; }

std::optional<Operator> operator_from_name(std::string_view text) {
  for (const auto& entry : kOperators) {
    if (entry.name == text) return entry.op;
  }
  return std::nullopt;
}

// --- Expression ------------------------------------------------------------

Expression::Expression() : Expression(constant(0.0)) {}

Expression Expression::constant(double value) {
  if (!std::isfinite(value)) throw std::invalid_argument("constant must be finite");
  auto node = std::make_shared<detail::Node>();
  node->kind = Kind::constant;
  node->value = value == 0.0 ? 0.0 : value;  // drop the sign of -0
  return Expression(std::move(node));
}

Expression Expression::variable(int index) {
  if (index < 1) throw std::invalid_argument("variable index must be >= 1");
  auto node = std::make_shared<detail::Node>();
  node->kind = Kind::variable;
  node->index = index;
  return Expression(std::move(node));
}

Expression Expression::apply(Operator op, std::vector<Expression> children) {
  if (static_cast<int>(children.size()) != arity(op)) {
    throw std::invalid_argument("wrong number of operands for " + std::string(name(op)));
  }
  if (op == Operator::pow2) return apply(Operator::pow, std::move(children[0]), constant(2.0));
  if (op == Operator::pow3) return apply(Operator::pow, std::move(children[0]), constant(3.0));
  auto node = std::make_shared<detail::Node>();
  node->kind = Kind::apply;
  node->op = op;
  node->size = 1;
  for (const auto& c : children) node->size += c.size();
  node->children = std::move(children);
  return Expression(std::move(node));
}

Expression Expression::apply(Operator op, Expression child) {
  std::vector<Expression> cs;
  cs.push_back(std::move(child));
  return apply(op, std::move(cs));
}

Expression Expression::apply(Operator op, Expression lhs, Expression rhs) {
  std::vector<Expression> cs;
  cs.push_back(std::move(lhs));
  cs.push_back(std::move(rhs));
  return apply(op, std::move(cs));
}

Expression::Kind Expression::kind() const { return node_->kind; }

bool Expression::is(Operator op) const { return node_->kind == Kind::apply && node_->op == op; }

double Expression::value() const {
  if (node_->kind != Kind::constant) throw std::logic_error("not a constant");
  return node_->value;
}

int Expression::index() const {
  if (node_->kind != Kind::variable) throw std::logic_error("not a variable");
  return node_->index;
}

Operator Expression::op() const {
  if (node_->kind != Kind::apply) throw std::logic_error("not an operator application");
  return node_->op;
}

const std::vector<Expression>& Expression::children() const {
  static const std::vector<Expression> kNone;
  return node_->kind == Kind::apply ? node_->children : kNone;
}

std::size_t Expression::size() const { return node_->size; }

bool operator==(const Expression& a, const Expression& b) {
  if (a.node_ == b.node_) return true;
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case Expression::Kind::constant:
      return a.value() == b.value();
    case Expression::Kind::variable:
      return a.index() == b.index();
    case Expression::Kind::apply:
      if (a.op() != b.op() || a.size() != b.size()) return false;
      for (std::size_t i = 0; i < a.children().size(); ++i) {
        if (!(a.children()[i] == b.children()[i])) return false;
      }
      return true;
  }
  return false;
}

// --- parser ----------------------------------------------------------------

ParseError::ParseError(Kind kind, std::size_t offset, const std::string& message)
    : std::runtime_error(message + " at offset " + std::to_string(offset)),
      kind_(kind),
      offset_(offset) {}

namespace {

// Well-known functions that engines emit but the function set excludes.
constexpr std::string_view kForeignFunctions[] = {
    "tan",   "abs",   "asin", "acos",  "atan", "sinh",   "cosh",  "log10",
    "log2",  "cbrt",  "inv",  "square", "cube", "sign",  "floor", "ceil",
    "max",   "min",   "mod",  "relu",  "erf",  "gamma", "atanh", "asinh",
};

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Expression run() {
    skip_ws();
    if (pos_ == text_.size()) {
      throw ParseError(ParseError::Kind::empty, 0, "empty expression");
    }
    Expression e = parse_sum();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& message) const {
    throw ParseError(ParseError::Kind::syntax, pos_, message);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  void expect(char c) {
    if (peek() != c) {
      if (pos_ >= text_.size()) fail(std::string("expected '") + c + "' before end of input");
      fail(std::string("expected '") + c + "'");
    }
    ++pos_;
  }

  static bool starts_number(char c) {
    return std::isdigit(static_cast<unsigned char>(c)) || c == '.';
  }

  Expression parse_sum() {
    Expression lhs = parse_product();
    for (;;) {
      const char c = peek();
      if (c == '+' || c == '-') {
        ++pos_;
        Expression rhs = parse_product();
        lhs = Expression::apply(c == '+' ? Operator::add : Operator::sub, std::move(lhs),
                                std::move(rhs));
      } else {
        return lhs;
      }
    }
  }

  Expression parse_product() {
    Expression lhs = parse_unary();
    for (;;) {
      const char c = peek();
      if (c == '*' || c == '/') {
        ++pos_;
        Expression rhs = parse_unary();
        lhs = Expression::apply(c == '*' ? Operator::mul : Operator::div, std::move(lhs),
                                std::move(rhs));
      } else {
        return lhs;
      }
    }
  }

  Expression parse_unary() {
    if (peek() == '-') {
      // "-2" directly followed by digits is a negative literal; anything else
      // after '-' is negation of the following operand.
      if (pos_ + 1 < text_.size() && starts_number(text_[pos_ + 1])) return parse_power();
      ++pos_;
      return Expression::apply(Operator::neg, parse_unary());
    }
    return parse_power();
  }

  Expression parse_power() {
    Expression base = parse_primary();
    if (peek() == '^') {
      ++pos_;
      Expression exponent = parse_unary();
      return Expression::apply(Operator::pow, std::move(base), std::move(exponent));
    }
    return base;
  }

  Expression parse_number() {
    const std::size_t start = pos_;
    if (text_[pos_] == '-') ++pos_;
    auto digits = [&] {
      const std::size_t from = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      return pos_ - from;
    };
    std::size_t count = digits();
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      count += digits();
    }
    if (count == 0) {
      pos_ = start;
      fail("malformed number");
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      const std::size_t mark = pos_;
      ++pos_;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
      if (digits() == 0) {
        pos_ = mark;
        fail("malformed exponent");
      }
    }
    auto value = parse_constant(text_.substr(start, pos_ - start));
    if (!value) {
      pos_ = start;
      fail("constant is not a finite double");
    }
    return Expression::constant(*value);
  }

  Expression parse_primary() {
    const char c = peek();
    if (c == '\0') fail("unexpected end of input");
    if (c == '(') {
      ++pos_;
      Expression inner = parse_sum();
      expect(')');
      return inner;
    }
    if (starts_number(c) || c == '-') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
    fail("unexpected '" + std::string(1, c) + "'");
  }

  Expression parse_identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      ++pos_;
    }
    const std::string_view word = text_.substr(start, pos_ - start);

    if (word.size() >= 2 && word[0] == 'v' &&
        std::all_of(word.begin() + 1, word.end(),
                    [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); })) {
      if (word.size() > 10) {
        pos_ = start;
        fail("variable index too large");
      }
      const int index = std::stoi(std::string(word.substr(1)));
      if (index < 1) {
        pos_ = start;
        fail("variable index must be >= 1");
      }
      return Expression::variable(index);
    }

    const auto op = operator_from_name(word);
    if (!op) {
      const bool foreign = std::find(std::begin(kForeignFunctions), std::end(kForeignFunctions),
                                     word) != std::end(kForeignFunctions);
      if (foreign) {
        throw ParseError(ParseError::Kind::outside_function_set, start,
                         "operator '" + std::string(word) + "' is outside the function set");
      }
      throw ParseError(ParseError::Kind::unknown_identifier, start,
                       "unknown identifier '" + std::string(word) + "'");
    }
    expect('(');
    Expression first = parse_sum();
    if (*op == Operator::pow) {
      expect(',');
      Expression second = parse_sum();
      expect(')');
      return Expression::apply(Operator::pow, std::move(first), std::move(second));
    }
    expect(')');
    return Expression::apply(*op, std::move(first));
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

// --- printer ---------------------------------------------------------------

enum class Slot { standalone, operand, pow_base };

void print_node(const Expression& e, std::string& out, Slot slot);

void collect_chain(const Expression& e, Operator op, std::vector<const Expression*>& out) {
  if (e.is(op)) {
    collect_chain(e.child(0), op, out);
    out.push_back(&e.child(1));
  } else {
    out.push_back(&e);
  }
}

void print_node(const Expression& e, std::string& out, Slot slot) {
  switch (e.kind()) {
    case Expression::Kind::constant:
      out += format_constant(e.value());
      return;
    case Expression::Kind::variable:
      out += 'v';
      out += std::to_string(e.index());
      return;
    case Expression::Kind::apply:
      break;
  }
  const Operator op = e.op();
  switch (op) {
    case Operator::add:
    case Operator::mul: {
      std::vector<const Expression*> chain;
      collect_chain(e.child(0), op, chain);
      chain.push_back(&e.child(1));
      out += '(';
      for (std::size_t i = 0; i < chain.size(); ++i) {
        if (i > 0) out += op == Operator::add ? '+' : '*';
        print_node(*chain[i], out, Slot::operand);
      }
      out += ')';
      return;
    }
    case Operator::sub:
    case Operator::div:
      out += '(';
      print_node(e.child(0), out, Slot::operand);
      out += op == Operator::sub ? '-' : '/';
      print_node(e.child(1), out, Slot::operand);
      out += ')';
      return;
    case Operator::pow:
      out += '(';
      print_node(e.child(0), out, Slot::pow_base);
      out += '^';
      print_node(e.child(1), out, Slot::operand);
      out += ')';
      return;
    case Operator::neg:
      if (slot == Slot::operand) {
        out += "-(";
        print_node(e.child(0), out, Slot::standalone);
        out += ')';
      } else {
        out += "(-(";
        print_node(e.child(0), out, Slot::standalone);
        out += "))";
      }
      return;
    default:
      out += name(op);
      out += '(';
      print_node(e.child(0), out, Slot::standalone);
      out += ')';
      return;
  }
}

void collect_variables(const Expression& e, std::set<int>& out) {
  if (e.is_variable()) out.insert(e.index());
  for (const auto& c : e.children()) collect_variables(c, out);
}

std::optional<double> finite(double x) {
  if (std::isfinite(x)) return x;
  return std::nullopt;
}

template <class Lookup>
std::optional<double> eval_node(const Expression& e, const Lookup& lookup) {
  switch (e.kind()) {
    case Expression::Kind::constant:
      return e.value();
    case Expression::Kind::variable:
      return lookup(e.index());
    case Expression::Kind::apply:
      break;
  }
  const auto a = eval_node(e.child(0), lookup);
  if (!a) return std::nullopt;
  const double x = *a;
  if (is_binary(e.op())) {
    const auto b = eval_node(e.child(1), lookup);
    if (!b) return std::nullopt;
    const double y = *b;
    switch (e.op()) {
      case Operator::add: return finite(x + y);
      case Operator::sub: return finite(x - y);
      case Operator::mul: return finite(x * y);
      case Operator::div:
        if (y == 0.0) return std::nullopt;
        return finite(x / y);
      case Operator::pow: return finite(std::pow(x, y));
      default: break;
    }
    return std::nullopt;
  }
  switch (e.op()) {
    case Operator::neg: return -x;
    case Operator::exp: return finite(std::exp(x));
    case Operator::log:
      if (x <= 0.0) return std::nullopt;
      return finite(std::log(x));
    case Operator::sqrt:
      if (x < 0.0) return std::nullopt;
      return std::sqrt(x);
    case Operator::sin: return finite(std::sin(x));
    case Operator::cos: return finite(std::cos(x));
    case Operator::tanh: return finite(std::tanh(x));
    default: break;
  }
  return std::nullopt;
}

void check_nesting(const Expression& e, const NestingRules& rules,
                   std::vector<std::optional<Operator>>& open_outer,
                   std::vector<NestingViolation>& out) {
  if (!e.is_apply()) return;
  const Operator op = e.op();
  std::vector<std::size_t> opened;
  for (std::size_t g = 0; g < rules.exclusive_groups.size(); ++g) {
    const auto& group = rules.exclusive_groups[g];
    if (std::find(group.begin(), group.end(), op) == group.end()) continue;
    if (open_outer[g]) {
      out.push_back({NestingViolation::Kind::nested, op, *open_outer[g], print_canonical(e)});
    } else {
      open_outer[g] = op;
      opened.push_back(g);
    }
  }
  if (op == Operator::pow && rules.constant_exponent && !e.child(1).is_constant()) {
    out.push_back({NestingViolation::Kind::non_constant_exponent, op, op, print_canonical(e)});
  }
  for (const auto& c : e.children()) check_nesting(c, rules, open_outer, out);
  for (auto g : opened) open_outer[g].reset();
}

}  // namespace

Expression parse(std::string_view text) { return Parser(text).run(); }

std::string print_canonical(const Expression& e) {
  std::string out;
  print_node(e, out, Slot::standalone);
  return out;
}

int complexity(const Expression& e) { return static_cast<int>(e.size()); }

std::vector<int> variables(const Expression& e) {
  std::set<int> found;
  collect_variables(e, found);
  return {found.begin(), found.end()};
}

UnboundVariable::UnboundVariable(int index)
    : std::runtime_error("variable v" + std::to_string(index) + " is not bound"), index_(index) {}

std::optional<double> evaluate(const Expression& e, std::span<const double> point) {
  return eval_node(e, [&](int index) -> std::optional<double> {
    if (index > static_cast<int>(point.size()) || std::isnan(point[index - 1])) {
      throw UnboundVariable(index);
    }
    return point[index - 1];
  });
}

std::optional<double> evaluate(const Expression& e, const std::map<int, double>& point) {
  return eval_node(e, [&](int index) -> std::optional<double> {
    auto it = point.find(index);
    if (it == point.end()) throw UnboundVariable(index);
    return it->second;
  });
}

NestingRules NestingRules::defaults() {
  NestingRules rules;
  rules.exclusive_groups = {{Operator::exp, Operator::log},
                            {Operator::sin, Operator::cos, Operator::tanh}};
  return rules;
}

std::vector<NestingViolation> nesting_violations(const Expression& e, const NestingRules& rules) {
  std::vector<NestingViolation> out;
  std::vector<std::optional<Operator>> open(rules.exclusive_groups.size());
  check_nesting(e, rules, open, out);
  return out;
}

}  // namespace rediscover
