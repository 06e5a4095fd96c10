#include "rediscover/canon.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <unordered_map>

#include "rediscover/number_format.hpp"

namespace rediscover {
namespace {

std::atomic<std::uint64_t> g_simplify_calls{0};

bool is_integer(double x) { return std::isfinite(x) && std::floor(x) == x; }

bool is_even_integer(double x) { return is_integer(x) && std::fmod(x, 2.0) == 0.0; }

bool is_power_of_two(double x) {
  if (!std::isfinite(x) || x == 0.0) return false;
  int exp = 0;
  return std::frexp(std::fabs(x), &exp) == 0.5;
}

// Order-independent sum of a multiset of doubles.
double sorted_sum(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  return std::accumulate(values.begin(), values.end(), 0.0);
}

double sorted_product(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  return std::accumulate(values.begin(), values.end(), 1.0, std::multiplies<>());
}

Expression chain(Operator op, const std::vector<Expression>& operands) {
  Expression acc = operands.front();
  for (std::size_t i = 1; i < operands.size(); ++i) acc = Expression::apply(op, acc, operands[i]);
  return acc;
}

void flatten(const Expression& e, Operator op, std::vector<Expression>& out) {
  if (e.is(op)) {
    flatten(e.child(0), op, out);
    flatten(e.child(1), op, out);
  } else {
    out.push_back(e);
  }
}

struct Keyed {
  Expression expr;
  std::string key;
};

// Constants by value, then variables by index, then everything else by its
// printed form.
bool operand_less(const Keyed& a, const Keyed& b) {
  auto rank = [](const Expression& e) {
    return e.is_constant() ? 0 : e.is_variable() ? 1 : 2;
  };
  const int ra = rank(a.expr);
  const int rb = rank(b.expr);
  if (ra != rb) return ra < rb;
  if (ra == 0) return a.expr.value() < b.expr.value();
  if (ra == 1) return a.expr.index() < b.expr.index();
  return a.key < b.key;
}

class Simplifier {
 public:
  explicit Simplifier(const CanonConfig& cfg) : cfg_(cfg) {}

  Expression normalize(const Expression& e) {
    if (!e.is_apply()) return e;
    std::vector<Expression> cs;
    cs.reserve(e.children().size());
    for (const auto& c : e.children()) cs.push_back(normalize(c));
    const Operator op = e.op();
    switch (op) {
      case Operator::add:
      case Operator::sub:
      case Operator::neg:
        return build_sum(Expression::apply(op, std::move(cs)));
      case Operator::mul:
        return build_product(Expression::apply(op, std::move(cs)));
      case Operator::div:
        return simplify_div(cs[0], cs[1]);
      case Operator::pow:
        return simplify_pow(cs[0], cs[1]);
      default:
        return simplify_unary(op, cs[0]);
    }
  }

 private:
  struct Term {
    double coef;
    std::optional<Expression> rest;  // empty for the constant term
  };

  struct TermGroup {
    Expression rest;
    std::string key;
    std::vector<double> coefs;
  };

  std::optional<Expression> fold(const Expression& e) const {
    if (!cfg_.fold_constants) return std::nullopt;
    for (const auto& c : e.children()) {
      if (!c.is_constant()) return std::nullopt;
    }
    const auto v = evaluate(e, std::span<const double>{});
    if (!v) return std::nullopt;
    return Expression::constant(*v);
  }

  // Splits a normalized product into its leading constant and the rest.
  static std::pair<double, Expression> split_coefficient(const Expression& e) {
    if (!e.is(Operator::mul)) return {1.0, e};
    std::vector<Expression> fs;
    flatten(e, Operator::mul, fs);
    if (!fs.front().is_constant()) return {1.0, e};
    const double c = fs.front().value();
    fs.erase(fs.begin());
    return {c, chain(Operator::mul, fs)};
  }

  static void collect_terms(const Expression& e, double sign, std::vector<Term>& out) {
    if (e.is(Operator::add)) {
      collect_terms(e.child(0), sign, out);
      collect_terms(e.child(1), sign, out);
    } else if (e.is(Operator::sub)) {
      collect_terms(e.child(0), sign, out);
      collect_terms(e.child(1), -sign, out);
    } else if (e.is(Operator::neg)) {
      collect_terms(e.child(0), -sign, out);
    } else if (e.is_constant()) {
      out.push_back({sign * e.value(), std::nullopt});
    } else {
      auto [c, rest] = split_coefficient(e);
      out.push_back({sign * c, std::move(rest)});
    }
  }

  Expression scaled(double coef, const Expression& rest) const {
    if (coef == 1.0) return rest;
    if (coef == -1.0) return Expression::apply(Operator::neg, rest);
    // c*(a/b) -> (c*a)/b
    if (rest.is(Operator::div) && !rest.child(0).is_constant()) {
      std::vector<double> cs{coef};
      std::vector<Expression> num;
      collect_factors(rest.child(0), cs, num);
      const double k = sorted_product(cs);
      if (!num.empty() && std::isfinite(k) && k != 0.0) {
        return Expression::apply(Operator::div, scaled(k, chain(Operator::mul, num)), rest.child(1));
      }
    }
    std::vector<Expression> fs{Expression::constant(coef)};
    flatten(rest, Operator::mul, fs);
    return chain(Operator::mul, fs);
  }

  void order(std::vector<Keyed>& xs) const {
    if (cfg_.sort_commutative) std::stable_sort(xs.begin(), xs.end(), operand_less);
  }

  Expression build_sum(const Expression& e) {
    std::vector<Term> terms;
    collect_terms(e, 1.0, terms);

    std::vector<double> constants;
    std::vector<TermGroup> groups;
    std::unordered_map<std::string, std::size_t> by_key;
    for (auto& t : terms) {
      if (!t.rest) {
        constants.push_back(t.coef);
        continue;
      }
      std::string key = print_canonical(*t.rest);
      auto [it, inserted] = by_key.emplace(key, groups.size());
      if (inserted) groups.push_back({*t.rest, std::move(key), {}});
      groups[it->second].coefs.push_back(t.coef);
    }

    struct Signed {
      double magnitude;
      std::optional<Expression> rest;
      Keyed rendered;
    };
    std::vector<Signed> positive;
    std::vector<Signed> negative;
    const double k = sorted_sum(constants);
    if (k != 0.0) {
      auto& side = k > 0 ? positive : negative;
      const auto c = Expression::constant(std::fabs(k));
      side.push_back({std::fabs(k), std::nullopt, {c, print_canonical(c)}});
    }
    for (const auto& g : groups) {
      const double coef = sorted_sum(g.coefs);
      if (coef == 0.0) continue;
      const double mag = std::fabs(coef);
      auto rendered = scaled(mag, g.rest);
      auto key = print_canonical(rendered);
      (coef > 0 ? positive : negative).push_back({mag, g.rest, {rendered, std::move(key)}});
    }

    auto sum_of = [&](std::vector<Signed>& side) {
      std::vector<Keyed> keyed;
      for (auto& s : side) keyed.push_back(s.rendered);
      order(keyed);
      std::vector<Expression> xs;
      for (auto& k2 : keyed) xs.push_back(k2.expr);
      return chain(Operator::add, xs);
    };

    if (positive.empty() && negative.empty()) return Expression::constant(0.0);
    if (negative.empty()) return sum_of(positive);
    if (positive.empty()) {
      if (negative.size() == 1) {
        const auto& only = negative.front();
        if (!only.rest) return Expression::constant(-only.magnitude);
        return scaled(-only.magnitude, *only.rest);
      }
      return Expression::apply(Operator::neg, sum_of(negative));
    }
    return Expression::apply(Operator::sub, sum_of(positive), sum_of(negative));
  }

  static void collect_factors(const Expression& e, std::vector<double>& coefs,
                              std::vector<Expression>& out) {
    if (e.is(Operator::mul)) {
      collect_factors(e.child(0), coefs, out);
      collect_factors(e.child(1), coefs, out);
    } else if (e.is(Operator::neg)) {
      coefs.push_back(-1.0);
      collect_factors(e.child(0), coefs, out);
    } else if (e.is_constant()) {
      coefs.push_back(e.value());
    } else {
      out.push_back(e);
    }
  }

  Expression build_product(const Expression& e) {
    std::vector<double> coefs;
    std::vector<Expression> factors;
    collect_factors(e, coefs, factors);
    double coef = sorted_product(coefs);
    if (!std::isfinite(coef)) return e;
    if (coef == 0.0) return Expression::constant(0.0);

    struct Base {
      Expression base;
      std::string key;
      std::vector<double> exponents;
    };
    std::vector<Base> bases;
    std::unordered_map<std::string, std::size_t> by_key;
    for (const auto& f : factors) {
      Expression base = f;
      double exponent = 1.0;
      if (f.is(Operator::pow) && f.child(1).is_constant()) {
        base = f.child(0);
        exponent = f.child(1).value();
      }
      std::string key = print_canonical(base);
      auto [it, inserted] = by_key.emplace(key, bases.size());
      if (inserted) bases.push_back({base, std::move(key), {}});
      bases[it->second].exponents.push_back(exponent);
    }

    std::vector<Keyed> keyed;
    double extra = 1.0;
    for (const auto& b : bases) {
      const double exponent = sorted_sum(b.exponents);
      if (exponent == 0.0) continue;
      Expression f = b.exponents.size() == 1 && b.exponents[0] == 1.0
                         ? b.base
                         : simplify_pow(b.base, Expression::constant(exponent));
      if (f.is_constant()) {
        extra *= f.value();
        continue;
      }
      keyed.push_back({f, print_canonical(f)});
    }
    order(keyed);
    coef *= extra;
    if (!std::isfinite(coef)) return e;
    if (coef == 0.0) return Expression::constant(0.0);

    std::vector<Expression> xs;
    for (auto& k : keyed) xs.push_back(k.expr);
    if (xs.empty()) return Expression::constant(coef);
    const Expression body = chain(Operator::mul, xs);
    return scaled(coef, body);
  }

  Expression simplify_div(const Expression& a, const Expression& b) {
    const Expression whole = Expression::apply(Operator::div, a, b);
    if (auto f = fold(whole)) return *f;
    if (b.is_constant()) {
      const double c = b.value();
      if (c == 1.0) return a;
      if (c == -1.0) return build_sum(Expression::apply(Operator::neg, a));
      if (is_power_of_two(c)) {
        return build_product(Expression::apply(Operator::mul, Expression::constant(1.0 / c), a));
      }
    }
    if (a.is_constant() && a.value() == 0.0) return a;
    return whole;
  }

  Expression simplify_pow(const Expression& base, const Expression& exponent) {
    const Expression whole = Expression::apply(Operator::pow, base, exponent);
    if (auto f = fold(whole)) return *f;
    if (exponent.is_constant()) {
      const double b = exponent.value();
      if (b == 1.0) return base;
      if (b == 0.0) return Expression::constant(1.0);
      if (base.is(Operator::pow) && base.child(1).is_constant()) {
        const double a = base.child(1).value();
        const double combined = a * b;
        if (!(is_even_integer(a) && !is_integer(b)) && std::isfinite(combined)) {
          return simplify_pow(base.child(0), Expression::constant(combined));
        }
      }
    }
    if (base.is_constant() && base.value() == 1.0) return base;
    return whole;
  }

  Expression simplify_unary(Operator op, const Expression& x) {
    const Expression whole = Expression::apply(op, x);
    if (auto f = fold(whole)) return *f;
    if (cfg_.cancel_exp_log) {
      if (op == Operator::exp && x.is(Operator::log)) return x.child(0);
      if (op == Operator::log && x.is(Operator::exp)) return x.child(0);
    }
    return whole;
  }

  const CanonConfig& cfg_;
};

Expression round_node(const Expression& e, int digits) {
  switch (e.kind()) {
    case Expression::Kind::constant:
      return Expression::constant(round_significant(e.value(), digits));
    case Expression::Kind::variable:
      return e;
    case Expression::Kind::apply:
      break;
  }
  std::vector<Expression> cs;
  for (const auto& c : e.children()) cs.push_back(round_node(c, digits));
  return Expression::apply(e.op(), std::move(cs));
}

}  // namespace

void CanonConfig::validate() const {
  if (significant_digits < 1) throw std::invalid_argument("significant_digits must be >= 1");
}

Expression simplify(const Expression& e, const CanonConfig& cfg) {
  g_simplify_calls.fetch_add(1, std::memory_order_relaxed);
  Simplifier s(cfg);
  Expression cur = e;
  for (int pass = 0; pass < 16; ++pass) {
    Expression next = s.normalize(cur);
    if (next == cur) break;
    cur = std::move(next);
  }
  return cur;
}

Expression round_constants(const Expression& e, int digits) {
  if (digits < 1) throw std::invalid_argument("round_constants: digits must be >= 1");
  return round_node(e, digits);
}

Expression canonical_form(const Expression& e, const CanonConfig& cfg) {
  cfg.validate();
  Expression cur = e;
  for (int pass = 0; pass < 8; ++pass) {
    Expression next = round_constants(simplify(cur, cfg), cfg.significant_digits);
    if (next == cur) break;
    cur = std::move(next);
  }
  return cur;
}

std::string canonicalize(const Expression& e, const CanonConfig& cfg) {
  return print_canonical(canonical_form(e, cfg));
}

std::uint64_t simplify_call_count() { return g_simplify_calls.load(std::memory_order_relaxed); }

}  // namespace rediscover
