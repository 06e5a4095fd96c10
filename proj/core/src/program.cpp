#include "rediscover/program.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace rediscover {
namespace {

// Returns NaN for every outcome evaluate() calls invalid.
inline double apply_unary(Operator op, double x) {
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  switch (op) {
    case Operator::neg: return -x;
    case Operator::exp: return std::exp(x);
    case Operator::log: return x > 0.0 ? std::log(x) : nan;
    case Operator::sqrt: return x >= 0.0 ? std::sqrt(x) : nan;
    case Operator::sin: return std::sin(x);
    case Operator::cos: return std::cos(x);
    case Operator::tanh: return std::tanh(x);
    default: return nan;
  }
}

inline double apply_binary(Operator op, double x, double y) {
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  switch (op) {
    case Operator::add: return x + y;
    case Operator::sub: return x - y;
    case Operator::mul: return x * y;
    case Operator::div: return y != 0.0 ? x / y : nan;
    case Operator::pow: return std::pow(x, y);
    default: return nan;
  }
}

}  // namespace

Program::Program(const Expression& e) {
  code_.reserve(e.size());
  emit(e);
  int depth = 0;
  for (const auto& ins : code_) {
    if (ins.kind == Instr::Kind::op) {
      depth -= arity(ins.op) - 1;
    } else {
      ++depth;
    }
    max_depth_ = std::max(max_depth_, depth);
  }
}

void Program::emit(const Expression& e) {
  switch (e.kind()) {
    case Expression::Kind::constant:
      code_.push_back({Instr::Kind::constant, Operator::add, static_cast<int>(constants_.size())});
      constants_.push_back(e.value());
      return;
    case Expression::Kind::variable:
      code_.push_back({Instr::Kind::variable, Operator::add, e.index()});
      max_variable_ = std::max(max_variable_, e.index());
      return;
    case Expression::Kind::apply:
      break;
  }
  // Leaves keep their left-to-right order in postfix, so slot k is the k-th
  // constant leaf from the left.
  for (const auto& c : e.children()) emit(c);
  code_.push_back({Instr::Kind::op, e.op(), 0});
}

std::optional<double> Program::eval(std::span<const double> point,
                                    std::span<const double> constants) const {
  if (max_variable_ > static_cast<int>(point.size())) throw UnboundVariable(max_variable_);
  double small[64];
  std::vector<double> big;
  double* stack = small;
  if (max_depth_ > 64) {
    big.resize(static_cast<std::size_t>(max_depth_));
    stack = big.data();
  }
  int top = 0;
  for (const auto& ins : code_) {
    switch (ins.kind) {
      case Instr::Kind::constant:
        stack[top++] = constants[static_cast<std::size_t>(ins.arg)];
        break;
      case Instr::Kind::variable: {
        const double v = point[static_cast<std::size_t>(ins.arg - 1)];
        if (std::isnan(v)) throw UnboundVariable(ins.arg);
        stack[top++] = v;
        break;
      }
      case Instr::Kind::op: {
        double r;
        if (is_binary(ins.op)) {
          r = apply_binary(ins.op, stack[top - 2], stack[top - 1]);
          --top;
        } else {
          r = apply_unary(ins.op, stack[top - 1]);
        }
        if (!std::isfinite(r)) return std::nullopt;
        stack[top - 1] = r;
        break;
      }
    }
  }
  return stack[0];
}

void Program::eval_rows(std::span<const double> rows, std::size_t stride,
                        std::span<double> out) const {
  eval_rows(rows, stride, out, constants_);
}

void Program::eval_rows(std::span<const double> rows, std::size_t stride, std::span<double> out,
                        std::span<const double> constants) const {
  if (stride == 0 || rows.size() / stride != out.size()) {
    throw std::invalid_argument("eval_rows: shape mismatch");
  }
  for (std::size_t r = 0; r < out.size(); ++r) {
    const auto v = eval(rows.subspan(r * stride, stride), constants);
    out[r] = v ? *v : std::numeric_limits<double>::quiet_NaN();
  }
}

}  // namespace rediscover
