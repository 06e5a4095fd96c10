#include "rediscover/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "rediscover/number_format.hpp"
#include "rediscover/program.hpp"
#include "rediscover/rng.hpp"

namespace rediscover {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Individual {
  Expression expr;
  double loss = kInf;
  int cx = 1;
};

const Expression& node_at(const Expression& e, std::size_t index) {
  if (index == 0) return e;
  --index;
  for (const auto& c : e.children()) {
    if (index < c.size()) return node_at(c, index);
    index -= c.size();
  }
  throw std::out_of_range("node index");
}

Expression replace_at(const Expression& e, std::size_t index, const Expression& with) {
  if (index == 0) return with;
  --index;
  std::vector<Expression> children = e.children();
  for (auto& c : children) {
    if (index < c.size()) {
      c = replace_at(c, index, with);
      return Expression::apply(e.op(), std::move(children));
    }
    index -= c.size();
  }
  throw std::out_of_range("node index");
}

void constant_slots(const Expression& e, std::size_t base, std::vector<std::size_t>& out) {
  if (e.is_constant()) out.push_back(base);
  std::size_t offset = base + 1;
  if (e.is_apply()) {
    for (const auto& c : e.children()) {
      constant_slots(c, offset, out);
      offset += c.size();
    }
  }
}

class Search {
 public:
  Search(const ProblemSpec& spec, const Dataset& train, const GPConfig& cfg)
      : spec_(spec), train_(train), cfg_(cfg), rng_(cfg.seed) {
    max_cx_ = cfg.max_complexity > 0 ? cfg.max_complexity : spec.max_search_complexity;
    nvars_ = static_cast<int>(spec.variables.size());
    for (Operator op : cfg.operators) (is_binary(op) ? binary_ : unary_).push_back(op);
    pred_.resize(train.rows());
  }

  GPResult run(const TickHook& on_tick) {
    const auto start = std::chrono::steady_clock::now();
    auto elapsed = [&](long gen) {
      if (cfg_.virtual_generation_s > 0.0) return static_cast<double>(gen) * cfg_.virtual_generation_s;
      return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };

    GPResult result;
    Throttle throttle(cfg_.tick_interval_s);
    init_population();
    long gen = 0;
    for (;;) {
      const double now = elapsed(gen);
      const auto stop = throttle.invoke(now, [&] { return on_tick ? on_tick(hall_, now) : false; });
      if (stop) ++result.ticks;
      if (stop && *stop) {
        result.reason = Termination::early_stop;
        break;
      }
      if (now >= cfg_.budget_s) {
        result.reason = Termination::timeout;
        break;
      }
      if (cfg_.max_generations > 0 && gen >= cfg_.max_generations) {
        result.reason = Termination::generation_cap;
        break;
      }
      step();
      ++gen;
      if (cfg_.polish_every > 0 && gen % cfg_.polish_every == 0) polish_hall();
    }
    result.generations = gen;
    result.elapsed_s = elapsed(gen);
    result.hall = hall_;
    return result;
  }

 private:
  double loss_of(const Expression& e, std::span<const double> constants) {
    const Program p(e);
    if (p.max_variable() > nvars_) return kInf;
    p.eval_rows(train_.inputs, static_cast<std::size_t>(nvars_), pred_, constants);
    return relative_error(train_.targets, pred_);
  }

  double loss_of(const Expression& e) {
    const Program p(e);
    return loss_of(e, p.constants());
  }

  Individual make(const Expression& e) {
    Individual ind{e, loss_of(e), complexity(e)};
    hall_.offer(ind.expr, ind.loss);
    return ind;
  }

  bool ok(const Expression& e) const { return admissible(e, cfg_.nesting, max_cx_); }

  Expression random_constant() {
    if (rng_.chance(0.5)) return Expression::constant(static_cast<double>(1 + rng_.below(3)));
    const double c = round_significant(rng_.uniform(-3.0, 3.0), 2);
    return Expression::constant(c == 0.0 ? 1.0 : c);
  }

  Expression random_terminal() {
    if (nvars_ > 0 && rng_.chance(0.7)) {
      return Expression::variable(1 + static_cast<int>(rng_.below(static_cast<std::uint64_t>(nvars_))));
    }
    return random_constant();
  }

  Expression random_exponent() {
    static constexpr double choices[] = {2.0, 3.0, 0.5, -1.0, -2.0};
    return Expression::constant(choices[rng_.below(5)]);
  }

  Expression random_tree(int depth) {
    if (depth <= 0 || rng_.chance(0.3)) return random_terminal();
    const bool binary = unary_.empty() || (!binary_.empty() && rng_.chance(0.7));
    if (binary) {
      const Operator op = binary_[rng_.below(binary_.size())];
      Expression lhs = random_tree(depth - 1);
      if (op == Operator::pow) return Expression::apply(op, std::move(lhs), random_exponent());
      return Expression::apply(op, std::move(lhs), random_tree(depth - 1));
    }
    const Operator op = unary_[rng_.below(unary_.size())];
    return Expression::apply(op, random_tree(depth - 1));
  }

  void init_population() {
    pop_.clear();
    if (cfg_.plant) pop_.push_back(make(*cfg_.plant));
    while (static_cast<int>(pop_.size()) < cfg_.population_size) {
      const int depth = 1 + static_cast<int>(rng_.below(static_cast<std::uint64_t>(cfg_.max_init_depth)));
      Expression e = random_tree(depth);
      if (ok(e)) pop_.push_back(make(e));
    }
  }

  double fitness(const Individual& ind) const { return ind.loss * (1.0 + 0.002 * ind.cx); }

  const Individual& tournament() {
    const Individual* best = nullptr;
    for (int i = 0; i < cfg_.tournament_size; ++i) {
      const auto& c = pop_[rng_.below(pop_.size())];
      if (!best || fitness(c) < fitness(*best) ||
          (fitness(c) == fitness(*best) && c.cx < best->cx)) {
        best = &c;
      }
    }
    return *best;
  }

  Expression crossover(const Expression& a, const Expression& b) {
    const auto& donor = node_at(b, rng_.below(b.size()));
    return replace_at(a, rng_.below(a.size()), donor);
  }

  Expression mutate_subtree(const Expression& a) {
    return replace_at(a, rng_.below(a.size()), random_tree(1 + static_cast<int>(rng_.below(3))));
  }

  Expression mutate_point(const Expression& a) {
    const std::size_t at = rng_.below(a.size());
    const Expression& n = node_at(a, at);
    if (!n.is_apply()) return replace_at(a, at, random_terminal());
    const auto& pool = is_binary(n.op()) ? binary_ : unary_;
    if (pool.empty()) return a;
    const Operator op = pool[rng_.below(pool.size())];
    if (op == Operator::pow && !n.child(1).is_constant()) return a;
    return replace_at(a, at, Expression::apply(op, n.children()));
  }

  Expression mutate_constant(const Expression& a) {
    std::vector<std::size_t> slots;
    constant_slots(a, 0, slots);
    if (slots.empty()) return mutate_point(a);
    const std::size_t at = slots[rng_.below(slots.size())];
    const double c = node_at(a, at).value();
    double next;
    const double r = rng_.uniform();
    if (r < 0.6) {
      next = c * (1.0 + cfg_.constant_perturbation_scale * rng_.normal());
    } else if (r < 0.9) {
      next = c + cfg_.constant_perturbation_scale * rng_.normal();
    } else {
      next = round_significant(c, 1 + static_cast<int>(rng_.below(3)));
    }
    if (!std::isfinite(next)) return a;
    return replace_at(a, at, Expression::constant(next));
  }

  Expression offspring() {
    for (int attempt = 0; attempt < 10; ++attempt) {
      const Expression& p = tournament().expr;
      Expression child = p;
      const double r = rng_.uniform();
      if (r < cfg_.crossover_rate) {
        child = crossover(p, tournament().expr);
      } else if (r < cfg_.crossover_rate + cfg_.mutation_rate) {
        child = rng_.chance(0.5) ? mutate_subtree(p) : mutate_point(p);
      }
      if (rng_.chance(cfg_.constant_mutation_rate)) child = mutate_constant(child);
      if (ok(child)) return child;
    }
    return tournament().expr;
  }

  void step() {
    std::vector<Individual> next;
    next.reserve(pop_.size());
    std::vector<const Individual*> order;
    for (const auto& ind : pop_) order.push_back(&ind);
    const std::size_t keep = std::min<std::size_t>(static_cast<std::size_t>(std::max(0, cfg_.elites)), order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(),
                      [&](const Individual* a, const Individual* b) { return fitness(*a) < fitness(*b); });
    for (std::size_t i = 0; i < keep; ++i) next.push_back(*order[i]);
    while (next.size() < pop_.size()) next.push_back(make(offspring()));
    pop_ = std::move(next);
  }

  // Coordinate descent on the constants of each hall member, then snapping
  // of each constant to shorter decimal values that do not increase the loss.
  void polish_hall() {
    for (const auto& m : hall_.members()) {
      const Program p(m.expression);
      std::vector<double> c = p.constants();
      if (c.empty() || !std::isfinite(m.loss)) continue;
      double best = m.loss;
      for (double step : {0.1, 0.01, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7}) {
        for (std::size_t k = 0; k < c.size(); ++k) {
          for (int iter = 0; iter < 8; ++iter) {
            bool improved = false;
            for (double dir : {1.0, -1.0}) {
              const double saved = c[k];
              c[k] = saved * (1.0 + dir * step);
              const double l = loss_of(m.expression, c);
              if (l < best) {
                best = l;
                improved = true;
                break;
              }
              c[k] = saved;
            }
            if (!improved) break;
          }
        }
      }
      for (std::size_t k = 0; k < c.size(); ++k) {
        for (int digits = 1; digits <= 6; ++digits) {
          const double saved = c[k];
          c[k] = round_significant(saved, digits);
          if (c[k] != saved && loss_of(m.expression, c) <= best) {
            best = loss_of(m.expression, c);
            break;
          }
          c[k] = saved;
        }
      }
      if (best < m.loss) {
        std::vector<std::size_t> slots;
        constant_slots(m.expression, 0, slots);
        Expression e = m.expression;
        for (std::size_t k = 0; k < slots.size(); ++k) {
          if (std::isfinite(c[k])) e = replace_at(e, slots[k], Expression::constant(c[k]));
        }
        if (!ok(e)) continue;
        Individual ind = make(e);
        pop_[rng_.below(pop_.size())] = std::move(ind);
      }
    }
  }

  const ProblemSpec& spec_;
  const Dataset& train_;
  const GPConfig& cfg_;
  Rng rng_;
  int max_cx_ = 0;
  int nvars_ = 0;
  std::vector<Operator> unary_, binary_;
  std::vector<Individual> pop_;
  std::vector<double> pred_;
  HallOfFame hall_;
};

}  // namespace

void GPConfig::validate() const {
  if (population_size < 2) throw std::invalid_argument("population_size must be >= 2");
  if (tournament_size < 1) throw std::invalid_argument("tournament_size must be >= 1");
  for (double r : {crossover_rate, mutation_rate, constant_mutation_rate}) {
    if (!(r >= 0.0 && r <= 1.0)) throw std::invalid_argument("rates must lie in [0, 1]");
  }
  if (crossover_rate + mutation_rate > 1.0) {
    throw std::invalid_argument("crossover_rate + mutation_rate must not exceed 1");
  }
  if (!(constant_perturbation_scale >= 0.0)) throw std::invalid_argument("bad perturbation scale");
  if (max_init_depth < 1) throw std::invalid_argument("max_init_depth must be >= 1");
  if (max_complexity < 0) throw std::invalid_argument("max_complexity must be >= 0");
  if (!(budget_s >= 0.0)) throw std::invalid_argument("budget must be >= 0");
  if (!(tick_interval_s > 0.0)) throw std::invalid_argument("tick interval must be > 0");
  if (operators.empty()) throw std::invalid_argument("empty operator set");
  for (Operator op : operators) {
    if (op == Operator::pow2 || op == Operator::pow3) {
      throw std::invalid_argument("pow2/pow3 are spellings of pow; list pow instead");
    }
  }
}

bool HallOfFame::offer(const Expression& e, double loss) {
  if (!std::isfinite(loss)) return false;
  const int cx = complexity(e);
  for (const auto& [c, m] : slots_) {
    if (c > cx) break;
    if (m.loss <= loss) return false;
  }
  slots_[cx] = HallMember{e, loss};
  for (auto it = slots_.upper_bound(cx); it != slots_.end();) {
    it = it->second.loss >= loss ? slots_.erase(it) : std::next(it);
  }
  return true;
}

std::vector<HallMember> HallOfFame::members() const {
  std::vector<HallMember> out;
  out.reserve(slots_.size());
  for (const auto& [c, m] : slots_) out.push_back(m);
  return out;
}

std::string_view name(Termination t) {
  switch (t) {
    case Termination::early_stop: return "early_stop";
    case Termination::timeout: return "timeout";
    case Termination::generation_cap: return "generation_cap";
  }
  return "timeout";
}

bool admissible(const Expression& e, const NestingRules& rules, int max_complexity) {
  return complexity(e) <= max_complexity && nesting_violations(e, rules).empty();
}

GPResult run_toy_gp(const ProblemSpec& spec, const Dataset& train, const GPConfig& cfg,
                    const TickHook& on_tick) {
  cfg.validate();
  if (train.num_vars != static_cast<int>(spec.variables.size()) || train.rows() == 0) {
    throw std::invalid_argument("training data does not match the problem");
  }
  const int cap = cfg.max_complexity > 0 ? cfg.max_complexity : spec.max_search_complexity;
  if (cfg.plant && !admissible(*cfg.plant, cfg.nesting, cap)) {
    throw std::invalid_argument("planted expression violates the nesting rules or complexity cap");
  }
  Search search(spec, train, cfg);
  return search.run(on_tick);
}

}  // namespace rediscover
