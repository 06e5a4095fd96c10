#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string_view>
#include <vector>

#include "rediscover/callback.hpp"
#include "rediscover/expr.hpp"
#include "rediscover/registry.hpp"

namespace rediscover {

struct GPConfig {
  int population_size = 200;
  int tournament_size = 5;
  double crossover_rate = 0.5;
  double mutation_rate = 0.4;
  double constant_mutation_rate = 0.3;
  double constant_perturbation_scale = 0.1;
  int max_init_depth = 4;
  int elites = 4;
  // 0 means the problem's max_search_complexity.
  int max_complexity = 0;
  NestingRules nesting = NestingRules::defaults();
  std::vector<Operator> operators = {Operator::add, Operator::sub, Operator::mul, Operator::div,
                                     Operator::pow, Operator::neg, Operator::exp, Operator::log,
                                     Operator::sqrt, Operator::sin, Operator::cos, Operator::tanh};
  std::uint64_t seed = 1;
  std::optional<Expression> plant;

  double budget_s = 1800.0;
  long max_generations = 0;  // 0: unlimited
  double tick_interval_s = 15.0;
  int polish_every = 5;
  // When positive, elapsed time is generation * virtual_generation_s instead
  // of the wall clock, which makes runs reproducible end to end.
  double virtual_generation_s = 0.0;

  void validate() const;
};

// Best individual per complexity value, pruned to the non-dominated set.
class HallOfFame {
 public:
  // Returns true if the individual was inserted.
  bool offer(const Expression& e, double loss);
  std::vector<HallMember> members() const;  // ascending complexity
  std::size_t size() const { return slots_.size(); }
  bool empty() const { return slots_.empty(); }

 private:
  std::map<int, HallMember> slots_;
};

enum class Termination { early_stop, timeout, generation_cap };
std::string_view name(Termination t);

struct GPResult {
  HallOfFame hall;
  Termination reason = Termination::timeout;
  long generations = 0;
  double elapsed_s = 0.0;
  int ticks = 0;
};

// Called at the tick cadence with the current hall of fame; returning true
// stops the search.
using TickHook = std::function<bool(const HallOfFame& hall, double elapsed_s)>;

GPResult run_toy_gp(const ProblemSpec& spec, const Dataset& train, const GPConfig& cfg,
                    const TickHook& on_tick);

// True when e satisfies the nesting rules and the complexity cap.
bool admissible(const Expression& e, const NestingRules& rules, int max_complexity);

}  // namespace rediscover
