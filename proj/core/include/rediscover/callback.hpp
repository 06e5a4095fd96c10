#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "rediscover/canon.hpp"
#include "rediscover/expr.hpp"
#include "rediscover/registry.hpp"

namespace rediscover {

enum class DeltaMode {
  norm_ratio,     // ||y - y'|| / (||y|| + o)
  max_pointwise,  // max_i |y_i - y'_i| / (|y_i| + o)
};

struct CallbackConfig {
  double delta_max = 1e-8;
  double offset = 1e-100;
  int significant_digits = 5;
  double throttle_interval_s = 15.0;
  bool require_all_variables = true;
  DeltaMode delta_mode = DeltaMode::norm_ratio;
  // Distinct potential forms logged per run.
  int max_potentials = 50;

  void validate() const;
  CanonConfig canon() const;
};

// +inf when y_pred has a non-finite entry.  Throws std::invalid_argument on a
// length mismatch or empty input.
double relative_error(std::span<const double> y_orig, std::span<const double> y_pred,
                      double offset = 1e-100);
double max_pointwise_error(std::span<const double> y_orig, std::span<const double> y_pred,
                           double offset = 1e-100);
double delta(const CallbackConfig& cfg, std::span<const double> y_orig,
             std::span<const double> y_pred);

// Relative error of e on a dataset (+inf if e is invalid anywhere).
double delta_on(const CallbackConfig& cfg, const Expression& e, const Dataset& data);

enum class EventKind { discovery, potential };

struct Event {
  std::string timestamp;  // ISO-8601 UTC
  double elapsed_s = 0.0;
  EventKind kind = EventKind::potential;
  std::string problem_id;
  int run_index = 0;
  double delta = 0.0;
  int complexity = 0;
  std::string canonical;
};

std::string format_event(const Event& e);
std::optional<Event> parse_event(std::string_view line);
std::string iso_timestamp_now();

// Append-only event file.  Each line is written with a single write() on an
// O_APPEND descriptor, so concurrent writers never interleave within a line.
class EventLog {
 public:
  explicit EventLog(std::filesystem::path path);
  const std::filesystem::path& path() const { return path_; }
  void append(const Event& e) const;
  std::vector<Event> read() const;

 private:
  std::filesystem::path path_;
};

struct CandidateReport {
  Expression expression;
  std::string canonical;
  double delta = 0.0;
  int complexity = 0;
  double timestamp_s = 0.0;
};

struct Decision {
  enum class Action { continue_search, stop } action = Action::continue_search;
  std::optional<std::string> matched_form;
  bool recorded_potential = false;
  std::optional<CandidateReport> report;  // set once the candidate passed the gate

  bool stop() const { return action == Action::stop; }
};

// Per-run bookkeeping: which potential forms were logged, and failures
// swallowed by the check.
struct CallbackState {
  std::unordered_set<std::string> potentials;
  std::vector<std::string> potential_order;
  int failures = 0;
  std::string last_failure;
};

struct RunContext {
  const ProblemSpec* spec = nullptr;
  const AcceptableList* list = nullptr;
  const EventLog* log = nullptr;  // optional
  int run_index = 0;
};

// One pass of the early-termination check for a candidate whose test-set
// relative error is already known.
Decision check_candidate(const Expression& candidate, double delta, double elapsed_s,
                         const CallbackConfig& cfg, const RunContext& ctx, CallbackState& state);

struct HallMember {
  Expression expression;
  double loss = 0.0;
};

// Evaluates hall-of-fame members on the test set and runs check_candidate on
// each until one is accepted.
class EarlyStopCallback {
 public:
  EarlyStopCallback(CallbackConfig cfg, RunContext ctx, const Dataset& test);

  Decision check(const Expression& e, double elapsed_s);
  Decision check_all(std::span<const HallMember> members, double elapsed_s);

  const CallbackState& state() const { return state_; }
  const CallbackConfig& config() const { return cfg_; }

 private:
  CallbackConfig cfg_;
  RunContext ctx_;
  const Dataset& test_;
  CallbackState state_;
};

// Runs a body at most once per interval.  The first call always runs.
class Throttle {
 public:
  explicit Throttle(double interval_s);

  bool due(double now_s) const;
  template <class Body>
  auto invoke(double now_s, Body&& body) -> std::optional<decltype(body())> {
    if (!due(now_s)) return std::nullopt;
    last_ = now_s;
    started_ = true;
    ++runs_;
    return body();
  }
  int runs() const { return runs_; }
  double interval() const { return interval_; }

 private:
  double interval_;
  double last_ = 0.0;
  bool started_ = false;
  int runs_ = 0;
};

}  // namespace rediscover
