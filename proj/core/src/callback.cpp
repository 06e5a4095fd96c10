#include "rediscover/callback.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>
#include <ctime>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "rediscover/number_format.hpp"
#include "rediscover/program.hpp"

namespace rediscover {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_lengths(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("relative_error: length mismatch");
  if (a.empty()) throw std::invalid_argument("relative_error: empty input");
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return format_constant(v);
}

}  // namespace

void CallbackConfig::validate() const {
  if (!(delta_max > 0.0)) throw std::invalid_argument("delta_max must be > 0");
  if (!(offset > 0.0)) throw std::invalid_argument("offset must be > 0");
  if (significant_digits < 1) throw std::invalid_argument("significant_digits must be >= 1");
  if (!(throttle_interval_s > 0.0)) throw std::invalid_argument("throttle interval must be > 0");
  if (max_potentials < 0) throw std::invalid_argument("max_potentials must be >= 0");
}

CanonConfig CallbackConfig::canon() const {
  CanonConfig c;
  c.significant_digits = significant_digits;
  return c;
}

double relative_error(std::span<const double> y_orig, std::span<const double> y_pred, double offset) {
  check_lengths(y_orig, y_pred);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < y_orig.size(); ++i) {
    if (!std::isfinite(y_pred[i])) return kInf;
    const double d = y_orig[i] - y_pred[i];
    num += d * d;
    den += y_orig[i] * y_orig[i];
  }
  const double r = std::sqrt(num) / (std::sqrt(den) + offset);
  return std::isfinite(r) ? r : kInf;
}

double max_pointwise_error(std::span<const double> y_orig, std::span<const double> y_pred,
                           double offset) {
  check_lengths(y_orig, y_pred);
  double worst = 0.0;
  for (std::size_t i = 0; i < y_orig.size(); ++i) {
    if (!std::isfinite(y_pred[i])) return kInf;
    worst = std::max(worst, std::fabs(y_orig[i] - y_pred[i]) / (std::fabs(y_orig[i]) + offset));
  }
  return std::isfinite(worst) ? worst : kInf;
}

double delta(const CallbackConfig& cfg, std::span<const double> y_orig,
             std::span<const double> y_pred) {
  return cfg.delta_mode == DeltaMode::norm_ratio ? relative_error(y_orig, y_pred, cfg.offset)
                                                 : max_pointwise_error(y_orig, y_pred, cfg.offset);
}

double delta_on(const CallbackConfig& cfg, const Expression& e, const Dataset& data) {
  const Program program(e);
  if (program.max_variable() > data.num_vars) return kInf;
  std::vector<double> pred(data.rows());
  program.eval_rows(data.inputs, static_cast<std::size_t>(data.num_vars), pred);
  return delta(cfg, data.targets, pred);
}

std::string iso_timestamp_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[40];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[48];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

std::string format_event(const Event& e) {
  char elapsed[32];
  std::snprintf(elapsed, sizeof elapsed, "%.3f", e.elapsed_s);
  std::string line = e.timestamp;
  line += ' ';
  line += elapsed;
  line += e.kind == EventKind::discovery ? " DISCOVERY " : " POTENTIAL ";
  line += e.problem_id + ' ' + std::to_string(e.run_index) + ' ' + format_double(e.delta) + ' ' +
          std::to_string(e.complexity) + ' ' + e.canonical;
  return line;
}

std::optional<Event> parse_event(std::string_view line) {
  std::istringstream in{std::string(line)};
  Event e;
  std::string kind, elapsed, delta_text;
  if (!(in >> e.timestamp >> elapsed >> kind >> e.problem_id >> e.run_index >> delta_text >>
        e.complexity >> e.canonical)) {
    return std::nullopt;
  }
  std::string extra;
  if (in >> extra) return std::nullopt;
  if (kind == "DISCOVERY") {
    e.kind = EventKind::discovery;
  } else if (kind == "POTENTIAL") {
    e.kind = EventKind::potential;
  } else {
    return std::nullopt;
  }
  try {
    e.elapsed_s = std::stod(elapsed);
    e.delta = delta_text == "inf" ? kInf : std::stod(delta_text);
  } catch (const std::exception&) {
    return std::nullopt;
  }
  return e;
}

EventLog::EventLog(std::filesystem::path path) : path_(std::move(path)) {}

void EventLog::append(const Event& e) const {
  const std::string line = format_event(e) + "\n";
  const int fd = ::open(path_.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
  if (fd < 0) throw std::runtime_error("cannot open " + path_.string() + ": " + std::strerror(errno));
  const ssize_t n = ::write(fd, line.data(), line.size());
  const int err = errno;
  ::close(fd);
  if (n != static_cast<ssize_t>(line.size())) {
    throw std::runtime_error("short append to " + path_.string() + ": " + std::strerror(err));
  }
}

std::vector<Event> EventLog::read() const {
  std::vector<Event> out;
  std::ifstream in(path_);
  for (std::string line; std::getline(in, line);) {
    if (auto e = parse_event(line)) out.push_back(std::move(*e));
  }
  return out;
}

Decision check_candidate(const Expression& candidate, double delta_value, double elapsed_s,
                         const CallbackConfig& cfg, const RunContext& ctx, CallbackState& state) {
  Decision d;
  if (!(delta_value < cfg.delta_max)) return d;
  try {
    CandidateReport r;
    const Expression canonical = canonical_form(candidate, cfg.canon());
    r.expression = candidate;
    r.canonical = print_canonical(canonical);
    r.delta = delta_value;
    r.complexity = complexity(canonical);
    r.timestamp_s = elapsed_s;

    auto event = [&](EventKind kind) {
      Event e;
      e.timestamp = iso_timestamp_now();
      e.elapsed_s = elapsed_s;
      e.kind = kind;
      e.problem_id = ctx.spec->id;
      e.run_index = ctx.run_index;
      e.delta = delta_value;
      e.complexity = r.complexity;
      e.canonical = r.canonical;
      return e;
    };

    if (ctx.list->contains(r.canonical)) {
      if (ctx.log) ctx.log->append(event(EventKind::discovery));
      d.action = Decision::Action::stop;
      d.matched_form = r.canonical;
      d.report = std::move(r);
      return d;
    }

    bool prerequisites = r.complexity <= ctx.spec->acceptance_complexity_cap;
    if (prerequisites && cfg.require_all_variables) {
      const auto have = variables(canonical);
      for (const auto& s : ctx.spec->variables) {
        if (!std::binary_search(have.begin(), have.end(), s.variable)) {
          prerequisites = false;
          break;
        }
      }
    }
    if (prerequisites && !state.potentials.count(r.canonical) &&
        static_cast<int>(state.potentials.size()) < cfg.max_potentials) {
      if (ctx.log) ctx.log->append(event(EventKind::potential));
      state.potentials.insert(r.canonical);
      state.potential_order.push_back(r.canonical);
      d.recorded_potential = true;
    }
    d.report = std::move(r);
  } catch (const std::exception& ex) {
    ++state.failures;
    state.last_failure = ex.what();
    d = Decision{};
  }
  return d;
}

EarlyStopCallback::EarlyStopCallback(CallbackConfig cfg, RunContext ctx, const Dataset& test)
    : cfg_(std::move(cfg)), ctx_(ctx), test_(test) {
  cfg_.validate();
  if (!ctx_.spec || !ctx_.list) throw std::invalid_argument("callback needs a problem and a list");
}

Decision EarlyStopCallback::check(const Expression& e, double elapsed_s) {
  double d;
  try {
    d = delta_on(cfg_, e, test_);
  } catch (const std::exception& ex) {
    ++state_.failures;
    state_.last_failure = ex.what();
    return {};
  }
  return check_candidate(e, d, elapsed_s, cfg_, ctx_, state_);
}

Decision EarlyStopCallback::check_all(std::span<const HallMember> members, double elapsed_s) {
  Decision last;
  for (const auto& m : members) {
    Decision d = check(m.expression, elapsed_s);
    if (d.stop()) return d;
    if (d.recorded_potential) last.recorded_potential = true;
  }
  return last;
}

Throttle::Throttle(double interval_s) : interval_(interval_s) {
  if (!(interval_s > 0.0)) throw std::invalid_argument("throttle interval must be > 0");
}

bool Throttle::due(double now_s) const { return !started_ || now_s - last_ >= interval_; }

}  // namespace rediscover
