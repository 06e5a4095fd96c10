#pragma once

#include <deque>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "rediscover/callback.hpp"
#include "rediscover/record.hpp"
#include "rediscover/registry.hpp"

namespace rediscover {

// Newline-delimited JSON messages between the harness and an engine process.
struct HelloMsg {
  std::string problem_id;
  std::vector<std::string> function_set;
  int max_complexity = 0;
  double budget_s = 0.0;
  std::string train_path;
  std::string test_path;
};

struct CandidateEntry {
  std::string expr;
  double loss = 0.0;  // non-finite losses travel as null
};

struct CandidatesMsg {
  double run_elapsed_s = 0.0;
  std::vector<CandidateEntry> exprs;
};

struct DecisionMsg {
  bool stop = false;
};

struct ByeMsg {
  std::string reason;
};

using EngineMessage = std::variant<HelloMsg, CandidatesMsg, DecisionMsg, ByeMsg>;

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string encode(const EngineMessage& m);  // no trailing newline
EngineMessage decode(std::string_view line);

std::vector<std::string> function_set_names(const std::vector<Operator>& ops);

class LineTransport {
 public:
  enum class Status { line, timeout, closed };

  virtual ~LineTransport() = default;
  // Blocks for at most timeout_s seconds.
  virtual Status read_line(std::string& out, double timeout_s) = 0;
  virtual bool write_line(std::string_view line) = 0;
  // Stops the peer and releases resources.  Returns the peer's exit status
  // when it has one.
  virtual std::optional<int> close() = 0;
};

// Queue-backed transport for tests: reads come from `incoming`, writes land
// in `written`.  An empty queue reads as a closed stream.
class MemoryTransport : public LineTransport {
 public:
  std::deque<std::string> incoming;
  std::vector<std::string> written;

  Status read_line(std::string& out, double timeout_s) override;
  bool write_line(std::string_view line) override;
  std::optional<int> close() override;
};

// `/bin/sh -c command` with its stdin/stdout connected to pipes.  The child
// runs in its own process group and is killed if this process dies.
class ChildProcess : public LineTransport {
 public:
  static std::unique_ptr<ChildProcess> spawn(const std::string& command);
  ~ChildProcess() override;

  Status read_line(std::string& out, double timeout_s) override;
  bool write_line(std::string_view line) override;
  // Closes stdin, waits up to grace_s for exit, then kills the group.
  std::optional<int> close() override;
  std::optional<int> close(double grace_s);
  int pid() const { return pid_; }

 private:
  ChildProcess(int pid, int in_fd, int out_fd) : pid_(pid), in_fd_(in_fd), out_fd_(out_fd) {}
  int pid_;
  int in_fd_;
  int out_fd_;
  std::string buffer_;
  bool eof_ = false;
  std::optional<int> status_;
};

struct ExternalRunConfig {
  double budget_s = 1800.0;
  int max_complexity = 0;
  std::vector<std::string> function_set;
  std::string train_path;
  std::string test_path;
};

// Serves one search run over `transport`: sends Hello, answers each
// Candidates message with a Decision, and closes with Bye.
RunRecord serve_external(const ProblemSpec& spec, const Dataset& test, const CallbackConfig& cfg,
                         const RunContext& ctx, LineTransport& transport,
                         const ExternalRunConfig& run);

}  // namespace rediscover
