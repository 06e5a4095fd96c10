#include <doctest.h>

#include <chrono>
#include <cmath>
#include <signal.h>

#include "rediscover/protocol.hpp"
#include "support/paths.hpp"

using namespace rediscover;
using rediscover::testing::TempDir;

namespace {

struct Session {
  Registry reg{testing::data_dir()};
  ProblemSpec spec = reg.problem("II.38.14");
  AcceptableList list = reg.list("II.38.14");
  Dataset train = sample_dataset(spec, Role::train, 1);
  Dataset test = sample_dataset(spec, Role::test, 2);
  TempDir tmp{"protocol"};
  EventLog log{tmp.path() / "run1.events"};
  RunContext ctx{&spec, &list, &log, 1};
  ExternalRunConfig run;

  Session() {
    run.budget_s = 20.0;
    run.function_set = {"add", "mul"};
    run.train_path = (tmp.path() / "train.csv").string();
    run.test_path = (tmp.path() / "test.csv").string();
    write_csv(run.train_path, train);
    write_csv(run.test_path, test);
  }

  RunRecord serve(LineTransport& t) { return serve_external(spec, test, CallbackConfig{}, ctx, t, run); }

  RunRecord serve_stub(const std::string& args) {
    auto child = ChildProcess::spawn(std::string(STUB_ENGINE) + " " + args);
    return serve(*child);
  }
};

std::string candidates(std::initializer_list<const char*> exprs) {
  CandidatesMsg c;
  for (const char* e : exprs) c.exprs.push_back({e, 0.0});
  return encode(c);
}

}  // namespace

TEST_SUITE("protocol") {

TEST_CASE("messages round trip") {
  const HelloMsg h{"II.38.14", {"add", "sqrt"}, 11, 30.0, "/a/train.csv", "/a/test.csv"};
  const auto back = std::get<HelloMsg>(decode(encode(h)));
  CHECK(back.problem_id == h.problem_id);
  CHECK(back.function_set == h.function_set);
  CHECK(back.max_complexity == 11);
  CHECK(back.budget_s == 30.0);
  CHECK(back.test_path == h.test_path);

  const CandidatesMsg c{2.5, {{"(v1*v2)", 0.25}, {"v1", std::numeric_limits<double>::infinity()}}};
  const auto text = encode(c);
  CHECK(text.find("null") != std::string::npos);
  const auto cb = std::get<CandidatesMsg>(decode(text));
  REQUIRE(cb.exprs.size() == 2);
  CHECK(cb.exprs[0].loss == 0.25);
  CHECK(std::isinf(cb.exprs[1].loss));

  CHECK(std::get<DecisionMsg>(decode(encode(DecisionMsg{true}))).stop);
  CHECK(std::get<ByeMsg>(decode(encode(ByeMsg{"done"}))).reason == "done");
  CHECK(encode(DecisionMsg{false}) == R"({"stop":false,"type":"decision"})");
}

TEST_CASE("decode errors") {
  CHECK_THROWS_AS(decode("{not json"), ProtocolError);
  CHECK_THROWS_AS(decode("[1,2]"), ProtocolError);
  CHECK_THROWS_AS(decode(R"({"type":"shout"})"), ProtocolError);
  CHECK_THROWS_AS(decode(R"({"type":"decision"})"), ProtocolError);
  CHECK_THROWS_AS(decode(R"({"type":"decision","stop":"yes"})"), ProtocolError);
  CHECK_THROWS_AS(decode(R"({"type":"candidates","run_elapsed_s":0,"exprs":[{"expr":"v1"}]})"), ProtocolError);
}

TEST_CASE("function set names") {
  CHECK(function_set_names({Operator::add, Operator::tanh}) == std::vector<std::string>{"+", "tanh"});
}

TEST_CASE("in-memory: acceptable candidate stops") {
  Session s;
  MemoryTransport t;
  t.incoming = {candidates({"(v1*v2)"}), candidates({"v1", "(v1/(2+(2*v2)))"})};
  const auto rec = s.serve(t);
  CHECK(rec.outcome == Outcome::discovered);
  CHECK(*rec.form == "(v1/(2+(2*v2)))");
  REQUIRE(t.written.size() == 4);
  CHECK(std::get<HelloMsg>(decode(t.written[0])).problem_id == "II.38.14");
  CHECK_FALSE(std::get<DecisionMsg>(decode(t.written[1])).stop);
  CHECK(std::get<DecisionMsg>(decode(t.written[2])).stop);
  CHECK(std::get<ByeMsg>(decode(t.written[3])).reason == "discovered");
  CHECK(s.log.read().back().kind == EventKind::discovery);
}

TEST_CASE("in-memory: empty candidate list continues") {
  Session s;
  MemoryTransport t;
  t.incoming = {candidates({}), encode(ByeMsg{"done"})};
  const auto rec = s.serve(t);
  CHECK_FALSE(std::get<DecisionMsg>(decode(t.written[1])).stop);
  CHECK(rec.outcome == Outcome::exhausted);
}

TEST_CASE("in-memory: unknown operator is skipped") {
  Session s;
  MemoryTransport t;
  t.incoming = {candidates({"abs(v1)", "(v1/(2*(1+v2)))"})};
  const auto rec = s.serve(t);
  CHECK(rec.outcome == Outcome::discovered);
  CHECK(rec.note.find("skipped 1") != std::string::npos);
}

TEST_CASE("in-memory: protocol violations end the run as invalid") {
  for (const std::string bad : {std::string("{not json"), encode(DecisionMsg{true}),
                                encode(HelloMsg{"x", {}, 1, 1.0, "a", "b"})}) {
    Session s;
    MemoryTransport t;
    t.incoming = {bad, candidates({"(v1/(2*(1+v2)))"})};
    const auto rec = s.serve(t);
    CAPTURE(bad);
    CHECK(rec.outcome == Outcome::invalid);
    CHECK(std::holds_alternative<ByeMsg>(decode(t.written.back())));
    CHECK(t.incoming.size() == 1);
  }
}

TEST_CASE("in-memory: stream closed") {
  Session s;
  MemoryTransport t;
  const auto rec = s.serve(t);
  CHECK(rec.outcome == Outcome::exhausted);
  CHECK(rec.used_s <= rec.allotted_s);
}

TEST_CASE("child process: planted stub is discovered") {
  Session s;
  const auto rec = s.serve_stub("plant '(v1/(2*(1+v2)))'");
  CHECK(rec.outcome == Outcome::discovered);
  CHECK(*rec.form == "(v1/(2*(1+v2)))");
}

TEST_CASE("child process: degradations") {
  Session s;
  CHECK(s.serve_stub("malformed").outcome == Outcome::invalid);
  const auto unknown = s.serve_stub("unknown-op");
  CHECK(unknown.outcome == Outcome::exhausted);
  CHECK(unknown.note.find("skipped 1") != std::string::npos);
  CHECK(s.serve_stub("crash").outcome == Outcome::invalid);
  auto missing = ChildProcess::spawn("/nonexistent/engine");
  CHECK(s.serve(*missing).outcome == Outcome::invalid);
}

TEST_CASE("child process: budget ends silent and chatty engines") {
  Session s;
  s.run.budget_s = 1.0;
  for (const char* mode : {"silent", "churn"}) {
    CAPTURE(mode);
    const auto t0 = std::chrono::steady_clock::now();
    auto child = ChildProcess::spawn(std::string(STUB_ENGINE) + " " + mode);
    const int pid = child->pid();
    const auto rec = s.serve(*child);
    const double took = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(rec.outcome == Outcome::exhausted);
    CHECK(rec.used_s == 1.0);
    CHECK(took < 10.0);
    CHECK(::kill(pid, 0) != 0);
  }
}

TEST_CASE("child process: line reads time out") {
  auto child = ChildProcess::spawn("sleep 5");
  std::string line;
  const auto t0 = std::chrono::steady_clock::now();
  CHECK(child->read_line(line, 0.2) == LineTransport::Status::timeout);
  CHECK(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() < 2.0);
  child->close(0.1);
  auto echo = ChildProcess::spawn("printf 'a\\nb'");
  CHECK(echo->read_line(line, 5.0) == LineTransport::Status::line);
  CHECK(line == "a");
  CHECK(echo->read_line(line, 5.0) == LineTransport::Status::line);
  CHECK(line == "b");
  CHECK(echo->read_line(line, 5.0) == LineTransport::Status::closed);
  CHECK(echo->close() == 0);
}

}  // TEST_SUITE
