// Scripted engine for protocol tests.
//
//   stub_engine plant <expr>   offers a wrong candidate, then <expr>, until told to stop
//   stub_engine churn          keeps offering wrong candidates every 100 ms
//   stub_engine malformed      answers the hello with a line that is not JSON
//   stub_engine unknown-op     offers abs(v1) and a valid candidate, then says bye
//   stub_engine silent         reads the hello and never answers
//   stub_engine crash          exits with status 3 after the hello

#include <chrono>
#include <iostream>
#include <string>
#include <thread>

#include "rediscover/protocol.hpp"
#include "rediscover/registry.hpp"

using namespace rediscover;

namespace {

void send(const EngineMessage& m) { std::cout << encode(m) << "\n" << std::flush; }

bool await_decision() {
  std::string line;
  while (std::getline(std::cin, line)) {
    const auto m = decode(line);
    if (const auto* d = std::get_if<DecisionMsg>(&m)) return d->stop;
    if (std::holds_alternative<ByeMsg>(m)) return true;
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: stub_engine <mode> [expr]\n";
    return 64;
  }
  const std::string mode = argv[1];
  std::string line;
  if (!std::getline(std::cin, line)) return 65;
  const auto hello = std::get<HelloMsg>(decode(line));
  const Dataset train = read_csv(hello.train_path);
  if (train.rows() == 0) return 66;

  if (mode == "plant" && argc > 2) {
    for (int round = 0; round < 1000; ++round) {
      const CandidatesMsg c{0.1 * round, {{"(v1+v2)", 0.5}, {argv[2], 0.0}}};
      send(c);
      if (await_decision()) return 0;
    }
    send(ByeMsg{"gave up"});
    return 0;
  }
  if (mode == "churn") {
    for (;;) {
      send(CandidatesMsg{0.0, {{"(v1+v2)", 0.5}}});
      if (await_decision()) return 0;
      std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
  }
  if (mode == "malformed") {
    std::cout << "{not json\n" << std::flush;
    while (std::getline(std::cin, line)) {
    }
    return 0;
  }
  if (mode == "unknown-op") {
    send(CandidatesMsg{0.0, {{"abs(v1)", 0.1}, {"(v1*v2)", 0.2}}});
    await_decision();
    send(ByeMsg{"done"});
    return 0;
  }
  if (mode == "silent") {
    std::this_thread::sleep_for(std::chrono::hours(1));
    return 0;
  }
  if (mode == "crash") return 3;
  std::cerr << "unknown mode " << mode << "\n";
  return 64;
}
