#include "rediscover/protocol.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <json.hpp>
#include <limits>

namespace rediscover {

using nlohmann::json;

namespace {

template <class T>
T field(const json& j, const char* key) {
  if (!j.contains(key)) throw ProtocolError(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ProtocolError(std::string("field '") + key + "' has the wrong type");
  }
}

}  // namespace

std::string encode(const EngineMessage& m) {
  json j;
  if (const auto* h = std::get_if<HelloMsg>(&m)) {
    j = {{"type", "hello"},         {"problem_id", h->problem_id}, {"function_set", h->function_set},
         {"max_complexity", h->max_complexity}, {"budget_s", h->budget_s},
         {"train_path", h->train_path}, {"test_path", h->test_path}};
  } else if (const auto* c = std::get_if<CandidatesMsg>(&m)) {
    json exprs = json::array();
    for (const auto& e : c->exprs) {
      exprs.push_back({{"expr", e.expr}, {"loss", std::isfinite(e.loss) ? json(e.loss) : json(nullptr)}});
    }
    j = {{"type", "candidates"}, {"run_elapsed_s", c->run_elapsed_s}, {"exprs", exprs}};
  } else if (const auto* d = std::get_if<DecisionMsg>(&m)) {
    j = {{"type", "decision"}, {"stop", d->stop}};
  } else {
    j = {{"type", "bye"}, {"reason", std::get<ByeMsg>(m).reason}};
  }
  return j.dump();
}

EngineMessage decode(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("not JSON: ") + e.what());
  }
  if (!j.is_object()) throw ProtocolError("message is not an object");
  const auto type = field<std::string>(j, "type");
  if (type == "hello") {
    HelloMsg h;
    h.problem_id = field<std::string>(j, "problem_id");
    h.function_set = field<std::vector<std::string>>(j, "function_set");
    h.max_complexity = field<int>(j, "max_complexity");
    h.budget_s = field<double>(j, "budget_s");
    h.train_path = field<std::string>(j, "train_path");
    h.test_path = field<std::string>(j, "test_path");
    return h;
  }
  if (type == "candidates") {
    CandidatesMsg c;
    c.run_elapsed_s = field<double>(j, "run_elapsed_s");
    if (!j.contains("exprs") || !j["exprs"].is_array()) throw ProtocolError("'exprs' must be an array");
    for (const auto& e : j["exprs"]) {
      if (!e.is_object()) throw ProtocolError("'exprs' entries must be objects");
      CandidateEntry entry;
      entry.expr = field<std::string>(e, "expr");
      if (!e.contains("loss")) throw ProtocolError("missing field 'loss'");
      entry.loss = e["loss"].is_null() ? std::numeric_limits<double>::infinity() : field<double>(e, "loss");
      c.exprs.push_back(std::move(entry));
    }
    return c;
  }
  if (type == "decision") return DecisionMsg{field<bool>(j, "stop")};
  if (type == "bye") return ByeMsg{field<std::string>(j, "reason")};
  throw ProtocolError("unknown message type '" + type + "'");
}

std::vector<std::string> function_set_names(const std::vector<Operator>& ops) {
  std::vector<std::string> out;
  for (Operator op : ops) out.emplace_back(name(op));
  return out;
}

LineTransport::Status MemoryTransport::read_line(std::string& out, double) {
  if (incoming.empty()) return Status::closed;
  out = std::move(incoming.front());
  incoming.pop_front();
  return Status::line;
}

bool MemoryTransport::write_line(std::string_view line) {
  written.emplace_back(line);
  return true;
}

std::optional<int> MemoryTransport::close() { return std::nullopt; }

RunRecord serve_external(const ProblemSpec& spec, const Dataset& test, const CallbackConfig& cfg,
                         const RunContext& ctx, LineTransport& transport,
                         const ExternalRunConfig& run) {
  RunRecord rec;
  rec.problem_id = spec.id;
  rec.run_index = ctx.run_index;
  rec.allotted_s = run.budget_s;
  rec.engine = "external";

  EarlyStopCallback callback(cfg, ctx, test);
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };
  std::vector<std::string> skipped;
  bool closed = false;

  auto finish = [&](Outcome outcome, std::string note) {
    rec.outcome = outcome;
    rec.used_s = std::min(elapsed(), run.budget_s);
    rec.note = std::move(note);
    if (!skipped.empty()) {
      if (!rec.note.empty()) rec.note += "; ";
      rec.note += "skipped " + std::to_string(skipped.size()) + " candidate(s): " + skipped.front();
    }
  };

  HelloMsg hello;
  hello.problem_id = spec.id;
  hello.function_set = run.function_set;
  hello.max_complexity = run.max_complexity > 0 ? run.max_complexity : spec.max_search_complexity;
  hello.budget_s = run.budget_s;
  hello.train_path = run.train_path;
  hello.test_path = run.test_path;

  if (!transport.write_line(encode(hello))) {
    finish(Outcome::invalid, "engine did not accept the hello message");
  } else {
    for (;;) {
      const double remaining = run.budget_s - elapsed();
      if (remaining <= 0.0) {
        transport.write_line(encode(ByeMsg{"budget exhausted"}));
        finish(Outcome::exhausted, "budget exhausted");
        rec.used_s = run.budget_s;
        break;
      }
      std::string line;
      const auto status = transport.read_line(line, remaining);
      if (status == LineTransport::Status::timeout) continue;
      if (status == LineTransport::Status::closed) {
        const auto code = transport.close();
        closed = true;
        if (code && *code != 0) {
          finish(Outcome::invalid, "engine exited with status " + std::to_string(*code));
        } else {
          finish(Outcome::exhausted, "engine closed the stream");
        }
        break;
      }
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      EngineMessage msg;
      try {
        msg = decode(line);
      } catch (const ProtocolError& e) {
        transport.write_line(encode(ByeMsg{std::string("malformed message: ") + e.what()}));
        finish(Outcome::invalid, std::string("malformed message: ") + e.what());
        break;
      }
      if (const auto* bye = std::get_if<ByeMsg>(&msg)) {
        finish(Outcome::exhausted, "engine said bye: " + bye->reason);
        break;
      }
      const auto* cands = std::get_if<CandidatesMsg>(&msg);
      if (!cands) {
        const char* what = std::holds_alternative<HelloMsg>(msg) ? "hello" : "decision";
        transport.write_line(encode(ByeMsg{std::string("unexpected ") + what + " message"}));
        finish(Outcome::invalid, std::string("unexpected ") + what + " message from engine");
        break;
      }
      std::optional<Decision> accepted;
      for (const auto& entry : cands->exprs) {
        Expression e;
        try {
          e = parse(entry.expr);
        } catch (const ParseError& err) {
          skipped.push_back(entry.expr + " (" + err.what() + ")");
          continue;
        }
        Decision d = callback.check(e, elapsed());
        if (d.stop()) {
          accepted = std::move(d);
          break;
        }
      }
      transport.write_line(encode(DecisionMsg{accepted.has_value()}));
      if (accepted) {
        transport.write_line(encode(ByeMsg{"discovered"}));
        finish(Outcome::discovered, "");
        rec.form = accepted->matched_form;
        rec.discovered_at_s = accepted->report ? accepted->report->timestamp_s : rec.used_s;
        break;
      }
    }
  }
  rec.potentials = callback.state().potential_order;
  if (!closed) transport.close();
  return rec;
}

}  // namespace rediscover
