#include "rediscover/record.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>
#include <stdexcept>
#include <unistd.h>

namespace rediscover {

using nlohmann::json;

std::string_view name(Outcome o) {
  switch (o) {
    case Outcome::discovered: return "discovered";
    case Outcome::exhausted: return "exhausted";
    case Outcome::timeout: return "timeout";
    case Outcome::invalid: return "invalid";
  }
  return "invalid";
}

Outcome outcome_from_name(std::string_view s) {
  if (s == "discovered") return Outcome::discovered;
  if (s == "exhausted") return Outcome::exhausted;
  if (s == "timeout") return Outcome::timeout;
  if (s == "invalid") return Outcome::invalid;
  throw std::invalid_argument("unknown outcome '" + std::string(s) + "'");
}

std::string to_json(const RunRecord& r) {
  json j;
  j["problem_id"] = r.problem_id;
  j["run_index"] = r.run_index;
  j["outcome"] = std::string(name(r.outcome));
  j["form"] = r.form ? json(*r.form) : json(nullptr);
  j["discovered_at_s"] = r.discovered_at_s;
  j["allotted_s"] = r.allotted_s;
  j["used_s"] = r.used_s;
  j["potentials"] = r.potentials;
  j["engine"] = r.engine;
  j["note"] = r.note;
  return j.dump(2);
}

RunRecord record_from_json(std::string_view text) {
  RunRecord r;
  try {
    const json j = json::parse(text);
    r.problem_id = j.at("problem_id").get<std::string>();
    r.run_index = j.at("run_index").get<int>();
    r.outcome = outcome_from_name(j.at("outcome").get<std::string>());
    if (!j.at("form").is_null()) r.form = j.at("form").get<std::string>();
    r.discovered_at_s = j.at("discovered_at_s").get<double>();
    r.allotted_s = j.at("allotted_s").get<double>();
    r.used_s = j.at("used_s").get<double>();
    r.potentials = j.at("potentials").get<std::vector<std::string>>();
    r.engine = j.value("engine", "");
    r.note = j.value("note", "");
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("bad run record: ") + e.what());
  }
  return r;
}

void write_record(const std::filesystem::path& path, const RunRecord& r) {
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << to_json(r) << "\n";
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::optional<RunRecord> read_record(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return record_from_json(ss.str());
}

}  // namespace rediscover
