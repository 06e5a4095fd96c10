#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rediscover {

enum class Outcome { discovered, exhausted, timeout, invalid };

std::string_view name(Outcome o);
Outcome outcome_from_name(std::string_view s);

struct RunRecord {
  std::string problem_id;
  int run_index = 1;
  Outcome outcome = Outcome::invalid;
  std::optional<std::string> form;  // matched list entry when discovered
  double discovered_at_s = 0.0;
  double allotted_s = 0.0;
  double used_s = 0.0;
  std::vector<std::string> potentials;
  std::string engine;
  std::string note;
};

// One JSON object.
std::string to_json(const RunRecord& r);
RunRecord record_from_json(std::string_view text);

void write_record(const std::filesystem::path& path, const RunRecord& r);
std::optional<RunRecord> read_record(const std::filesystem::path& path);

}  // namespace rediscover
