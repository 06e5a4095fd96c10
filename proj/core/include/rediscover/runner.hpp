#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "rediscover/callback.hpp"
#include "rediscover/engine.hpp"
#include "rediscover/record.hpp"
#include "rediscover/registry.hpp"

namespace rediscover {

enum class EngineKind { toy, external };
std::string_view name(EngineKind k);

struct CampaignConfig {
  std::vector<std::string> problems;
  int runs_per_problem = 5;
  double per_run_budget_s = 1800.0;
  double per_job_timeout_s = 10000.0;
  int max_parallel_jobs = 8;
  EngineKind engine = EngineKind::toy;
  std::string engine_command;
  std::uint64_t seed = 1;
  int points = 200;
  // Inject each problem's ground truth into the toy engine's population.
  bool plant = false;
  std::filesystem::path directory;
  CallbackConfig callback;
  GPConfig gp;  // seed, plant, budget and tick interval are set per run

  void validate() const;
};

struct SchedulerStats {
  int max_concurrent = 0;
  int jobs_started = 0;
  int jobs_killed = 0;
  int runs_executed = 0;
  int runs_skipped = 0;
};

struct CampaignResult {
  std::vector<RunRecord> records;
  SchedulerStats stats;
};

std::filesystem::path run_events_path(const std::filesystem::path& campaign, const std::string& id, int run);
std::filesystem::path run_record_path(const std::filesystem::path& campaign, const std::string& id, int run);

// One search run in the calling process.  Writes the event log and returns
// the record (the caller persists it).
RunRecord run_single(const ProblemSpec& spec, const AcceptableList& list, const CampaignConfig& cfg,
                     int run_index);

// One child process per problem (its runs sequential), at most
// max_parallel_jobs at a time.  Runs that already have a record are skipped.
CampaignResult run_campaign(const CampaignConfig& cfg, const Registry& registry);

// Every run record below a campaign directory, ordered by problem and run.
std::vector<RunRecord> load_records(const std::filesystem::path& campaign);

}  // namespace rediscover
