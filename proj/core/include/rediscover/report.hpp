#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rediscover/record.hpp"
#include "rediscover/registry.hpp"

namespace rediscover {

struct ProblemInfo {
  std::string id;
  Category category = Category::easy;
};

struct AggregateOptions {
  // Average runs directly instead of per-problem rates first.
  bool flat_mean = false;
  std::vector<std::string> excluded = {"B4", "B11", "III.9.52"};
};

struct ProblemSummary {
  std::string id;
  Category category = Category::easy;
  int runs = 0;
  int discovered = 0;
  int exhausted = 0;
  int timeout = 0;
  int invalid = 0;
  double rate = 0.0;
  double used_s = 0.0;
  double allotted_s = 0.0;
};

struct CampaignReport {
  std::vector<ProblemSummary> problems;
  std::map<Category, double> category_rate;  // categories without problems are absent
  double overall_rate = 0.0;
  double time_saved_fraction = 0.0;
  int runs = 0;
  int discovered = 0;
  int exhausted = 0;
  int timeout = 0;
  int invalid = 0;
  bool flat_mean = false;
  std::vector<std::string> excluded;
};

CampaignReport aggregate(const std::vector<RunRecord>& records, const std::vector<ProblemInfo>& problems,
                         const AggregateOptions& opts = {});

std::string format_report(const CampaignReport& r);
std::string report_json(const CampaignReport& r);

// Problem categories recorded in <campaign>/campaign.manifest.
std::vector<ProblemInfo> manifest_problems(const std::filesystem::path& campaign);

// Aggregates a campaign directory and writes report.txt and report.json.
CampaignReport write_report(const std::filesystem::path& campaign, const AggregateOptions& opts = {});

}  // namespace rediscover
