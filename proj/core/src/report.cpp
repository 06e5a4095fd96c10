#include "rediscover/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <stdexcept>

#include "rediscover/runner.hpp"

namespace rediscover {

namespace {

std::string percent(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", 100.0 * x);
  return buf;
}

}  // namespace

CampaignReport aggregate(const std::vector<RunRecord>& records, const std::vector<ProblemInfo>& problems,
                         const AggregateOptions& opts) {
  if (records.empty()) throw std::invalid_argument("no run records to aggregate");
  CampaignReport rep;
  rep.flat_mean = opts.flat_mean;
  rep.excluded = opts.excluded;

  std::map<std::string, ProblemSummary> by_id;
  for (const auto& p : problems) {
    auto& s = by_id[p.id];
    s.id = p.id;
    s.category = p.category;
  }
  double used = 0.0, allotted = 0.0;
  for (const auto& r : records) {
    const auto it = by_id.find(r.problem_id);
    if (it == by_id.end()) throw std::invalid_argument("record for unknown problem '" + r.problem_id + "'");
    if (std::find(opts.excluded.begin(), opts.excluded.end(), r.problem_id) != opts.excluded.end()) continue;
    auto& s = it->second;
    ++s.runs;
    switch (r.outcome) {
      case Outcome::discovered: ++s.discovered; break;
      case Outcome::exhausted: ++s.exhausted; break;
      case Outcome::timeout: ++s.timeout; break;
      case Outcome::invalid: ++s.invalid; break;
    }
    s.used_s += r.used_s;
    s.allotted_s += r.allotted_s;
    used += r.used_s;
    allotted += r.allotted_s;
  }

  std::map<Category, std::pair<double, int>> sums;
  std::map<Category, std::pair<int, int>> flat;
  double overall = 0.0;
  int counted = 0, flat_d = 0, flat_n = 0;
  for (auto& [id, s] : by_id) {
    if (s.runs == 0) continue;
    s.rate = static_cast<double>(s.discovered) / s.runs;
    sums[s.category].first += s.rate;
    ++sums[s.category].second;
    flat[s.category].first += s.discovered;
    flat[s.category].second += s.runs;
    overall += s.rate;
    ++counted;
    flat_d += s.discovered;
    flat_n += s.runs;
    rep.runs += s.runs;
    rep.discovered += s.discovered;
    rep.exhausted += s.exhausted;
    rep.timeout += s.timeout;
    rep.invalid += s.invalid;
    rep.problems.push_back(s);
  }
  if (counted == 0) throw std::invalid_argument("every record belongs to an excluded problem");
  for (const auto& [cat, v] : sums) {
    rep.category_rate[cat] = opts.flat_mean ? static_cast<double>(flat[cat].first) / flat[cat].second
                                            : v.first / v.second;
  }
  rep.overall_rate = opts.flat_mean ? static_cast<double>(flat_d) / flat_n : overall / counted;
  rep.time_saved_fraction = allotted > 0.0 ? std::clamp(1.0 - used / allotted, 0.0, 1.0) : 0.0;
  return rep;
}

std::string format_report(const CampaignReport& r) {
  std::ostringstream out;
  out << "Rediscovery rate (" << (r.flat_mean ? "pooled over runs" : "mean over problems") << ")\n";
  char line[160];
  std::snprintf(line, sizeof line, "  %-8s %8s\n", "category", "rate");
  out << line;
  for (Category c : {Category::easy, Category::medium, Category::hard}) {
    const auto it = r.category_rate.find(c);
    std::snprintf(line, sizeof line, "  %-8s %8s\n", std::string(name(c)).c_str(),
                  it == r.category_rate.end() ? "-" : percent(it->second).c_str());
    out << line;
  }
  std::snprintf(line, sizeof line, "  %-8s %8s\n", "overall", percent(r.overall_rate).c_str());
  out << line;
  out << "Time saved: " << percent(r.time_saved_fraction) << "\n";
  out << "Runs: " << r.runs << " (discovered " << r.discovered << ", exhausted " << r.exhausted
      << ", timeout " << r.timeout << ", invalid " << r.invalid << ")\n";
  if (!r.excluded.empty()) {
    out << "Excluded:";
    for (const auto& id : r.excluded) out << ' ' << id;
    out << "\n";
  }
  out << "\n";
  std::snprintf(line, sizeof line, "  %-12s %-7s %5s %5s %5s %5s %5s %8s\n", "problem", "cat", "runs",
                "disc", "exh", "tout", "inv", "rate");
  out << line;
  for (const auto& p : r.problems) {
    std::snprintf(line, sizeof line, "  %-12s %-7s %5d %5d %5d %5d %5d %8s\n", p.id.c_str(),
                  std::string(name(p.category)).c_str(), p.runs, p.discovered, p.exhausted, p.timeout,
                  p.invalid, percent(p.rate).c_str());
    out << line;
  }
  return out.str();
}

std::string report_json(const CampaignReport& r) {
  nlohmann::json cats = nlohmann::json::object();
  for (const auto& [c, v] : r.category_rate) cats[std::string(name(c))] = v;
  nlohmann::json probs = nlohmann::json::array();
  for (const auto& p : r.problems) {
    probs.push_back({{"id", p.id},
                     {"category", std::string(name(p.category))},
                     {"runs", p.runs},
                     {"discovered", p.discovered},
                     {"exhausted", p.exhausted},
                     {"timeout", p.timeout},
                     {"invalid", p.invalid},
                     {"rate", p.rate},
                     {"used_s", p.used_s},
                     {"allotted_s", p.allotted_s}});
  }
  nlohmann::json j = {{"category_rate", cats},
                      {"overall_rate", r.overall_rate},
                      {"time_saved_fraction", r.time_saved_fraction},
                      {"runs", r.runs},
                      {"discovered", r.discovered},
                      {"exhausted", r.exhausted},
                      {"timeout", r.timeout},
                      {"invalid", r.invalid},
                      {"averaging", r.flat_mean ? "runs" : "problems"},
                      {"excluded", r.excluded},
                      {"problems", probs}};
  return j.dump(2);
}

std::vector<ProblemInfo> manifest_problems(const std::filesystem::path& campaign) {
  std::ifstream in(campaign / "campaign.manifest");
  if (!in) throw std::runtime_error("no campaign.manifest in " + campaign.string());
  std::vector<ProblemInfo> out;
  try {
    const auto j = nlohmann::json::parse(in);
    for (const auto& p : j.at("problems")) {
      out.push_back({p.at("id").get<std::string>(), category_from_name(p.at("category").get<std::string>())});
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("bad campaign.manifest: ") + e.what());
  }
  return out;
}

CampaignReport write_report(const std::filesystem::path& campaign, const AggregateOptions& opts) {
  const CampaignReport rep = aggregate(load_records(campaign), manifest_problems(campaign), opts);
  std::ofstream(campaign / "report.txt") << format_report(rep);
  std::ofstream(campaign / "report.json") << report_json(rep) << "\n";
  return rep;
}

}  // namespace rediscover
