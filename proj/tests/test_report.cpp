#include <doctest.h>

#include <json.hpp>

#include "rediscover/record.hpp"
#include "rediscover/report.hpp"
#include "support/paths.hpp"

using namespace rediscover;

namespace {

RunRecord rec(const std::string& id, int k, Outcome o, double used = 10.0, double allotted = 10.0) {
  RunRecord r;
  r.problem_id = id;
  r.run_index = k;
  r.outcome = o;
  r.used_s = used;
  r.allotted_s = allotted;
  if (o == Outcome::discovered) r.form = "v1";
  return r;
}

}  // namespace

TEST_SUITE("report") {

TEST_CASE("record json round trip") {
  RunRecord r = rec("I.6.2a", 3, Outcome::discovered, 4.5, 30.0);
  r.discovered_at_s = 4.25;
  r.potentials = {"(v1*v2)", "v1"};
  r.engine = "toy";
  r.note = "a \"quoted\" note";
  const auto back = record_from_json(to_json(r));
  CHECK(back.problem_id == r.problem_id);
  CHECK(back.run_index == 3);
  CHECK(back.outcome == Outcome::discovered);
  CHECK(*back.form == "v1");
  CHECK(back.discovered_at_s == 4.25);
  CHECK(back.potentials == r.potentials);
  CHECK(back.note == r.note);
  CHECK_FALSE(record_from_json(to_json(rec("x", 1, Outcome::timeout))).form);
  CHECK_THROWS(record_from_json("{}"));
  CHECK_THROWS(outcome_from_name("lost"));
  testing::TempDir tmp("record");
  write_record(tmp.path() / "r.record", r);
  CHECK(read_record(tmp.path() / "r.record")->used_s == 4.5);
  CHECK_FALSE(read_record(tmp.path() / "missing.record"));
}

TEST_CASE("per-problem and category rates") {
  std::vector<RunRecord> rs;
  for (int k = 1; k <= 4; ++k) rs.push_back(rec("A", k, Outcome::discovered));
  rs.push_back(rec("A", 5, Outcome::exhausted));
  const auto r = aggregate(rs, {{"A", Category::easy}});
  CHECK(r.category_rate.at(Category::easy) == doctest::Approx(0.8));
  CHECK(r.overall_rate == doctest::Approx(0.8));
  CHECK(r.category_rate.count(Category::hard) == 0);
  CHECK(format_report(r).find("80.0%") != std::string::npos);
}

TEST_CASE("problem-first versus pooled means") {
  std::vector<RunRecord> rs = {rec("A", 1, Outcome::discovered), rec("B", 1, Outcome::exhausted),
                               rec("B", 2, Outcome::exhausted), rec("B", 3, Outcome::exhausted)};
  const std::vector<ProblemInfo> info = {{"A", Category::medium}, {"B", Category::medium}};
  CHECK(aggregate(rs, info).category_rate.at(Category::medium) == doctest::Approx(0.5));
  AggregateOptions flat;
  flat.flat_mean = true;
  CHECK(aggregate(rs, info, flat).category_rate.at(Category::medium) == doctest::Approx(0.25));
}

TEST_CASE("time saved") {
  const std::vector<ProblemInfo> info = {{"A", Category::easy}};
  CHECK(aggregate({rec("A", 1, Outcome::discovered, 0.0), rec("A", 2, Outcome::discovered, 0.0)}, info)
            .time_saved_fraction == 1.0);
  CHECK(aggregate({rec("A", 1, Outcome::exhausted), rec("A", 2, Outcome::exhausted)}, info).time_saved_fraction ==
        0.0);
  CHECK(aggregate({rec("A", 1, Outcome::discovered, 2.5), rec("A", 2, Outcome::exhausted)}, info)
            .time_saved_fraction == doctest::Approx(0.375));
}

TEST_CASE("exclusions and errors") {
  const std::vector<ProblemInfo> info = {{"A", Category::easy}, {"B4", Category::hard}};
  const auto r = aggregate({rec("A", 1, Outcome::discovered), rec("B4", 1, Outcome::exhausted)}, info);
  CHECK(r.runs == 1);
  CHECK(r.category_rate.count(Category::hard) == 0);
  CHECK(format_report(r).find("Excluded: B4 B11 III.9.52") != std::string::npos);
  CHECK_THROWS(aggregate({}, info));
  CHECK_THROWS(aggregate({rec("Z", 1, Outcome::discovered)}, info));
}

TEST_CASE("rates stay in range and are monotone") {
  Rng rng(77);
  const std::vector<ProblemInfo> info = {{"A", Category::easy}, {"B", Category::medium}, {"C", Category::hard}};
  const char* ids[] = {"A", "B", "C"};
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<RunRecord> rs;
    for (int k = 0; k < 12; ++k) {
      rs.push_back(rec(ids[rng.below(3)], k, static_cast<Outcome>(rng.below(4)), rng.uniform(0, 10), 10.0));
    }
    const auto before = aggregate(rs, info);
    CHECK(before.overall_rate >= 0.0);
    CHECK(before.overall_rate <= 1.0);
    CHECK(before.time_saved_fraction >= 0.0);
    CHECK(before.time_saved_fraction <= 1.0);
    rs.push_back(rec(ids[rng.below(3)], 99, Outcome::discovered, 10.0, 10.0));
    const auto after = aggregate(rs, info);
    CHECK(after.overall_rate >= before.overall_rate - 1e-15);
    for (const auto& [cat, rate] : before.category_rate) CHECK(after.category_rate.at(cat) >= rate - 1e-15);
  }
}

TEST_CASE("json summary") {
  const auto r = aggregate({rec("A", 1, Outcome::discovered)}, {{"A", Category::easy}});
  const auto j = nlohmann::json::parse(report_json(r));
  CHECK(j["category_rate"]["easy"] == 1.0);
  CHECK(j["averaging"] == "problems");
  CHECK(j["problems"][0]["id"] == "A");
}

}  // TEST_SUITE
