#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "rediscover/registry.hpp"
#include "support/paths.hpp"

using namespace rediscover;
using rediscover::testing::data_dir;
using rediscover::testing::TempDir;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

ProblemSpec II_38_14() { return Registry(data_dir()).problem("II.38.14"); }

}  // namespace

TEST_SUITE("registry") {

TEST_CASE("complexity budgets use the ceiling") {
  CHECK(acceptance_cap_for(7) == 9);
  CHECK(search_cap_for(7) == 11);
  CHECK(acceptance_cap_for(10) == 12);
  CHECK(search_cap_for(10) == 15);
  CHECK(acceptance_cap_for(5) == 6);
}

TEST_CASE("bundled II.38.14") {
  const auto p = II_38_14();
  CHECK(p.reference_complexity == 7);
  CHECK(p.acceptance_complexity_cap == 9);
  CHECK(p.max_search_complexity == 11);
  CHECK(p.reference == canonicalize(p.ground_truth));
}

TEST_CASE("bundled I.47.23 comes with its list") {
  const Registry reg(data_dir());
  const auto p = reg.problem("I.47.23");
  const auto list = reg.list("I.47.23");
  CHECK(list.problem_id == "I.47.23");
  CHECK(list.contains("sqrt(((v1*v2)/v3))"));
  CHECK(audit_list(list, p).empty());
}

TEST_CASE("spec validation") {
  const std::string base =
      "id: T.1\ncategory: easy\nexpression: (v1*v2)\nvar: v1 uniform 1 5 positive\nvar: v2 uniform 1 5 positive\n";
  CHECK(parse_problem(base).reference == "(v1*v2)");
  CHECK_THROWS_AS(parse_problem(base + "var: v3 uniform 1 5 positive\n"), SpecError);
  CHECK_THROWS_AS(parse_problem("id: T.1\ncategory: easy\nexpression: (v1*v2)\nvar: v1 uniform 1 5 positive\n"),
                  SpecError);
  CHECK_THROWS_AS(parse_problem(base + "reference: (v2*v1)\n"), SpecError);
  CHECK_THROWS_AS(parse_problem(base + "reference_complexity: 4\n"), SpecError);
  CHECK_THROWS_AS(parse_problem(base + "colour: blue\n"), SpecError);
  CHECK_THROWS_AS(parse_problem("id: T.1\ncategory: easy\nexpression: (v1*v2)\nvar: v1 log-uniform 0 5 positive\n"
                                "var: v2 uniform 1 5 positive\n"),
                  std::exception);
  CHECK_THROWS_AS(parse_problem("id: T.1\ncategory: easy\nexpression: (v1*v2)\nvar: v1 uniform 5 1 positive\n"
                                "var: v2 uniform 1 5 positive\n"),
                  std::exception);
}

TEST_CASE("spec and list files round-trip byte-exactly") {
  const Registry reg(data_dir());
  for (const auto& id : reg.problem_ids()) {
    CAPTURE(id);
    const auto text = slurp(reg.problem_path(id));
    CHECK(format_problem(parse_problem(text)) == text);
    const auto list_text = slurp(reg.list_path(id));
    CHECK(format_list(parse_list(list_text, id)) == list_text);
  }
}

TEST_CASE("store_list replaces the file") {
  TempDir tmp("list");
  AcceptableList list{"II.38.14", {"# test"}, {{"(v1/(2*(1+v2)))", "bundled"}}};
  const auto path = tmp.path() / "x.accept";
  store_list(path, list);
  const auto loaded = load_list(path, "II.38.14");
  CHECK(loaded.forms() == list.forms());
  CHECK(loaded.header == list.header);
  list.entries.push_back({"(v1/(2+(2*v2)))", "merged-from-run c1:II.38.14:run3"});
  store_list(path, list);
  CHECK(load_list(path, "II.38.14").entries.size() == 2);
  CHECK(std::distance(std::filesystem::directory_iterator(tmp.path()), {}) == 1);
}

TEST_CASE("list parsing rejects duplicates") {
  CHECK_THROWS_AS(parse_list("v1 # bundled\nv1 # manual\n", "X"), SpecError);
}

TEST_CASE("match") {
  const Registry reg(data_dir());
  const auto l = reg.list("II.38.14");
  CHECK(match(l, canonicalize(parse("(v1/(2+(2*v2)))"))));
  CHECK_FALSE(match(l, "v1"));
  CHECK(match(reg.list("I.18.4"), canonicalize(parse("((1*((v1*v2)+(v3*v4)))/(v1+v3))"))));
}

TEST_CASE("every ground truth canonicalizes into its list") {
  const Registry reg(data_dir());
  for (const auto& id : reg.problem_ids()) {
    CAPTURE(id);
    CHECK(reg.list(id).contains(canonicalize(reg.problem(id).ground_truth)));
  }
}

TEST_CASE("every bundled list is sound and canonical") {
  const Registry reg(data_dir());
  Rng rng(11);
  for (const auto& id : reg.problem_ids()) {
    CAPTURE(id);
    const auto spec = reg.problem(id);
    const auto list = reg.list(id);
    CHECK_FALSE(list.entries.empty());
    for (const auto& entry : list.entries) {
      CAPTURE(entry.form);
      const auto f = parse(entry.form);
      CHECK(canonicalize(f) == entry.form);
      // Pointwise soundness with the same tolerance as the probe, on the
      // constants the probe fitted inside their rounding intervals.
      const auto r = probe_against_truth(f, spec);
      REQUIRE(r.verdict == ProbeVerdict::equivalent);
      int checked = 0;
      std::vector<double> point(spec.variables.size());
      while (checked < 100) {
        for (std::size_t k = 0; k < point.size(); ++k) point[k] = spec.variables[k].draw(rng);
        const auto t = evaluate(spec.ground_truth, point);
        const auto y = evaluate(r.fitted_a, point);
        if (!t || !y) continue;
        CHECK(std::fabs(*y - *t) <= 1e-8 * (std::fabs(*t) + 1e-100));
        ++checked;
      }
    }
  }
}

TEST_CASE("sampling") {
  const auto p = II_38_14();
  const auto a = sample_dataset(p, Role::train, 5);
  const auto b = sample_dataset(p, Role::train, 5);
  CHECK(a.inputs == b.inputs);
  CHECK(a.targets == b.targets);
  CHECK(a.rows() == 200);
  for (double t : a.targets) CHECK((std::isfinite(t) && t > 0));
  CHECK(sample_dataset(p, Role::train, 6).inputs != a.inputs);
  CHECK_THROWS(sample_dataset(p, Role::train, 5, 0));
  for (std::size_t i = 0; i < a.rows(); ++i) {
    CHECK(*evaluate(p.ground_truth, a.row(i)) == a.targets[i]);
  }
}

TEST_CASE("sampling gives up on a ground truth that is nowhere valid") {
  const auto p = make_problem("T.2", Category::easy, parse("log((-(v1)))"),
                              {SamplingSpec{1, Distribution::uniform, 1.0, 2.0, Sign::positive}});
  CHECK_THROWS_AS(sample_dataset(p, Role::test, 1, 10), SamplingExhausted);
}

TEST_CASE("sampling signs") {
  Rng rng(3);
  SamplingSpec neg{1, Distribution::log_uniform, 1.0, 100.0, Sign::negative};
  SamplingSpec either{1, Distribution::uniform, 1.0, 2.0, Sign::either};
  int negatives = 0;
  for (int i = 0; i < 1000; ++i) {
    const double x = neg.draw(rng);
    CHECK((x <= -1.0 && x >= -100.0));
    if (either.draw(rng) < 0) ++negatives;
  }
  CHECK(negatives > 400);
  CHECK(negatives < 600);
}

TEST_CASE("csv round trip") {
  TempDir tmp("csv");
  const auto d = sample_dataset(II_38_14(), Role::test, 9, 20);
  write_csv(tmp.path() / "d.csv", d);
  const auto text = slurp(tmp.path() / "d.csv");
  CHECK(text.rfind("v1,v2,target\n", 0) == 0);
  const auto back = read_csv(tmp.path() / "d.csv");
  CHECK(back.inputs == d.inputs);
  CHECK(back.targets == d.targets);
  CHECK(back.num_vars == 2);
}

TEST_CASE("merge pipeline") {
  const Registry reg(data_dir());
  const auto spec = II_38_14();
  const auto list = reg.list("II.38.14");
  const std::vector<MergeCandidate> cands = {
      {"((v1*exp(v2))/(exp(v2)*(2+(2*v2))))", "manual"},
      {"(v1/(2+(2*v2)))", "manual"},
      {"(v1/(2+v2))", "manual"},
      {"(v1/(2+", "manual"},
      {"(v1/(2+(2*v2)))", "from somewhere"},
  };
  int asked = 0;
  const auto r = merge_candidates(list, cands, spec, [&](const MergeOutcome&) { ++asked; return true; });
  REQUIRE(r.outcomes.size() == 5);
  // div, v1*exp(v2) (4 nodes), exp(v2)*(2+(2*v2)) (8 nodes)
  CHECK(r.outcomes[0].status == MergeStatus::rejected);
  CHECK(r.outcomes[0].reason == "complexity 13 > cap 9");
  CHECK(r.outcomes[1].status == MergeStatus::duplicate);
  CHECK(r.outcomes[2].status == MergeStatus::rejected);
  CHECK(r.outcomes[2].reason == "probe: not_equivalent");
  CHECK(r.outcomes[3].reason.rfind("parse error", 0) == 0);
  CHECK(r.outcomes[4].reason.rfind("bad provenance", 0) == 0);
  CHECK(r.merged == 0);
  CHECK(asked == 0);
  CHECK(r.list.entries.size() == list.entries.size());
}

TEST_CASE("merge appends an approved alternate form") {
  TempDir tmp("merge");
  std::filesystem::create_directories(tmp.path() / "problems");
  std::filesystem::create_directories(tmp.path() / "lists");
  const Registry bundled(data_dir());
  std::filesystem::copy(bundled.problem_path("I.29.16"), tmp.path() / "problems" / "I.29.16.spec");
  const Registry reg(tmp.path());
  const auto spec = reg.problem("I.29.16");
  AcceptableList start = bundled.list("I.29.16");
  const std::string alt = "sqrt(((v1*(v1-(2*v2*cos((v3-v4)))))+(v2^2)))";
  std::erase_if(start.entries, [&](const ListEntry& e) { return e.form == alt; });
  reg.save_list(start);

  const std::vector<MergeCandidate> cands = {{alt, "merged-from-run c1:I.29.16:run2"}};
  const auto declined = merge_candidates(reg.list("I.29.16"), cands, spec, [](const MergeOutcome&) { return false; });
  CHECK(declined.outcomes[0].status == MergeStatus::declined);
  CHECK(declined.merged == 0);

  const auto r = merge_candidates(reg.list("I.29.16"), cands, spec, [](const MergeOutcome& m) {
    return m.probe.verdict == ProbeVerdict::equivalent;
  });
  REQUIRE(r.merged == 1);
  reg.save_list(r.list);
  const auto after = reg.list("I.29.16");
  CHECK(after.contains(alt));
  CHECK(after.entries.back().provenance == "merged-from-run c1:I.29.16:run2");
  CHECK(after.entries.size() == start.entries.size() + 1);
}

TEST_CASE("registry lookups") {
  const Registry reg(data_dir());
  CHECK(reg.problem_ids().size() == 19);
  CHECK(reg.has("B1"));
  CHECK_FALSE(reg.has("B4"));
  CHECK_THROWS_AS(reg.problem("B4"), UnknownProblem);
  CHECK_THROWS_AS(reg.problem("../x"), UnknownProblem);
  CHECK_THROWS(Registry("/nonexistent"));
}

}  // TEST_SUITE
