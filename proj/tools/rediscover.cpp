#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "rediscover/callback.hpp"
#include "rediscover/canon.hpp"
#include "rediscover/expr.hpp"
#include "rediscover/number_format.hpp"
#include "rediscover/probe.hpp"
#include "rediscover/registry.hpp"
#include "rediscover/report.hpp"
#include "rediscover/rng.hpp"
#include "rediscover/runner.hpp"

namespace fs = std::filesystem;
using namespace rediscover;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

fs::path data_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("REDISCOVER_DATA"); env && *env) return env;
  return REDISCOVER_DATA_DIR;
}

Expression parse_arg(const std::string& text) {
  try {
    return parse(text);
  } catch (const ParseError& e) {
    std::ostringstream msg;
    msg << "malformed expression: " << e.what() << "\n  " << text << "\n  "
        << std::string(std::min(e.offset(), text.size()), ' ') << "^";
    throw UsageError(msg.str());
  }
}

std::string fmt(double v) {
  if (!std::isfinite(v)) return v > 0 ? "inf" : (v < 0 ? "-inf" : "nan");
  return format_constant(v);
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  for (std::string item; std::getline(in, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ground-truth rediscovery harness for symbolic regression"};
  app.require_subcommand(1);
  std::string data;
  app.add_option("--data", data, "Data directory with problems/ and lists/");

  // canon
  auto* canon = app.add_subcommand("canon", "Print the canonical form of an expression");
  std::string canon_expr;
  int digits = 5;
  canon->add_option("expr", canon_expr, "Expression")->required();
  canon->add_option("--digits", digits, "Significant digits kept in constants")->check(CLI::PositiveNumber);

  // check
  auto* check = app.add_subcommand("check", "One early-stop decision for a candidate");
  std::string check_expr, check_problem, check_log;
  std::uint64_t seed = 1;
  int run_index = 1;
  check->add_option("expr", check_expr, "Candidate expression")->required();
  check->add_option("--problem", check_problem, "Problem id")->required();
  check->add_option("--seed", seed, "Campaign seed used for the test data");
  check->add_option("--run", run_index, "Run index used for the test data");
  check->add_option("--log", check_log, "Append events to this file");

  // probe
  auto* probe = app.add_subcommand("probe", "Numeric equivalence probe of two expressions");
  std::string probe_a, probe_b, probe_problem;
  int probe_points = 100;
  probe->add_option("a", probe_a)->required();
  probe->add_option("b", probe_b)->required();
  probe->add_option("--problem", probe_problem, "Problem whose sampling domain is used")->required();
  probe->add_option("--points", probe_points)->check(CLI::Range(2, 1000000));
  probe->add_option("--seed", seed);

  // merge
  auto* merge = app.add_subcommand("merge", "Review recorded candidates and extend a list");
  std::string merge_problem, merge_campaign;
  std::vector<std::string> merge_candidates_text;
  bool merge_yes = false;
  merge->add_option("--problem", merge_problem, "Problem id")->required();
  merge->add_option("--candidate", merge_candidates_text, "Candidate expression (repeatable)");
  merge->add_option("--campaign", merge_campaign, "Take POTENTIAL events from this campaign");
  merge->add_flag("--yes", merge_yes, "Approve every candidate that passes the checks");

  // run
  auto* run = app.add_subcommand("run", "Run a benchmark campaign");
  std::string run_problems, engine = "toy", engine_cmd, campaign;
  int runs = 5, jobs = 8, points = 200;
  double budget = 1800.0, timeout = 10000.0, interval = 15.0;
  bool plant = false, all = false;
  run->add_option("--problems", run_problems, "Comma-separated problem ids");
  run->add_flag("--all", all, "Every bundled problem");
  run->add_option("--runs", runs)->check(CLI::PositiveNumber);
  run->add_option("--budget", budget, "Seconds per run");
  run->add_option("--timeout", timeout, "Seconds per job");
  run->add_option("--jobs", jobs)->check(CLI::PositiveNumber);
  run->add_option("--engine", engine)->check(CLI::IsMember({"toy", "external"}));
  run->add_option("--engine-cmd", engine_cmd, "Shell command of an external engine");
  run->add_option("--campaign", campaign, "Campaign directory")->required();
  run->add_option("--seed", seed);
  run->add_option("--points", points)->check(CLI::PositiveNumber);
  run->add_option("--interval", interval, "Callback interval in seconds");
  run->add_flag("--plant", plant, "Seed the toy engine with the ground truth");

  // report
  auto* report = app.add_subcommand("report", "Aggregate a campaign directory");
  std::string report_dir;
  bool flat = false;
  report->add_option("campaign", report_dir)->required();
  report->add_flag("--flat", flat, "Pool runs instead of averaging per problem");

  // problems
  auto* problems = app.add_subcommand("problems", "List bundled problems");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*canon) {
      CanonConfig cfg;
      cfg.significant_digits = digits;
      std::cout << canonicalize(parse_arg(canon_expr), cfg) << "\n";
      return 0;
    }
    if (*report) {
      AggregateOptions opts;
      opts.flat_mean = flat;
      std::cout << format_report(write_report(report_dir, opts));
      return 0;
    }

    const Registry registry(data_dir(data));
    auto problem = [&](const std::string& id) {
      try {
        return registry.problem(id);
      } catch (const UnknownProblem& e) {
        throw UsageError(e.what());
      }
    };

    if (*problems) {
      for (const auto& id : registry.problem_ids()) {
        const auto p = registry.problem(id);
        std::cout << id << "  " << name(p.category) << "  ref " << p.reference << "  complexity "
                  << p.reference_complexity << "  cap " << p.acceptance_complexity_cap << "  search "
                  << p.max_search_complexity << "  forms " << registry.list(id).entries.size() << "\n";
      }
      return 0;
    }

    if (*check) {
      const auto spec = problem(check_problem);
      const auto list = registry.list(check_problem);
      const Expression e = parse_arg(check_expr);
      const Dataset test =
          sample_dataset(spec, Role::test, derive_seed(seed, spec.id, "test", run_index));
      CallbackConfig cfg;
      std::optional<EventLog> log;
      if (!check_log.empty()) log.emplace(check_log);
      RunContext ctx{&spec, &list, log ? &*log : nullptr, run_index};
      CallbackState state;
      const double d = delta_on(cfg, e, test);
      const Decision decision = check_candidate(e, d, 0.0, cfg, ctx, state);
      if (decision.stop()) {
        std::cout << "STOP " << *decision.matched_form << "\n";
      } else {
        std::cout << "CONTINUE";
        if (decision.report) std::cout << " " << decision.report->canonical;
        if (decision.recorded_potential) std::cout << " (potential form)";
        std::cout << "\n";
      }
      std::cout << "delta " << fmt(d) << "\n";
      return 0;
    }

    if (*probe) {
      const auto spec = problem(probe_problem);
      ProbeConfig cfg;
      cfg.points = probe_points;
      cfg.seed = seed;
      const auto r = probe_equivalence(parse_arg(probe_a), parse_arg(probe_b), spec, cfg);
      std::cout << name(r.verdict);
      if (r.verdict == ProbeVerdict::constant_offset || r.verdict == ProbeVerdict::constant_ratio) {
        std::cout << " k=" << fmt(r.k);
      }
      std::cout << "\nvalid points " << r.valid_points << ", max |a-b| " << fmt(r.max_abs_diff) << ", scale "
                << fmt(r.scale) << "\n";
      if (!r.note.empty()) std::cout << r.note << "\n";
      return 0;
    }

    if (*merge) {
      const auto spec = problem(merge_problem);
      const auto list = registry.list(merge_problem);
      std::vector<MergeCandidate> cands;
      for (const auto& c : merge_candidates_text) cands.push_back({c, "manual"});
      if (!merge_campaign.empty()) {
        const fs::path dir = fs::path(merge_campaign) / merge_problem;
        const std::string tag = fs::path(merge_campaign).filename().string();
        for (const auto& entry : fs::directory_iterator(dir)) {
          if (entry.path().extension() != ".events") continue;
          for (const auto& ev : EventLog(entry.path()).read()) {
            if (ev.kind != EventKind::potential) continue;
            cands.push_back({ev.canonical, "merged-from-run " + tag + ":" + ev.problem_id + ":run" +
                                               std::to_string(ev.run_index)});
          }
        }
      }
      if (cands.empty()) throw UsageError("no candidates: pass --candidate or --campaign");
      const auto result = merge_candidates(list, cands, spec, [&](const MergeOutcome& pending) {
        if (merge_yes) return true;
        std::cout << "candidate " << pending.canonical << " (probe " << name(pending.probe.verdict)
                  << ")\naccept? [y/N] " << std::flush;
        std::string answer;
        if (!std::getline(std::cin, answer)) return false;
        return answer == "y" || answer == "Y" || answer == "yes";
      });
      for (const auto& o : result.outcomes) {
        std::cout << name(o.status) << "  " << (o.canonical.empty() ? o.input : o.canonical);
        if (!o.reason.empty()) std::cout << "  (" << o.reason << ")";
        std::cout << "\n";
      }
      if (result.merged > 0) registry.save_list(result.list);
      std::cout << result.merged << " form(s) added to " << registry.list_path(merge_problem).string() << "\n";
      return 0;
    }

    if (*run) {
      CampaignConfig cfg;
      cfg.problems = all ? registry.problem_ids() : split_csv(run_problems);
      if (cfg.problems.empty()) throw UsageError("pass --problems or --all");
      for (const auto& id : cfg.problems) problem(id);
      cfg.runs_per_problem = runs;
      cfg.per_run_budget_s = budget;
      cfg.per_job_timeout_s = timeout;
      cfg.max_parallel_jobs = jobs;
      cfg.engine = engine == "toy" ? EngineKind::toy : EngineKind::external;
      cfg.engine_command = engine_cmd;
      cfg.seed = seed;
      cfg.points = points;
      cfg.plant = plant;
      cfg.directory = campaign;
      cfg.callback.throttle_interval_s = interval;
      try {
        cfg.validate();
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      const auto result = run_campaign(cfg, registry);
      std::cout << "campaign " << campaign << ": " << result.stats.runs_executed << " run(s) executed, "
                << result.stats.runs_skipped << " skipped, " << result.stats.jobs_killed
                << " job(s) killed\n\n";
      std::cout << format_report(write_report(campaign));
      return 0;
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
