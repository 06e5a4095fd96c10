#include "rediscover/runner.hpp"

#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <stdexcept>
#include <thread>

#include "rediscover/protocol.hpp"
#include "rediscover/rng.hpp"

namespace rediscover {
namespace fs = std::filesystem;

std::string_view name(EngineKind k) { return k == EngineKind::toy ? "toy" : "external"; }

void CampaignConfig::validate() const {
  if (problems.empty()) throw std::invalid_argument("campaign has no problems");
  if (runs_per_problem < 1) throw std::invalid_argument("runs_per_problem must be >= 1");
  if (!(per_run_budget_s > 0.0)) throw std::invalid_argument("per-run budget must be > 0");
  if (per_job_timeout_s < per_run_budget_s) {
    throw std::invalid_argument("per-job timeout must be at least the per-run budget");
  }
  if (max_parallel_jobs < 1) throw std::invalid_argument("max_parallel_jobs must be >= 1");
  if (engine == EngineKind::external && engine_command.empty()) {
    throw std::invalid_argument("external engine needs a command");
  }
  if (points < 1) throw std::invalid_argument("points must be >= 1");
  if (directory.empty()) throw std::invalid_argument("campaign directory not set");
  callback.validate();
}

fs::path run_events_path(const fs::path& campaign, const std::string& id, int run) {
  return campaign / id / ("run" + std::to_string(run) + ".events");
}

fs::path run_record_path(const fs::path& campaign, const std::string& id, int run) {
  return campaign / id / ("run" + std::to_string(run) + ".record");
}

RunRecord run_single(const ProblemSpec& spec, const AcceptableList& list, const CampaignConfig& cfg,
                     int run_index) {
  const fs::path dir = cfg.directory / spec.id;
  fs::create_directories(dir);
  const Dataset train =
      sample_dataset(spec, Role::train, derive_seed(cfg.seed, spec.id, "train", run_index), cfg.points);
  const Dataset test =
      sample_dataset(spec, Role::test, derive_seed(cfg.seed, spec.id, "test", run_index), cfg.points);
  const EventLog log(run_events_path(cfg.directory, spec.id, run_index));
  RunContext ctx{&spec, &list, &log, run_index};

  if (cfg.engine == EngineKind::external) {
    const fs::path stem = dir / ("run" + std::to_string(run_index));
    ExternalRunConfig ext;
    ext.budget_s = cfg.per_run_budget_s;
    ext.max_complexity = spec.max_search_complexity;
    ext.function_set = function_set_names(cfg.gp.operators);
    ext.train_path = fs::absolute(stem).string() + ".train.csv";
    ext.test_path = fs::absolute(stem).string() + ".test.csv";
    write_csv(ext.train_path, train);
    write_csv(ext.test_path, test);
    std::unique_ptr<ChildProcess> child;
    try {
      child = ChildProcess::spawn(cfg.engine_command);
    } catch (const std::exception& e) {
      RunRecord rec;
      rec.problem_id = spec.id;
      rec.run_index = run_index;
      rec.outcome = Outcome::invalid;
      rec.allotted_s = cfg.per_run_budget_s;
      rec.engine = "external";
      rec.note = std::string("engine spawn failed: ") + e.what();
      return rec;
    }
    RunRecord rec = serve_external(spec, test, cfg.callback, ctx, *child, ext);
    rec.engine = "external: " + cfg.engine_command;
    return rec;
  }

  GPConfig gp = cfg.gp;
  gp.seed = derive_seed(cfg.seed, spec.id, "engine", run_index);
  gp.budget_s = cfg.per_run_budget_s;
  gp.tick_interval_s = cfg.callback.throttle_interval_s;
  if (cfg.plant) gp.plant = spec.ground_truth;

  EarlyStopCallback callback(cfg.callback, ctx, test);
  std::optional<Decision> stop;
  double stop_at = 0.0;
  const GPResult result = run_toy_gp(spec, train, gp, [&](const HallOfFame& hall, double now) {
    const auto members = hall.members();
    Decision d = callback.check_all(members, now);
    if (d.stop()) {
      stop = std::move(d);
      stop_at = now;
      return true;
    }
    return false;
  });

  RunRecord rec;
  rec.problem_id = spec.id;
  rec.run_index = run_index;
  rec.allotted_s = cfg.per_run_budget_s;
  rec.engine = "toy";
  rec.potentials = callback.state().potential_order;
  if (result.reason == Termination::early_stop && stop) {
    rec.outcome = Outcome::discovered;
    rec.form = stop->matched_form;
    rec.discovered_at_s = stop_at;
    rec.used_s = std::min(result.elapsed_s, cfg.per_run_budget_s);
  } else {
    rec.outcome = Outcome::exhausted;
    rec.used_s = std::min(result.elapsed_s, cfg.per_run_budget_s);
    rec.note = std::string(name(result.reason)) + " after " + std::to_string(result.generations) +
               " generations";
  }
  if (callback.state().failures > 0) {
    if (!rec.note.empty()) rec.note += "; ";
    rec.note += std::to_string(callback.state().failures) + " callback failure(s): " +
                callback.state().last_failure;
  }
  return rec;
}

namespace {

void write_manifest(const CampaignConfig& cfg, const Registry& registry) {
  nlohmann::json problems = nlohmann::json::array();
  for (const auto& id : cfg.problems) {
    problems.push_back({{"id", id}, {"category", std::string(name(registry.problem(id).category))}});
  }
  nlohmann::json j = {{"problems", problems},
                      {"runs_per_problem", cfg.runs_per_problem},
                      {"per_run_budget_s", cfg.per_run_budget_s},
                      {"per_job_timeout_s", cfg.per_job_timeout_s},
                      {"max_parallel_jobs", cfg.max_parallel_jobs},
                      {"engine", std::string(name(cfg.engine))},
                      {"engine_command", cfg.engine_command},
                      {"seed", cfg.seed},
                      {"points", cfg.points},
                      {"plant", cfg.plant},
                      {"data", registry.root().string()}};
  const fs::path path = cfg.directory / "campaign.manifest";
  const fs::path tmp = cfg.directory / "campaign.manifest.tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << j.dump(2) << "\n";
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

[[noreturn]] void job_main(const CampaignConfig& cfg, const ProblemSpec& spec,
                           const AcceptableList& list) {
  int failures = 0;
  for (int k = 1; k <= cfg.runs_per_problem; ++k) {
    const auto path = run_record_path(cfg.directory, spec.id, k);
    if (fs::exists(path)) continue;
    RunRecord rec;
    try {
      rec = run_single(spec, list, cfg, k);
    } catch (const std::exception& e) {
      rec.problem_id = spec.id;
      rec.run_index = k;
      rec.outcome = Outcome::invalid;
      rec.allotted_s = cfg.per_run_budget_s;
      rec.note = e.what();
      ++failures;
    }
    try {
      write_record(path, rec);
    } catch (const std::exception&) {
      ++failures;
    }
  }
  std::fflush(nullptr);
  ::_exit(failures == 0 ? 0 : 1);
}

struct Job {
  std::string id;
  pid_t pid = -1;
  std::chrono::steady_clock::time_point started;
  bool killed = false;
};

}  // namespace

CampaignResult run_campaign(const CampaignConfig& cfg, const Registry& registry) {
  cfg.validate();
  fs::create_directories(cfg.directory);
  CampaignResult result;

  struct Pending {
    ProblemSpec spec;
    AcceptableList list;
  };
  std::vector<Pending> pending;
  std::vector<std::pair<std::string, int>> fresh;
  for (const auto& id : cfg.problems) {
    ProblemSpec spec = registry.problem(id);
    AcceptableList list = registry.list(id);
    fs::create_directories(cfg.directory / id);
    bool missing = false;
    for (int k = 1; k <= cfg.runs_per_problem; ++k) {
      if (fs::exists(run_record_path(cfg.directory, id, k))) {
        ++result.stats.runs_skipped;
      } else {
        missing = true;
        fresh.emplace_back(id, k);
      }
    }
    if (missing) pending.push_back({std::move(spec), std::move(list)});
  }
  write_manifest(cfg, registry);

  std::vector<Job> running;
  std::size_t next = 0;
  auto close_job = [&](const Job& job, int status) {
    for (int k = 1; k <= cfg.runs_per_problem; ++k) {
      const auto path = run_record_path(cfg.directory, job.id, k);
      if (fs::exists(path)) continue;
      RunRecord rec;
      rec.problem_id = job.id;
      rec.run_index = k;
      rec.allotted_s = cfg.per_run_budget_s;
      if (job.killed) {
        rec.outcome = Outcome::timeout;
        rec.used_s = cfg.per_run_budget_s;
        rec.note = "job killed after the per-job timeout";
      } else {
        rec.outcome = Outcome::invalid;
        rec.note = "job ended without a record (status " + std::to_string(status) + ")";
      }
      write_record(path, rec);
    }
  };

  std::fflush(nullptr);
  while (next < pending.size() || !running.empty()) {
    while (next < pending.size() && static_cast<int>(running.size()) < cfg.max_parallel_jobs) {
      const Pending& p = pending[next++];
      const pid_t pid = ::fork();
      if (pid < 0) throw std::runtime_error("fork failed");
      if (pid == 0) {
        ::setpgid(0, 0);
        job_main(cfg, p.spec, p.list);
      }
      ::setpgid(pid, pid);
      running.push_back({p.spec.id, pid, std::chrono::steady_clock::now(), false});
      ++result.stats.jobs_started;
      result.stats.max_concurrent = std::max(result.stats.max_concurrent, static_cast<int>(running.size()));
    }
    for (auto it = running.begin(); it != running.end();) {
      int status = 0;
      const pid_t r = ::waitpid(it->pid, &status, WNOHANG);
      if (r == it->pid) {
        ::kill(-it->pid, SIGKILL);
        close_job(*it, WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status));
        it = running.erase(it);
        continue;
      }
      const double age = std::chrono::duration<double>(std::chrono::steady_clock::now() - it->started).count();
      if (!it->killed && age > cfg.per_job_timeout_s) {
        ::kill(-it->pid, SIGKILL);
        it->killed = true;
        ++result.stats.jobs_killed;
      }
      ++it;
    }
    if (!running.empty()) std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }

  for (const auto& id : cfg.problems) {
    for (int k = 1; k <= cfg.runs_per_problem; ++k) {
      if (auto rec = read_record(run_record_path(cfg.directory, id, k))) {
        result.records.push_back(std::move(*rec));
      }
    }
  }
  for (const auto& [id, k] : fresh) {
    if (fs::exists(run_record_path(cfg.directory, id, k))) ++result.stats.runs_executed;
  }
  return result;
}

std::vector<RunRecord> load_records(const fs::path& campaign) {
  std::vector<RunRecord> out;
  if (!fs::is_directory(campaign)) throw std::runtime_error("no campaign directory " + campaign.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(campaign)) {
    if (entry.is_regular_file() && entry.path().extension() == ".record") files.push_back(entry.path());
  }
  for (const auto& f : files) {
    if (auto rec = read_record(f)) out.push_back(std::move(*rec));
  }
  std::sort(out.begin(), out.end(), [](const RunRecord& a, const RunRecord& b) {
    return a.problem_id != b.problem_id ? a.problem_id < b.problem_id : a.run_index < b.run_index;
  });
  return out;
}

}  // namespace rediscover
