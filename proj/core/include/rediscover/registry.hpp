#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "rediscover/canon.hpp"
#include "rediscover/expr.hpp"
#include "rediscover/probe.hpp"
#include "rediscover/sampling.hpp"

namespace rediscover {

enum class Category { easy, medium, hard };

std::string_view name(Category c);
Category category_from_name(std::string_view s);

// ceil(1.2 * reference) and ceil(1.5 * reference) in integer arithmetic.
int acceptance_cap_for(int reference_complexity);
int search_cap_for(int reference_complexity);

struct ProblemSpec {
  std::string id;
  Category category = Category::easy;
  Expression ground_truth;
  std::vector<SamplingSpec> variables;  // ordered by variable index
  std::string reference;                // canonicalize(ground_truth)
  int reference_complexity = 0;
  int max_search_complexity = 0;
  int acceptance_complexity_cap = 0;
  std::vector<std::string> notes;
};

class SpecError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Fills the derived fields and validates the variable/sampling agreement.
ProblemSpec make_problem(std::string id, Category category, const Expression& ground_truth,
                         std::vector<SamplingSpec> variables, std::vector<std::string> notes = {});

// Spec file: "key: value" lines, '#' comments and blank lines ignored.
//   id, category, expression, var (one per variable:
//   "vK <uniform|log-uniform> <low> <high> <positive|negative|either>"),
//   reference, reference_complexity, acceptance_cap, search_cap, note.
// The derived keys are optional on input; when present they must agree with
// the recomputed values.
ProblemSpec parse_problem(std::string_view text);
std::string format_problem(const ProblemSpec& spec);
ProblemSpec load_problem(const std::filesystem::path& path);
void store_problem(const std::filesystem::path& path, const ProblemSpec& spec);

struct ListEntry {
  std::string form;
  // "bundled", "manual" or "merged-from-run <run-id>".
  std::string provenance;
};

struct AcceptableList {
  std::string problem_id;
  std::vector<std::string> header;  // leading '#' lines, kept verbatim
  std::vector<ListEntry> entries;

  bool contains(std::string_view canonical) const;
  std::vector<std::string> forms() const;
};

// List file: header comment lines, then one "<form> # <provenance>" per line.
AcceptableList parse_list(std::string_view text, std::string problem_id);
std::string format_list(const AcceptableList& list);
AcceptableList load_list(const std::filesystem::path& path, std::string problem_id);
// Writes a temporary file next to `path` and renames it into place.
void store_list(const std::filesystem::path& path, const AcceptableList& list);

// Exact string-set membership.
bool match(const AcceptableList& list, std::string_view canonical);

struct ListIssue {
  std::string form;
  std::string problem;
};

// Checks every stored form: parses, is its own canonical form, fits the
// acceptance cap, and (when probe is set) is equivalent to the ground truth.
std::vector<ListIssue> audit_list(const AcceptableList& list, const ProblemSpec& spec,
                                  const ProbeConfig* probe = nullptr);

// Compares `a` with the ground truth, whose constants are taken as exact.
ProbeResult probe_against_truth(const Expression& a, const ProblemSpec& spec, ProbeConfig cfg = {});

ProbeResult probe_equivalence(const Expression& a, const Expression& b, const ProblemSpec& spec,
                              const ProbeConfig& cfg = {});

enum class Role { train, test };
std::string_view name(Role r);

struct Dataset {
  Role role = Role::train;
  std::uint64_t seed = 0;
  int num_vars = 0;
  std::vector<double> inputs;  // row-major, num_vars values per row (v1..vK)
  std::vector<double> targets;

  std::size_t rows() const { return targets.size(); }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(inputs).subspan(i * static_cast<std::size_t>(num_vars),
                                                   static_cast<std::size_t>(num_vars));
  }
};

class SamplingExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Rows whose target is invalid are redrawn; gives up after 100 * points draws.
Dataset sample_dataset(const ProblemSpec& spec, Role role, std::uint64_t seed, int points = 200);

// CSV with header "v1,...,vK,target" and shortest round-trip numbers.
void write_csv(const std::filesystem::path& path, const Dataset& data);
Dataset read_csv(const std::filesystem::path& path);

struct MergeCandidate {
  std::string text;
  std::string provenance;
};

enum class MergeStatus { merged, duplicate, rejected, inconclusive, declined };
std::string_view name(MergeStatus s);

struct MergeOutcome {
  std::string input;
  std::string canonical;
  MergeStatus status = MergeStatus::rejected;
  std::string reason;
  ProbeResult probe;
};

// Human decision on a candidate that passed every machine check.
using Approval = std::function<bool(const MergeOutcome& pending)>;

struct MergeResult {
  AcceptableList list;
  std::vector<MergeOutcome> outcomes;
  int merged = 0;
};

// Canonicalize, drop duplicates, enforce the acceptance cap, probe against
// the ground truth, then ask `approve`.  Inconclusive probes are never merged.
MergeResult merge_candidates(const AcceptableList& list, std::span<const MergeCandidate> recorded,
                             const ProblemSpec& spec, const Approval& approve,
                             const ProbeConfig& probe = {}, const CanonConfig& canon = {});

class UnknownProblem : public std::runtime_error {
 public:
  explicit UnknownProblem(const std::string& id) : std::runtime_error("unknown problem '" + id + "'") {}
};

// Data directory layout: problems/<id>.spec and lists/<id>.accept.
class Registry {
 public:
  explicit Registry(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  std::vector<std::string> problem_ids() const;
  bool has(const std::string& id) const;
  ProblemSpec problem(const std::string& id) const;
  AcceptableList list(const std::string& id) const;
  std::filesystem::path problem_path(const std::string& id) const;
  std::filesystem::path list_path(const std::string& id) const;
  void save_list(const AcceptableList& list) const;

 private:
  std::filesystem::path root_;
};

}  // namespace rediscover
