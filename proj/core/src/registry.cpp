#include "rediscover/registry.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unistd.h>

#include "rediscover/number_format.hpp"
#include "rediscover/program.hpp"
#include "rediscover/rng.hpp"

namespace rediscover {
namespace fs = std::filesystem;

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    lines.push_back(text.substr(0, nl));
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
  return lines;
}

std::vector<std::string> split_words(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw std::runtime_error("cannot replace " + path.string() + ": " + ec.message());
  }
}

int parse_int(std::string_view s, const std::string& what) {
  int v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw SpecError("bad integer for " + what);
  return v;
}

double parse_number(const std::string& s, const std::string& what) {
  const auto v = parse_constant(s);
  if (!v) throw SpecError("bad number '" + s + "' for " + what);
  return *v;
}

bool valid_provenance(std::string_view p) {
  if (p == "bundled" || p == "manual") return true;
  constexpr std::string_view merged = "merged-from-run ";
  return p.size() > merged.size() && p.substr(0, merged.size()) == merged &&
         p.find(' ', merged.size()) == std::string_view::npos;
}

}  // namespace

std::string_view name(Category c) {
  switch (c) {
    case Category::easy: return "easy";
    case Category::medium: return "medium";
    case Category::hard: return "hard";
  }
  return "easy";
}

Category category_from_name(std::string_view s) {
  if (s == "easy") return Category::easy;
  if (s == "medium") return Category::medium;
  if (s == "hard") return Category::hard;
  throw SpecError("unknown category '" + std::string(s) + "'");
}

int acceptance_cap_for(int r) { return (6 * r + 4) / 5; }
int search_cap_for(int r) { return (3 * r + 1) / 2; }

ProblemSpec make_problem(std::string id, Category category, const Expression& ground_truth,
                         std::vector<SamplingSpec> vars, std::vector<std::string> notes) {
  if (id.empty() || id.find_first_of(" \t/#") != std::string::npos) {
    throw SpecError("invalid problem id '" + id + "'");
  }
  std::sort(vars.begin(), vars.end(),
            [](const SamplingSpec& a, const SamplingSpec& b) { return a.variable < b.variable; });
  for (std::size_t i = 0; i < vars.size(); ++i) {
    try {
      vars[i].validate();
    } catch (const std::invalid_argument& e) {
      throw SpecError(id + ": " + e.what());
    }
    if (vars[i].variable != static_cast<int>(i) + 1) {
      throw SpecError(id + ": sampled variables must be v1..vK without gaps or repeats");
    }
  }
  const auto used = variables(ground_truth);
  for (const auto& s : vars) {
    if (!std::binary_search(used.begin(), used.end(), s.variable)) {
      throw SpecError(id + ": v" + std::to_string(s.variable) + " is sampled but unused");
    }
  }
  for (int v : used) {
    if (v > static_cast<int>(vars.size())) {
      throw SpecError(id + ": v" + std::to_string(v) + " has no sampling spec");
    }
  }
  ProblemSpec p;
  p.id = std::move(id);
  p.category = category;
  p.ground_truth = ground_truth;
  p.variables = std::move(vars);
  p.reference = canonicalize(ground_truth);
  p.reference_complexity = complexity(parse(p.reference));
  p.acceptance_complexity_cap = acceptance_cap_for(p.reference_complexity);
  p.max_search_complexity = search_cap_for(p.reference_complexity);
  p.notes = std::move(notes);
  return p;
}

ProblemSpec parse_problem(std::string_view text) {
  std::string id, category, expression, reference;
  int ref_cx = -1, acc_cap = -1, search_cap = -1;
  std::vector<SamplingSpec> vars;
  std::vector<std::string> notes;
  int lineno = 0;
  for (auto raw : split_lines(text)) {
    ++lineno;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) {
      throw SpecError("line " + std::to_string(lineno) + ": expected 'key: value'");
    }
    const std::string key(trim(line.substr(0, colon)));
    const std::string value(trim(line.substr(colon + 1)));
    if (key == "id") {
      id = value;
    } else if (key == "category") {
      category = value;
    } else if (key == "expression") {
      expression = value;
    } else if (key == "reference") {
      reference = value;
    } else if (key == "reference_complexity") {
      ref_cx = parse_int(value, key);
    } else if (key == "acceptance_cap") {
      acc_cap = parse_int(value, key);
    } else if (key == "search_cap") {
      search_cap = parse_int(value, key);
    } else if (key == "note") {
      notes.push_back(value);
    } else if (key == "var") {
      const auto w = split_words(value);
      if (w.size() != 5 || w[0].size() < 2 || w[0][0] != 'v') {
        throw SpecError("line " + std::to_string(lineno) +
                        ": expected 'var: vK <distribution> <low> <high> <sign>'");
      }
      SamplingSpec s;
      s.variable = parse_int(std::string_view(w[0]).substr(1), "variable index");
      try {
        s.distribution = distribution_from_name(w[1]);
        s.sign = sign_from_name(w[4]);
      } catch (const std::invalid_argument& e) {
        throw SpecError("line " + std::to_string(lineno) + ": " + e.what());
      }
      s.low = parse_number(w[2], w[0] + " low");
      s.high = parse_number(w[3], w[0] + " high");
      vars.push_back(s);
    } else {
      throw SpecError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
  if (id.empty()) throw SpecError("missing id");
  if (category.empty()) throw SpecError(id + ": missing category");
  if (expression.empty()) throw SpecError(id + ": missing expression");
  Expression gt;
  try {
    gt = parse(expression);
  } catch (const ParseError& e) {
    throw SpecError(id + ": expression: " + e.what());
  }
  ProblemSpec p = make_problem(id, category_from_name(category), gt, std::move(vars), std::move(notes));
  if (!reference.empty() && reference != p.reference) {
    throw SpecError(id + ": stored reference " + reference + " differs from recomputed " + p.reference);
  }
  auto check = [&](int stored, int actual, const char* what) {
    if (stored >= 0 && stored != actual) {
      throw SpecError(id + ": stored " + what + " " + std::to_string(stored) +
                      " differs from recomputed " + std::to_string(actual));
    }
  };
  check(ref_cx, p.reference_complexity, "reference_complexity");
  check(acc_cap, p.acceptance_complexity_cap, "acceptance_cap");
  check(search_cap, p.max_search_complexity, "search_cap");
  return p;
}

std::string format_problem(const ProblemSpec& p) {
  std::string out;
  out += "id: " + p.id + "\n";
  out += "category: " + std::string(name(p.category)) + "\n";
  out += "expression: " + print_canonical(p.ground_truth) + "\n";
  for (const auto& s : p.variables) {
    out += "var: v" + std::to_string(s.variable) + " " + std::string(name(s.distribution)) + " " +
           format_constant(s.low) + " " + format_constant(s.high) + " " + std::string(name(s.sign)) +
           "\n";
  }
  out += "reference: " + p.reference + "\n";
  out += "reference_complexity: " + std::to_string(p.reference_complexity) + "\n";
  out += "acceptance_cap: " + std::to_string(p.acceptance_complexity_cap) + "\n";
  out += "search_cap: " + std::to_string(p.max_search_complexity) + "\n";
  for (const auto& n : p.notes) out += "note: " + n + "\n";
  return out;
}

ProblemSpec load_problem(const fs::path& path) {
  try {
    return parse_problem(read_file(path));
  } catch (const SpecError& e) {
    throw SpecError(path.string() + ": " + e.what());
  }
}

void store_problem(const fs::path& path, const ProblemSpec& spec) {
  write_atomic(path, format_problem(spec));
}

bool AcceptableList::contains(std::string_view canonical) const {
  return std::any_of(entries.begin(), entries.end(),
                     [&](const ListEntry& e) { return e.form == canonical; });
}

std::vector<std::string> AcceptableList::forms() const {
  std::vector<std::string> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.form);
  return out;
}

AcceptableList parse_list(std::string_view text, std::string problem_id) {
  AcceptableList list;
  list.problem_id = std::move(problem_id);
  int lineno = 0;
  for (auto raw : split_lines(text)) {
    ++lineno;
    const auto line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (list.entries.empty()) list.header.emplace_back(line);
      continue;
    }
    const auto hash = line.find('#');
    ListEntry e;
    e.form = std::string(trim(line.substr(0, hash)));
    e.provenance = hash == std::string_view::npos ? "manual" : std::string(trim(line.substr(hash + 1)));
    if (!valid_provenance(e.provenance)) {
      throw SpecError(list.problem_id + " list line " + std::to_string(lineno) +
                      ": bad provenance '" + e.provenance + "'");
    }
    if (list.contains(e.form)) {
      throw SpecError(list.problem_id + " list line " + std::to_string(lineno) + ": duplicate form");
    }
    list.entries.push_back(std::move(e));
  }
  return list;
}

std::string format_list(const AcceptableList& list) {
  std::string out;
  for (const auto& h : list.header) out += h + "\n";
  for (const auto& e : list.entries) out += e.form + " # " + e.provenance + "\n";
  return out;
}

AcceptableList load_list(const fs::path& path, std::string problem_id) {
  return parse_list(read_file(path), std::move(problem_id));
}

void store_list(const fs::path& path, const AcceptableList& list) {
  write_atomic(path, format_list(list));
}

bool match(const AcceptableList& list, std::string_view canonical) { return list.contains(canonical); }

std::vector<ListIssue> audit_list(const AcceptableList& list, const ProblemSpec& spec,
                                  const ProbeConfig* probe) {
  std::vector<ListIssue> issues;
  for (const auto& entry : list.entries) {
    Expression e;
    try {
      e = parse(entry.form);
    } catch (const ParseError& err) {
      issues.push_back({entry.form, std::string("does not parse: ") + err.what()});
      continue;
    }
    if (canonicalize(e) != entry.form) issues.push_back({entry.form, "not in canonical form"});
    const int c = complexity(e);
    if (c > spec.acceptance_complexity_cap) {
      issues.push_back({entry.form, "complexity " + std::to_string(c) + " > cap " +
                                        std::to_string(spec.acceptance_complexity_cap)});
    }
    if (probe) {
      const auto r = probe_against_truth(e, spec, *probe);
      if (r.verdict != ProbeVerdict::equivalent) {
        issues.push_back({entry.form, "probe: " + std::string(name(r.verdict))});
      }
    }
  }
  return issues;
}

ProbeResult probe_against_truth(const Expression& a, const ProblemSpec& spec, ProbeConfig cfg) {
  cfg.exact_b = true;
  return probe_equivalence(a, spec.ground_truth, spec, cfg);
}

ProbeResult probe_equivalence(const Expression& a, const Expression& b, const ProblemSpec& spec,
                              const ProbeConfig& cfg) {
  return probe_equivalence(a, b, std::span<const SamplingSpec>(spec.variables), cfg);
}

std::string_view name(Role r) { return r == Role::train ? "train" : "test"; }

Dataset sample_dataset(const ProblemSpec& spec, Role role, std::uint64_t seed, int points) {
  if (points <= 0) throw std::invalid_argument("dataset points must be positive");
  Dataset d;
  d.role = role;
  d.seed = seed;
  d.num_vars = static_cast<int>(spec.variables.size());
  d.inputs.reserve(static_cast<std::size_t>(points) * static_cast<std::size_t>(d.num_vars));
  d.targets.reserve(static_cast<std::size_t>(points));
  Rng rng(derive_seed(seed, spec.id, name(role), 0));
  const Program program(spec.ground_truth);
  std::vector<double> row(static_cast<std::size_t>(d.num_vars));
  const long max_draws = 100L * points;
  long draws = 0;
  while (static_cast<int>(d.targets.size()) < points) {
    if (draws++ >= max_draws) {
      throw SamplingExhausted(spec.id + ": ground truth invalid on too many sampled points (" +
                              std::to_string(d.targets.size()) + " valid of " +
                              std::to_string(draws - 1) + ")");
    }
    for (std::size_t v = 0; v < row.size(); ++v) row[v] = spec.variables[v].draw(rng);
    const auto y = program.eval(row);
    if (!y) continue;
    d.inputs.insert(d.inputs.end(), row.begin(), row.end());
    d.targets.push_back(*y);
  }
  return d;
}

void write_csv(const fs::path& path, const Dataset& data) {
  std::string out;
  for (int v = 1; v <= data.num_vars; ++v) out += "v" + std::to_string(v) + ",";
  out += "target\n";
  for (std::size_t r = 0; r < data.rows(); ++r) {
    for (double x : data.row(r)) out += format_constant(x) + ",";
    out += format_constant(data.targets[r]) + "\n";
  }
  write_atomic(path, out);
}

Dataset read_csv(const fs::path& path) {
  const std::string text = read_file(path);
  const auto lines = split_lines(text);
  if (lines.empty()) throw std::runtime_error(path.string() + ": empty csv");
  Dataset d;
  std::vector<std::string> header;
  {
    std::string cell;
    std::istringstream in{std::string(trim(lines[0]))};
    while (std::getline(in, cell, ',')) header.push_back(cell);
  }
  if (header.empty() || header.back() != "target") {
    throw std::runtime_error(path.string() + ": last column must be 'target'");
  }
  d.num_vars = static_cast<int>(header.size()) - 1;
  for (int v = 0; v < d.num_vars; ++v) {
    if (header[static_cast<std::size_t>(v)] != "v" + std::to_string(v + 1)) {
      throw std::runtime_error(path.string() + ": header must be v1,...,vK,target");
    }
  }
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto line = trim(lines[i]);
    if (line.empty()) continue;
    std::vector<double> cells;
    std::string cell;
    std::istringstream in{std::string(line)};
    while (std::getline(in, cell, ',')) {
      const auto v = parse_constant(trim(cell));
      if (!v) throw std::runtime_error(path.string() + ": bad number '" + cell + "' in row " + std::to_string(i));
      cells.push_back(*v);
    }
    if (cells.size() != header.size()) {
      throw std::runtime_error(path.string() + ": row " + std::to_string(i) + " has wrong width");
    }
    d.targets.push_back(cells.back());
    cells.pop_back();
    d.inputs.insert(d.inputs.end(), cells.begin(), cells.end());
  }
  return d;
}

std::string_view name(MergeStatus s) {
  switch (s) {
    case MergeStatus::merged: return "merged";
    case MergeStatus::duplicate: return "duplicate";
    case MergeStatus::rejected: return "rejected";
    case MergeStatus::inconclusive: return "inconclusive";
    case MergeStatus::declined: return "declined";
  }
  return "rejected";
}

MergeResult merge_candidates(const AcceptableList& list, std::span<const MergeCandidate> recorded,
                             const ProblemSpec& spec, const Approval& approve,
                             const ProbeConfig& probe, const CanonConfig& canon) {
  MergeResult result;
  result.list = list;
  for (const auto& cand : recorded) {
    MergeOutcome out;
    out.input = cand.text;
    const std::string provenance = cand.provenance.empty() ? "manual" : cand.provenance;
    if (!valid_provenance(provenance)) {
      out.reason = "bad provenance '" + provenance + "'";
      result.outcomes.push_back(std::move(out));
      continue;
    }
    Expression canonical;
    try {
      canonical = canonical_form(parse(cand.text), canon);
    } catch (const ParseError& e) {
      out.reason = std::string("parse error: ") + e.what();
      result.outcomes.push_back(std::move(out));
      continue;
    }
    out.canonical = print_canonical(canonical);
    if (result.list.contains(out.canonical)) {
      out.status = MergeStatus::duplicate;
      out.reason = "already listed";
      result.outcomes.push_back(std::move(out));
      continue;
    }
    const int c = complexity(canonical);
    if (c > spec.acceptance_complexity_cap) {
      out.reason = "complexity " + std::to_string(c) + " > cap " +
                   std::to_string(spec.acceptance_complexity_cap);
      result.outcomes.push_back(std::move(out));
      continue;
    }
    out.probe = probe_against_truth(canonical, spec, probe);
    if (out.probe.verdict == ProbeVerdict::inconclusive) {
      out.status = MergeStatus::inconclusive;
      out.reason = "probe inconclusive" + (out.probe.note.empty() ? "" : ": " + out.probe.note);
      result.outcomes.push_back(std::move(out));
      continue;
    }
    if (out.probe.verdict != ProbeVerdict::equivalent) {
      out.reason = "probe: " + std::string(name(out.probe.verdict));
      result.outcomes.push_back(std::move(out));
      continue;
    }
    if (!approve || !approve(out)) {
      out.status = MergeStatus::declined;
      out.reason = "not approved";
      result.outcomes.push_back(std::move(out));
      continue;
    }
    out.status = MergeStatus::merged;
    result.list.entries.push_back({out.canonical, provenance});
    ++result.merged;
    result.outcomes.push_back(std::move(out));
  }
  return result;
}

Registry::Registry(fs::path root) : root_(std::move(root)) {
  if (!fs::is_directory(root_ / "problems")) {
    throw std::runtime_error("no problems/ directory under " + root_.string());
  }
}

std::vector<std::string> Registry::problem_ids() const {
  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(root_ / "problems")) {
    if (entry.path().extension() == ".spec") ids.push_back(entry.path().stem().string());
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

bool Registry::has(const std::string& id) const { return fs::exists(problem_path(id)); }

fs::path Registry::problem_path(const std::string& id) const {
  return root_ / "problems" / (id + ".spec");
}

fs::path Registry::list_path(const std::string& id) const {
  return root_ / "lists" / (id + ".accept");
}

ProblemSpec Registry::problem(const std::string& id) const {
  if (id.empty() || id.find('/') != std::string::npos || !has(id)) throw UnknownProblem(id);
  ProblemSpec p = load_problem(problem_path(id));
  if (p.id != id) throw SpecError(problem_path(id).string() + ": id field is '" + p.id + "'");
  return p;
}

AcceptableList Registry::list(const std::string& id) const {
  if (!has(id)) throw UnknownProblem(id);
  const auto path = list_path(id);
  if (!fs::exists(path)) {
    AcceptableList empty;
    empty.problem_id = id;
    return empty;
  }
  return load_list(path, id);
}

void Registry::save_list(const AcceptableList& list) const {
  fs::create_directories(root_ / "lists");
  store_list(list_path(list.problem_id), list);
}

}  // namespace rediscover
