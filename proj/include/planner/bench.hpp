#ifndef PLANNER_BENCH_HPP
#define PLANNER_BENCH_HPP

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "planner/fixes.hpp"
#include "planner/model.hpp"
#include "planner/pddl.hpp"
#include "planner/search.hpp"
#include "planner/validate.hpp"

namespace planner::bench {

inline const std::vector<std::string> &benchmark_names() {
  static const std::vector<std::string> names{
      "beer", "microwave-flawed", "microwave-fixed", "cube", "cube-augmented"};
  return names;
}

struct Benchmark {
  std::string name;
  std::filesystem::path dir;
  model::Domain domain;
  model::Problem problem; // sidecar soft goals NOT folded in
  std::vector<model::SoftGoal> soft_goals;
  std::filesystem::path fixtures_path;                // empty if none
  std::map<std::string, model::Plan> golden_plans;    // file stem -> plan
};

inline std::filesystem::path default_dir() {
  const char *env = std::getenv("PLAN_BENCHMARKS_DIR");
  if (env != nullptr && *env != '\0') return env;
#ifdef PLANNER_BENCHMARKS_DIR
  return PLANNER_BENCHMARKS_DIR;
#else
  return "benchmarks";
#endif
}

namespace internal {

inline std::string slurp(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

} // namespace internal

inline Benchmark load_benchmark(const std::string &name,
                                const std::filesystem::path &dir = default_dir()) {
  const auto &names = benchmark_names();
  if (std::find(names.begin(), names.end(), name) == names.end())
    throw Error("unknown benchmark '" + name + "'");

  Benchmark b;
  b.name = name;
  b.dir = dir / name;
  b.domain = pddl::parse_domain(internal::slurp(b.dir / "domain.pddl"),
                                (b.dir / "domain.pddl").string());
  b.problem = pddl::parse_problem(internal::slurp(b.dir / "problem.pddl"),
                                  b.domain, (b.dir / "problem.pddl").string());
  if (std::filesystem::exists(b.dir / "soft_goals.json"))
    b.soft_goals = pddl::parse_soft_goals(
        internal::slurp(b.dir / "soft_goals.json"),
        (b.dir / "soft_goals.json").string());
  if (std::filesystem::exists(b.dir / "fixtures.json"))
    b.fixtures_path = b.dir / "fixtures.json";

  std::vector<std::filesystem::path> plan_files;
  if (std::filesystem::exists(b.dir / "golden"))
    for (const auto &entry :
         std::filesystem::directory_iterator(b.dir / "golden"))
      if (entry.path().extension() == ".plan") plan_files.push_back(entry.path());
  std::sort(plan_files.begin(), plan_files.end());
  for (const auto &path : plan_files) {
    model::Plan plan =
        pddl::parse_plan(internal::slurp(path), path.string());
    validate::Verdict verdict =
        validate::validate_plan(b.domain, b.problem, plan);
    if (!verdict.valid())
      throw Error("golden plan " + path.string() +
                  " does not validate: " + verdict.describe());
    b.golden_plans[path.stem().string()] = std::move(plan);
  }
  return b;
}

// --- ablation harness ---

struct AblationRow {
  std::string label;
  std::string status;
  int plan_length = 0;
  int cost = 0;
  uint64_t expansions = 0;
  double wall_seconds = 0.0;
  std::string note;
};

struct AblationReport {
  std::string name;
  std::vector<AblationRow> rows;
  double expansion_ratio = 0.0; // after/before, when the ablation is a pair

  std::string render() const {
    std::ostringstream os;
    os << "ablation: " << name << "\n";
    os << "  " << std::left << std::setw(26) << "variant" << std::setw(10)
       << "status" << std::setw(8) << "len" << std::setw(8) << "cost"
       << std::setw(12) << "expansions" << std::setw(10) << "seconds"
       << "note\n";
    for (const auto &row : rows) {
      std::ostringstream secs;
      secs << std::fixed << std::setprecision(3) << row.wall_seconds;
      os << "  " << std::left << std::setw(26) << row.label << std::setw(10)
         << row.status << std::setw(8) << row.plan_length << std::setw(8)
         << row.cost << std::setw(12) << row.expansions << std::setw(10)
         << secs.str() << row.note << "\n";
    }
    if (expansion_ratio > 0.0) {
      os << "  expansion ratio (after/before): " << std::fixed
         << std::setprecision(4) << expansion_ratio << "\n";
    }
    return os.str();
  }
};

inline const std::vector<std::string> &ablation_names() {
  static const std::vector<std::string> names{"beer-softgoal",
                                              "cube-preconditions"};
  return names;
}

inline AblationReport
run_ablation(const std::string &name,
             const std::filesystem::path &dir = default_dir(),
             search::Algorithm algo = search::Algorithm::AStar,
             search::Heuristic heuristic = search::Heuristic::HMax,
             const search::SearchLimits &limits = {}) {
  AblationReport report;
  report.name = name;

  if (name == "beer-softgoal") {
    Benchmark b = load_benchmark("beer", dir);

    auto row_for = [&](const std::string &label, int penalty) {
      model::Problem problem = b.problem;
      for (auto sg : b.soft_goals) {
        sg.penalty = penalty;
        problem.soft_goals.push_back(sg);
      }
      fix::SoftGoalSolveResult solved =
          fix::solve_with_soft_goals(b.domain, problem, algo, heuristic, limits);
      AblationRow row;
      row.label = label;
      row.status = search::to_string(solved.result.status);
      if (solved.result.status == search::Status::Solved) {
        row.plan_length = static_cast<int>(solved.result.plan->length());
        row.cost = solved.cost;
        row.note = solved.result.plan->contains_action("close-fridge")
                       ? "includes close-fridge"
                       : "omits close-fridge";
      }
      row.expansions = solved.total_expansions;
      row.wall_seconds = solved.result.wall_seconds;
      return row;
    };

    AblationRow baseline;
    {
      search::SearchResult solved = search::solve(
          model::ground(b.domain, b.problem), algo, heuristic, limits);
      baseline.label = "no-soft-goal";
      baseline.status = search::to_string(solved.status);
      if (solved.status == search::Status::Solved) {
        baseline.plan_length = static_cast<int>(solved.plan->length());
        baseline.cost = baseline.plan_length;
        baseline.note = solved.plan->contains_action("close-fridge")
                            ? "includes close-fridge"
                            : "omits close-fridge";
      }
      baseline.expansions = solved.expansions;
      baseline.wall_seconds = solved.wall_seconds;
    }
    report.rows.push_back(baseline);
    report.rows.push_back(row_for("soft-goal penalty=0", 0));
    report.rows.push_back(row_for("soft-goal penalty=2", 2));
    return report;
  }

  if (name == "cube-preconditions") {
    Benchmark b = load_benchmark("cube", dir);
    fix::DomainFix fixes = fix::parse_fix(
        internal::slurp(b.dir / "fix_preconditions.json"));
    auto [fixed_domain, fixed_problem] =
        fix::apply_fixes(b.domain, b.problem, fixes);

    auto row_for = [&](const std::string &label, const model::Domain &d,
                       const model::Problem &p) {
      search::SearchResult solved =
          search::solve(model::ground(d, p), algo, heuristic, limits);
      AblationRow row;
      row.label = label;
      row.status = search::to_string(solved.status);
      if (solved.status == search::Status::Solved)
        row.plan_length = static_cast<int>(solved.plan->length());
      row.cost = row.plan_length;
      row.expansions = solved.expansions;
      row.wall_seconds = solved.wall_seconds;
      return row;
    };
    AblationRow before = row_for("original domain", b.domain, b.problem);
    AblationRow after =
        row_for("with injected preconditions", fixed_domain, fixed_problem);
    report.rows.push_back(before);
    report.rows.push_back(after);
    if (before.expansions > 0)
      report.expansion_ratio = static_cast<double>(after.expansions) /
                               static_cast<double>(before.expansions);
    return report;
  }

  throw Error("unknown ablation '" + name + "'");
}

} // namespace planner::bench

#endif
