// plan — classical STRIPS planning with optional advisor review/repair and
// persistent plan/flaw caches. Plain solver by default; hybrid behavior is
// opt-in through --advisor and --cache.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "planner/advisor.hpp"
#include "planner/bench.hpp"
#include "planner/cache.hpp"
#include "planner/hybrid.hpp"
#include "planner/model.hpp"
#include "planner/pddl.hpp"
#include "planner/search.hpp"
#include "planner/validate.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;     // usage, IO, parse
constexpr int kExitNoPlan = 2;    // unsolvable / invalid plan
constexpr int kExitTimeout = 3;

std::string slurp(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw planner::Error("cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct SolveArgs {
  std::string domain_file;
  std::string problem_file;
  std::string soft_goals_file;
  std::string algo = "astar";
  std::string heuristic = "hmax";
  std::string advisor_spec = "off";
  std::string cache_dir;
  std::string trace_file;
  uint64_t max_expansions = 1'000'000;
  double timeout_seconds = 60.0;
  bool no_review = false;
  bool verbose = false;
};

int run_solve(const SolveArgs &args) {
  namespace ps = planner::search;

  auto algo = ps::algorithm_from_string(args.algo);
  auto heuristic = ps::heuristic_from_string(args.heuristic);
  if (!algo || !heuristic) {
    std::cerr << "error: unknown --algo or --heuristic\n";
    return kExitError;
  }

  planner::model::Domain domain =
      planner::pddl::parse_domain(slurp(args.domain_file), args.domain_file);
  planner::model::Problem problem = planner::pddl::parse_problem(
      slurp(args.problem_file), domain, args.problem_file);
  if (!args.soft_goals_file.empty()) {
    for (auto &sg : planner::pddl::parse_soft_goals(slurp(args.soft_goals_file),
                                                    args.soft_goals_file))
      problem.soft_goals.push_back(std::move(sg));
  }

  std::unique_ptr<planner::advisor::Advisor> advisor =
      planner::advisor::make_advisor(args.advisor_spec);

  planner::hybrid::PlannerConfig config;
  config.algorithm = *algo;
  config.heuristic = *heuristic;
  config.limits = ps::SearchLimits{args.max_expansions, args.timeout_seconds};
  config.advisor = advisor.get();
  config.cache_dir = args.cache_dir;
  config.review_enabled = !args.no_review;

  planner::hybrid::HybridPlanner planner_instance(std::move(config));
  planner::hybrid::GetPlanResult result =
      planner_instance.get_plan(domain, problem);

  if (!args.trace_file.empty()) {
    std::ofstream out(args.trace_file);
    if (!out) {
      std::cerr << "error: cannot write trace file " << args.trace_file << "\n";
      return kExitError;
    }
    out << result.trace.to_jsonl();
  }
  if (args.verbose || !args.trace_file.empty()) {
    for (const auto &event : result.trace.events)
      std::cerr << event.human() << "\n";
  }

  if (result.plan) {
    std::cout << result.plan->text();
    return kExitOk;
  }
  std::cerr << "no plan (" << result.source << ")\n";
  return result.status == ps::Status::Timeout ? kExitTimeout : kExitNoPlan;
}

struct ValidateArgs {
  std::string domain_file;
  std::string problem_file;
  std::string plan_file;
  std::string soft_goals_file;
};

int run_validate(const ValidateArgs &args) {
  planner::model::Domain domain =
      planner::pddl::parse_domain(slurp(args.domain_file), args.domain_file);
  planner::model::Problem problem = planner::pddl::parse_problem(
      slurp(args.problem_file), domain, args.problem_file);
  if (!args.soft_goals_file.empty()) {
    for (auto &sg : planner::pddl::parse_soft_goals(slurp(args.soft_goals_file),
                                                    args.soft_goals_file))
      problem.soft_goals.push_back(std::move(sg));
  }
  planner::model::Plan plan =
      planner::pddl::parse_plan(slurp(args.plan_file), args.plan_file);

  planner::validate::Verdict verdict =
      planner::validate::validate_plan(domain, problem, plan);
  std::cout << verdict.describe() << "\n";
  for (const auto &atom : verdict.satisfied_soft_goals)
    std::cout << "soft-goal satisfied: " << atom << "\n";
  for (const auto &atom : verdict.unsatisfied_soft_goals)
    std::cout << "soft-goal unmet: " << atom << "\n";
  return verdict.valid() ? kExitOk : kExitNoPlan;
}

struct BenchArgs {
  std::string name;
  std::string dir;
  bool ablation = false;
  std::string algo = "astar";
  std::string heuristic = "hmax";
};

int run_bench(const BenchArgs &args) {
  namespace pb = planner::bench;
  std::filesystem::path dir =
      args.dir.empty() ? pb::default_dir() : std::filesystem::path(args.dir);
  auto algo = planner::search::algorithm_from_string(args.algo);
  auto heuristic = planner::search::heuristic_from_string(args.heuristic);
  if (!algo || !heuristic) {
    std::cerr << "error: unknown --algo or --heuristic\n";
    return kExitError;
  }

  if (args.ablation) {
    std::string ablation = args.name;
    if (args.name == "beer") ablation = "beer-softgoal";
    if (args.name == "cube") ablation = "cube-preconditions";
    const auto &known = pb::ablation_names();
    if (std::find(known.begin(), known.end(), ablation) == known.end()) {
      std::cerr << "error: no ablation for '" << args.name << "'\n";
      return kExitError;
    }
    pb::AblationReport report =
        pb::run_ablation(ablation, dir, *algo, *heuristic);
    std::cout << report.render();
    return kExitOk;
  }

  pb::Benchmark b = pb::load_benchmark(args.name, dir);
  planner::search::SearchResult result = planner::search::solve(
      planner::model::ground(b.domain, b.problem), *algo, *heuristic);
  std::cout << "benchmark: " << b.name << "\n";
  std::cout << "  status: " << planner::search::to_string(result.status)
            << "\n";
  if (result.plan)
    std::cout << "  plan length: " << result.plan->length() << "\n";
  std::cout << "  expansions: " << result.expansions << "\n";
  std::cout << "  golden plans: " << b.golden_plans.size() << "\n";
  if (result.certificate) {
    for (const auto &atom : result.certificate->unreachable_goal_atoms)
      std::cout << "  unreachable goal atom: " << atom << "\n";
    for (const auto &[action, atom] : result.certificate->orphan_preconditions)
      std::cout << "  orphan precondition: " << atom << " of " << action
                << "\n";
  }
  return kExitOk;
}

int run_cache_ls(const std::string &dir) {
  planner::cache::Cache store(dir);
  for (const auto &record : store.list_plans())
    std::cout << "plan " << record.signature << " steps="
              << record.plan.length() << " provenance="
              << planner::cache::to_string(record.provenance) << " created="
              << record.created_at << "\n";
  for (const auto &record : store.list_flaws())
    std::cout << "flaw " << record.signature
              << " missing_actions=" << record.fix.missing_actions.size()
              << " missing_preconditions="
              << record.fix.missing_preconditions.size()
              << " created=" << record.created_at << "\n";
  return kExitOk;
}

int run_cache_clear(const std::string &dir) {
  planner::cache::Cache store(dir);
  store.clear();
  std::cerr << "cache cleared: " << dir << "\n";
  return kExitOk;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"classical STRIPS planner with advisor review/repair and "
               "persistent caches"};
  app.require_subcommand(1);

  SolveArgs solve_args;
  CLI::App *solve = app.add_subcommand("solve", "solve a planning problem");
  solve->add_option("--domain", solve_args.domain_file, "domain file")
      ->required();
  solve->add_option("--problem", solve_args.problem_file, "problem file")
      ->required();
  solve->add_option("--soft-goals", solve_args.soft_goals_file,
                    "soft-goal sidecar file");
  solve->add_option("--algo", solve_args.algo,
                    "bfs|astar|gbfs|idastar|ehc (default astar)");
  solve->add_option("--heuristic", solve_args.heuristic,
                    "goalcount|hadd|hmax|lmcount (default hmax)");
  solve->add_option("--advisor", solve_args.advisor_spec,
                    "scripted:FILE | http | off (default off)");
  solve->add_option("--cache", solve_args.cache_dir, "cache directory");
  solve->add_option("--trace", solve_args.trace_file,
                    "write the decision trace (jsonl)");
  solve->add_option("--max-expansions", solve_args.max_expansions,
                    "expansion limit (default 1000000)");
  solve->add_option("--timeout", solve_args.timeout_seconds,
                    "wall-clock limit in seconds (default 60)");
  solve->add_flag("--no-review", solve_args.no_review,
                  "skip commonsense review of successful plans");
  solve->add_flag("-v,--verbose", solve_args.verbose,
                  "mirror trace events to stderr");

  ValidateArgs validate_args;
  CLI::App *validate = app.add_subcommand("validate", "validate a plan file");
  validate->add_option("--domain", validate_args.domain_file, "domain file")
      ->required();
  validate->add_option("--problem", validate_args.problem_file, "problem file")
      ->required();
  validate->add_option("--plan", validate_args.plan_file, "plan file")
      ->required();
  validate->add_option("--soft-goals", validate_args.soft_goals_file,
                       "soft-goal sidecar file");

  BenchArgs bench_args;
  CLI::App *bench = app.add_subcommand("bench", "run a bundled benchmark");
  bench->add_option("name", bench_args.name, "benchmark name")->required();
  bench->add_flag("--ablation", bench_args.ablation, "run the ablation");
  bench->add_option("--dir", bench_args.dir, "benchmark asset directory");
  bench->add_option("--algo", bench_args.algo, "search algorithm");
  bench->add_option("--heuristic", bench_args.heuristic, "search heuristic");

  CLI::App *cache_cmd = app.add_subcommand("cache", "inspect or clear a cache");
  cache_cmd->require_subcommand(1);
  std::string cache_ls_dir, cache_clear_dir;
  CLI::App *cache_ls = cache_cmd->add_subcommand("ls", "list cache records");
  cache_ls->add_option("--cache", cache_ls_dir, "cache directory")->required();
  CLI::App *cache_clear =
      cache_cmd->add_subcommand("clear", "truncate both stores");
  cache_clear->add_option("--cache", cache_clear_dir, "cache directory")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) return run_solve(solve_args);
    if (validate->parsed()) return run_validate(validate_args);
    if (bench->parsed()) return run_bench(bench_args);
    if (cache_cmd->parsed()) {
      if (cache_ls->parsed()) return run_cache_ls(cache_ls_dir);
      if (cache_clear->parsed()) return run_cache_clear(cache_clear_dir);
    }
  } catch (const planner::pddl::ParseError &e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitError;
  } catch (const planner::Error &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
