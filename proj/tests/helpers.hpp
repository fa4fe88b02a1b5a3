#ifndef PLANNER_TESTS_HELPERS_HPP
#define PLANNER_TESTS_HELPERS_HPP

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "planner/bench.hpp"
#include "planner/model.hpp"
#include "planner/pddl.hpp"

namespace testutil {

inline std::string slurp(const std::filesystem::path &path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline std::filesystem::path bench_dir() {
  return planner::bench::default_dir();
}

inline planner::bench::Benchmark load(const std::string &name) {
  return planner::bench::load_benchmark(name, bench_dir());
}

// a scratch directory unique to this test process, removed lazily
inline std::filesystem::path fresh_dir(const std::string &tag) {
  static std::mt19937_64 rng(std::random_device{}());
  std::filesystem::path dir = std::filesystem::temp_directory_path() /
                              ("planner-test-" + tag + "-" +
                               std::to_string(rng()));
  std::filesystem::create_directories(dir);
  return dir;
}

// tiny chain domain p -> q -> r used by heuristic oracles
inline std::pair<planner::model::Domain, planner::model::Problem> chain_task() {
  auto domain = planner::pddl::parse_domain(R"(
    (define (domain chain)
      (:predicates (p) (q) (r))
      (:action step1 :parameters () :precondition (p) :effect (q))
      (:action step2 :parameters () :precondition (q) :effect (r)))
  )");
  auto problem = planner::pddl::parse_problem(R"(
    (define (problem chain-1) (:domain chain)
      (:init (p)) (:goal (r)))
  )", domain);
  return {domain, problem};
}

} // namespace testutil

#endif
