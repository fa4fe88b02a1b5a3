#include <catch2/catch.hpp>

#include "planner/model.hpp"
#include "planner/pddl.hpp"
#include "planner/search.hpp"
#include "planner/validate.hpp"

#include "helpers.hpp"

using namespace planner;

TEST_CASE("minimal domain text") {
  auto domain = pddl::parse_domain(
      "(define (domain d) (:predicates (p)) "
      "(:action a :precondition (p) :effect (not (p))))");
  CHECK(domain.predicates.size() == 1);
  REQUIRE(domain.actions.size() == 1);
  CHECK(domain.actions[0].preconditions.size() == 1);
  CHECK(domain.actions[0].delete_effects.size() == 1);
  CHECK(domain.actions[0].add_effects.empty());
}

TEST_CASE("bundled cube domain has exactly the exploration schemas") {
  auto b = testutil::load("cube");
  std::set<std::string> names;
  for (const auto &a : b.domain.actions) names.insert(a.name);
  CHECK(names == std::set<std::string>{
                     "pick-up", "place", "rotate-cube",
                     "inspect-cube-on-platform-a", "discover-black-dot",
                     "identify-correct-cube", "mark-correctly-placed"});
}

TEST_CASE("flawed microwave lacks start-microwave, fixed one has it") {
  auto flawed = testutil::load("microwave-flawed");
  auto fixed = testutil::load("microwave-fixed");
  CHECK(flawed.domain.find_action("start-microwave") == nullptr);
  CHECK(fixed.domain.find_action("start-microwave") != nullptr);
}

TEST_CASE("cube problem init and goal") {
  auto b = testutil::load("cube");
  std::set<std::string> init;
  for (const auto &atom : b.problem.init) init.insert(atom.text());
  CHECK(init.count("on-platform(cube-a,platform-a)") == 1);
  CHECK(init.count("on-platform(cube-b,platform-a)") == 1);
  for (const auto &atom : b.problem.init)
    CHECK(atom.predicate != "has-black-dot");
  REQUIRE(b.problem.goal.size() == 1);
  CHECK(b.problem.goal[0].text() ==
        "correct-cube-on-platform(cube-a,platform-b)");
}

TEST_CASE("beer problem goal") {
  auto b = testutil::load("beer");
  std::set<std::string> goal;
  for (const auto &lit : b.problem.goal) goal.insert(lit.text());
  CHECK(goal == std::set<std::string>{"open(beer-bottle)",
                                      "on-table(beer-bottle)"});
}

TEST_CASE("negative goals parse and drive the search") {
  auto domain = pddl::parse_domain(
      "(define (domain d) (:requirements :strips :negative-preconditions) "
      "(:predicates (p) (q)) "
      "(:action drop :parameters () :precondition (p) :effect (and (q) (not (p)))))");
  auto problem = pddl::parse_problem(
      "(define (problem t) (:domain d) (:init (p)) "
      "(:goal (and (q) (not (p)))))",
      domain);
  REQUIRE(problem.goal.size() == 2);
  CHECK(problem.goal[1].negated);
  auto task = model::ground(domain, problem);
  REQUIRE(task.goal_neg.size() == 1);
  auto result = planner::search::solve(task, planner::search::Algorithm::AStar,
                                       planner::search::Heuristic::HMax);
  REQUIRE(result.status == planner::search::Status::Solved);
  CHECK(result.plan->length() == 1);
  CHECK(planner::validate::validate_plan(domain, problem, *result.plan).valid());
}

TEST_CASE("empty goal parses and is trivially satisfied") {
  auto domain = pddl::parse_domain("(define (domain d) (:predicates (p)))");
  auto problem = pddl::parse_problem(
      "(define (problem t) (:domain d) (:init (p)) (:goal (and)))", domain);
  CHECK(problem.goal.empty());
  auto task = model::ground(domain, problem);
  CHECK(task.goal_satisfied(task.init));
}

TEST_CASE("round trips") {
  SECTION("cube domain survives print/parse structurally") {
    auto b = testutil::load("cube");
    auto again = pddl::parse_domain(pddl::print_domain(b.domain));
    CHECK(model::structurally_equal(b.domain, again));
  }
  SECTION("problem round trip") {
    auto b = testutil::load("beer");
    auto again = pddl::parse_problem(pddl::print_problem(b.problem), b.domain);
    CHECK(model::structurally_equal(b.problem, again));
  }
  SECTION("empty predicates section") {
    model::Domain d;
    d.name = "bare";
    auto again = pddl::parse_domain(pddl::print_domain(d));
    CHECK(model::structurally_equal(d, again));
  }
  SECTION("action schema fragment") {
    auto schema = pddl::parse_action_schema(
        "(:action grab :parameters (?x - object) :precondition (and) "
        ":effect (and (held ?x)))");
    auto again = pddl::parse_action_schema(pddl::print_action_schema(schema));
    CHECK(schema == again);
  }
}

TEST_CASE("parse-print-parse is idempotent on every bundled file") {
  for (const auto &name : bench::benchmark_names()) {
    auto b = testutil::load(name);
    auto domain2 = pddl::parse_domain(pddl::print_domain(b.domain));
    CHECK(pddl::print_domain(domain2) == pddl::print_domain(b.domain));
    auto problem2 = pddl::parse_problem(pddl::print_problem(b.problem), b.domain);
    CHECK(pddl::print_problem(problem2) == pddl::print_problem(b.problem));
  }
}

TEST_CASE("deleting any closing parenthesis breaks the parse") {
  for (const auto &name : bench::benchmark_names()) {
    auto dir = testutil::bench_dir() / name;
    for (const char *file : {"domain.pddl", "problem.pddl"}) {
      std::string text = testutil::slurp(dir / file);
      bool is_domain = std::string(file) == "domain.pddl";
      model::Domain domain;
      if (!is_domain) domain = testutil::load(name).domain;
      size_t checked = 0;
      bool in_comment = false;
      for (size_t i = 0; i < text.size(); ++i) {
        if (text[i] == ';') in_comment = true;
        if (text[i] == '\n') in_comment = false;
        if (text[i] != ')' || in_comment) continue;
        std::string mutated = text.substr(0, i) + text.substr(i + 1);
        ++checked;
        if (is_domain)
          CHECK_THROWS_AS(pddl::parse_domain(mutated), pddl::ParseError);
        else
          CHECK_THROWS_AS(pddl::parse_problem(mutated, domain),
                          pddl::ParseError);
      }
      CHECK(checked > 0);
    }
  }
}

TEST_CASE("parser rejections") {
  SECTION("unknown requirement") {
    CHECK_THROWS_WITH(
        pddl::parse_domain("(define (domain d) (:requirements :adl))"),
        Catch::Contains("unsupported requirement"));
  }
  SECTION("duplicate schema name") {
    CHECK_THROWS_WITH(
        pddl::parse_domain("(define (domain d) (:predicates (p)) "
                           "(:action a :effect (p)) (:action a :effect (p)))"),
        Catch::Contains("duplicate action"));
  }
  SECTION("undeclared predicate in an action") {
    CHECK_THROWS_WITH(
        pddl::parse_domain(
            "(define (domain d) (:predicates (p)) (:action a :effect (q)))"),
        Catch::Contains("undeclared predicate"));
  }
  SECTION("undeclared predicate in a goal") {
    auto domain = pddl::parse_domain("(define (domain d) (:predicates (p)))");
    CHECK_THROWS_AS(
        pddl::parse_problem(
            "(define (problem t) (:domain d) (:init) (:goal (q)))", domain),
        pddl::ParseError);
  }
  SECTION("negative atom in init") {
    auto domain = pddl::parse_domain("(define (domain d) (:predicates (p)))");
    CHECK_THROWS_WITH(
        pddl::parse_problem(
            "(define (problem t) (:domain d) (:init (not (p))) (:goal (p)))",
            domain),
        Catch::Contains("negative atom in :init"));
  }
  SECTION("errors carry source positions") {
    try {
      pddl::parse_domain("(define (domain d)\n  (:badsec))");
      FAIL("expected a parse error");
    } catch (const pddl::ParseError &e) {
      CHECK(e.span.line == 2);
      CHECK(e.span.column >= 3);
    }
  }
}

TEST_CASE("identifiers are case-insensitive and comments are skipped") {
  auto domain = pddl::parse_domain(
      "(define (domain CaseTest) ; a comment\n"
      "  (:predicates (P ?X - Object))\n"
      "  (:action Grab :parameters (?X - Object) :precondition (and) "
      ":effect (P ?X)))");
  CHECK(domain.name == "casetest");
  CHECK(domain.predicates[0].name == "p");
  CHECK(domain.actions[0].name == "grab");
  CHECK(domain.actions[0].params[0].name == "x");
}

TEST_CASE("soft-goal sidecar") {
  SECTION("bundled beer sidecar") {
    auto soft = pddl::parse_soft_goals(
        testutil::slurp(testutil::bench_dir() / "beer" / "soft_goals.json"));
    REQUIRE(soft.size() == 1);
    CHECK(soft[0].atom.text() == "fridge-closed(fridge)");
    CHECK(soft[0].penalty == 2);
  }
  SECTION("zero-arg atom forms") {
    auto soft = pddl::parse_soft_goals(
        R"json({"soft_goals":[{"atom":"tidy()","penalty":1},{"atom":"quiet","penalty":3}]})json");
    REQUIRE(soft.size() == 2);
    CHECK(soft[0].atom.text() == "tidy()");
    CHECK(soft[1].atom.text() == "quiet()");
  }
  SECTION("negative penalty rejected") {
    CHECK_THROWS_AS(pddl::parse_soft_goals(
                        R"({"soft_goals":[{"atom":"p","penalty":-1}]})"),
                    pddl::ParseError);
  }
  SECTION("round trip") {
    std::vector<model::SoftGoal> goals{
        {model::GroundAtom{"fridge-closed", {"fridge"}}, 2}};
    auto again = pddl::parse_soft_goals(pddl::print_soft_goals(goals));
    CHECK(again == goals);
  }
}

TEST_CASE("plan files") {
  auto plan = pddl::parse_plan("; header\nmove(r,a,b)\n\nnoop()\n");
  REQUIRE(plan.length() == 2);
  CHECK(plan.steps[0].text() == "move(r,a,b)");
  CHECK(plan.steps[1].text() == "noop()");
  CHECK_THROWS_AS(pddl::parse_plan("move(r,a,b"), pddl::ParseError);
}
