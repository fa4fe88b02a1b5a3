#include <catch2/catch.hpp>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <thread>

#include "planner/advisor.hpp"
#include "planner/hybrid.hpp"
#include "planner/model.hpp"
#include "planner/validate.hpp"

#include "helpers.hpp"

using namespace planner;
using hybrid::GetPlanResult;
using hybrid::HybridPlanner;
using hybrid::PlannerConfig;

namespace {

std::unique_ptr<advisor::Advisor> advisor_for(const std::string &name) {
  auto path = testutil::bench_dir() / name / "fixtures.json";
  if (!std::filesystem::exists(path))
    return std::make_unique<advisor::ScriptedAdvisor>(nlohmann::json::object());
  return std::make_unique<advisor::ScriptedAdvisor>(path);
}

PlannerConfig config_with(advisor::Advisor *advisor, std::string cache_dir) {
  PlannerConfig config;
  config.advisor = advisor;
  config.cache_dir = std::move(cache_dir);
  return config;
}

// an advisor whose backend is unreachable, for degradation paths
struct UnavailableAdvisor final : advisor::Advisor {
  std::string id() const override { return "unavailable:test"; }
  advisor::ReviewVerdict review_commonsense(const model::Domain &,
                                            const model::Problem &,
                                            const model::Plan &) override {
    throw advisor::AdvisorUnavailable("backend down");
  }
  model::Plan generate_fixed_plan(const model::Domain &, const model::Problem &,
                                  const model::Plan &,
                                  const std::string &) override {
    throw advisor::AdvisorUnavailable("backend down");
  }
  std::optional<advisor::GapAnalysis>
  gap_analysis_for_domain(const model::Domain &, const model::Problem &,
                          const search::UnsolvabilityCertificate &) override {
    throw advisor::AdvisorUnavailable("backend down");
  }
};

} // namespace

TEST_CASE("beer scenario: review, fix, cache, then serve from cache") {
  auto b = testutil::load("beer");
  auto scripted = advisor_for("beer");
  auto dir = testutil::fresh_dir("hybrid-beer");
  HybridPlanner planner(config_with(scripted.get(), dir.string()));

  // call 1: solver plan flagged, fixed plan cached and returned
  GetPlanResult first = planner.get_plan(b.domain, b.problem);
  REQUIRE(first.plan.has_value());
  CHECK(first.plan->length() == 8);
  CHECK(*first.plan == b.golden_plans.at("cleanup-8step"));
  CHECK(first.source == "solver+review");
  CHECK(first.trace.solver_calls() == 1);
  CHECK(first.trace.advisor_calls() == 2); // review + fixed_plan
  CHECK(first.trace.count("plan-cached") == 1);
  CHECK(first.trace.count("cache-plan-hit") == 0);
  CHECK(first.trace.returned_source() == "solver+review");

  // call 2: best case, straight from the plan cache
  auto stats_before = planner.store()->stats();
  GetPlanResult second = planner.get_plan(b.domain, b.problem);
  REQUIRE(second.plan.has_value());
  CHECK(*second.plan == *first.plan);
  CHECK(second.source == "cache");
  CHECK(second.trace.count("cache-plan-hit") == 1);
  CHECK(second.trace.solver_calls() == 0);
  CHECK(second.trace.advisor_calls() == 0);
  auto stats_after = planner.store()->stats();
  CHECK(stats_after.plan_hits == stats_before.plan_hits + 1);
  CHECK(stats_after.writes == stats_before.writes);
}

TEST_CASE("microwave scenario: repair, flaw promotion, then best case") {
  auto b = testutil::load("microwave-flawed");
  auto scripted = advisor_for("microwave-flawed");
  auto dir = testutil::fresh_dir("hybrid-microwave");
  HybridPlanner planner(config_with(scripted.get(), dir.string()));

  // call 1: worst case — failed solve, gap analysis, repair, second solve
  GetPlanResult first = planner.get_plan(b.domain, b.problem);
  REQUIRE(first.plan.has_value());
  CHECK(first.source == "repaired-domain");
  CHECK(first.trace.solver_calls() == 2);
  CHECK(first.trace.advisor_calls() == 1);
  CHECK(first.trace.count("flaw-cached") == 1);
  CHECK(first.trace.count("plan-cached") == 0); // the flaw is the cache write
  CHECK(first.plan->contains_action("turn-on-microwave"));

  // call 2: good case — cached flaw, one solver run, plan promoted
  GetPlanResult second = planner.get_plan(b.domain, b.problem);
  REQUIRE(second.plan.has_value());
  CHECK(second.source == "cached-flaw");
  CHECK(second.trace.count("cache-flaw-hit") == 1);
  CHECK(second.trace.solver_calls() == 1);
  CHECK(second.trace.advisor_calls() == 0);
  CHECK(second.trace.count("plan-cached") == 1);

  // call 3: best case — cached plan revalidated through the stored flaw
  GetPlanResult third = planner.get_plan(b.domain, b.problem);
  REQUIRE(third.plan.has_value());
  CHECK(third.source == "cache");
  CHECK(third.trace.count("cache-plan-hit") == 1);
  CHECK(third.trace.solver_calls() == 0);
  CHECK(third.trace.advisor_calls() == 0);
  CHECK(*third.plan == *second.plan);
}

TEST_CASE("truly unsolvable: advisor returns no analysis") {
  auto b = testutil::load("microwave-flawed");
  advisor::ScriptedAdvisor scripted(nlohmann::json::object()); // no fixtures
  auto dir = testutil::fresh_dir("hybrid-unsolvable");
  HybridPlanner planner(config_with(&scripted, dir.string()));

  GetPlanResult result = planner.get_plan(b.domain, b.problem);
  CHECK_FALSE(result.plan.has_value());
  CHECK(result.source == "unsolvable");
  CHECK(result.status == search::Status::Unsolvable);
  CHECK(result.trace.returned_source() == "unsolvable");
  CHECK(result.trace.advisor_calls() == 1);
  // nothing cached, so the next call repeats the analysis
  CHECK(planner.store()->list_flaws().empty());
}

TEST_CASE("branch exclusivity: plan hit xor flaw hit xor solver first") {
  auto beer = testutil::load("beer");
  auto scripted = advisor_for("beer");
  auto dir = testutil::fresh_dir("hybrid-exclusive");
  HybridPlanner planner(config_with(scripted.get(), dir.string()));

  for (int call = 0; call < 3; ++call) {
    GetPlanResult result = planner.get_plan(beer.domain, beer.problem);
    bool plan_hit = result.trace.count("cache-plan-hit") > 0;
    bool flaw_hit = result.trace.count("cache-flaw-hit") > 0;
    bool solver_first = !result.trace.events.empty() &&
                        result.trace.events.front().event == "solver-call";
    int ways = (plan_hit ? 1 : 0) + (flaw_hit ? 1 : 0) + (solver_first ? 1 : 0);
    CHECK(ways == 1);
    CHECK(result.trace.count("returned") == 1);
  }
}

TEST_CASE("amortization: at most two advisor calls over many invocations") {
  for (const char *name : {"beer", "microwave-flawed"}) {
    auto b = testutil::load(name);
    auto scripted = advisor_for(name);
    auto dir = testutil::fresh_dir(std::string("hybrid-amortized-") + name);
    HybridPlanner planner(config_with(scripted.get(), dir.string()));
    size_t advisor_total = 0;
    for (int call = 0; call < 5; ++call)
      advisor_total +=
          planner.get_plan(b.domain, b.problem).trace.advisor_calls();
    INFO(name);
    CHECK(advisor_total <= 2);
  }
}

TEST_CASE("soundness: returned plans always validate") {
  auto beer = testutil::load("beer");
  auto scripted = advisor_for("beer");
  auto dir = testutil::fresh_dir("hybrid-sound");
  HybridPlanner planner(config_with(scripted.get(), dir.string()));
  for (int call = 0; call < 3; ++call) {
    auto result = planner.get_plan(beer.domain, beer.problem);
    REQUIRE(result.plan.has_value());
    CHECK(validate::validate_plan(beer.domain, beer.problem, *result.plan)
              .valid());
  }
}

TEST_CASE("advisor outages degrade gracefully") {
  UnavailableAdvisor down;

  SECTION("during review: the solver plan is returned uncached") {
    auto beer = testutil::load("beer");
    auto dir = testutil::fresh_dir("hybrid-down-review");
    HybridPlanner planner(config_with(&down, dir.string()));
    auto result = planner.get_plan(beer.domain, beer.problem);
    REQUIRE(result.plan.has_value());
    CHECK(result.plan->length() == 7);
    CHECK(result.source == "solver");
    CHECK(result.trace.count("warning") >= 1);
    CHECK(result.trace.count("plan-cached") == 0);
    CHECK(planner.store()->list_plans().empty());
  }
  SECTION("during repair: absent with a warning") {
    auto flawed = testutil::load("microwave-flawed");
    auto dir = testutil::fresh_dir("hybrid-down-repair");
    HybridPlanner planner(config_with(&down, dir.string()));
    auto result = planner.get_plan(flawed.domain, flawed.problem);
    CHECK_FALSE(result.plan.has_value());
    CHECK(result.source == "advisor-unavailable");
    CHECK(result.trace.count("warning") >= 1);
  }
}

TEST_CASE("an invalid fixed plan never surfaces") {
  auto beer = testutil::load("beer");
  nlohmann::json fixtures = nlohmann::json::parse(
      testutil::slurp(testutil::bench_dir() / "beer" / "fixtures.json"));
  fixtures["fixed_plan:*"] = {{"plan", {"fly(robot)"}}}; // fuzzed: bogus plan
  advisor::ScriptedAdvisor scripted(fixtures);
  auto dir = testutil::fresh_dir("hybrid-badfix");
  HybridPlanner planner(config_with(&scripted, dir.string()));

  auto result = planner.get_plan(beer.domain, beer.problem);
  REQUIRE(result.plan.has_value());
  CHECK(result.plan->length() == 7); // the solver's own plan
  CHECK(validate::validate_plan(beer.domain, beer.problem, *result.plan).valid());
  CHECK(result.source == "solver");
  CHECK(result.trace.count("warning") >= 1);
}

TEST_CASE("review can be disabled") {
  auto beer = testutil::load("beer");
  auto scripted = advisor_for("beer");
  auto dir = testutil::fresh_dir("hybrid-noreview");
  auto config = config_with(scripted.get(), dir.string());
  config.review_enabled = false;
  HybridPlanner planner(std::move(config));
  auto result = planner.get_plan(beer.domain, beer.problem);
  REQUIRE(result.plan.has_value());
  CHECK(result.plan->length() == 7);
  CHECK(result.trace.advisor_calls() == 0);
  auto records = planner.store()->list_plans();
  REQUIRE(records.size() == 1);
  CHECK(records[0].provenance == cache::Provenance::Solver);
}

TEST_CASE("a stale cached plan falls through to a fresh solve") {
  auto beer = testutil::load("beer");
  auto dir = testutil::fresh_dir("hybrid-stale");
  auto key = sig::create_signature(beer.domain, beer.problem);
  {
    cache::Cache store(dir);
    cache::PlanRecord bogus;
    bogus.plan.steps.push_back(model::ActionCall::parse("fly(robot)"));
    bogus.created_at = cache::now_iso8601();
    bogus.provenance = cache::Provenance::Solver;
    store.put_plan(key, bogus);
  }
  HybridPlanner planner(config_with(nullptr, dir.string()));
  auto result = planner.get_plan(beer.domain, beer.problem);
  REQUIRE(result.plan.has_value());
  CHECK(result.plan->length() == 7);
  CHECK(result.source == "solver");
  CHECK(result.trace.count("warning") >= 1);
  // the fresh plan overwrote the stale record
  auto record = planner.store()->get_plan(key);
  REQUIRE(record.has_value());
  CHECK(record->plan.length() == 7);
}

TEST_CASE("a broken stored fix falls through to a fresh solve") {
  auto beer = testutil::load("beer");
  auto dir = testutil::fresh_dir("hybrid-brokenfix");
  auto key = sig::create_signature(beer.domain, beer.problem);
  {
    cache::Cache store(dir);
    cache::FlawRecord record;
    record.fix.missing_preconditions.push_back(
        fix::MissingPrecondition{"warp-drive", "open(beer-bottle)", ""});
    record.created_at = cache::now_iso8601();
    store.put_flaw(key, record);
  }
  HybridPlanner planner(config_with(nullptr, dir.string()));
  auto result = planner.get_plan(beer.domain, beer.problem);
  REQUIRE(result.plan.has_value());
  CHECK(result.plan->length() == 7);
  CHECK(result.trace.count("cache-flaw-hit") == 1);
  CHECK(result.trace.solver_calls() == 1);
  CHECK(result.trace.count("warning") >= 1);
}

TEST_CASE("cache write failure is a warning, not a lost plan") {
  auto beer = testutil::load("beer");
  auto dir = testutil::fresh_dir("hybrid-badwrite");
  HybridPlanner planner(config_with(nullptr, dir.string()));
  // make the append target unopenable: swap the store file for a directory
  std::filesystem::remove(dir / "known_plans.jsonl");
  std::filesystem::create_directory(dir / "known_plans.jsonl");
  auto result = planner.get_plan(beer.domain, beer.problem);
  REQUIRE(result.plan.has_value());
  CHECK(result.plan->length() == 7);
  bool warned = false;
  for (const auto &event : result.trace.events)
    if (event.event == "warning" &&
        event.fields.value("message", "").find("cache write") !=
            std::string::npos)
      warned = true;
  CHECK(warned);
}

TEST_CASE("a locked cache directory fails the call") {
  auto dir = testutil::fresh_dir("hybrid-locked");
  cache::Cache holder(dir);
  CHECK_THROWS_AS(HybridPlanner(config_with(nullptr, dir.string())),
                  cache::CacheError);
}

TEST_CASE("soft goals route through the min-cost compilation") {
  auto beer = testutil::load("beer");
  auto problem = beer.problem;
  for (const auto &sg : beer.soft_goals) problem.soft_goals.push_back(sg);
  HybridPlanner planner(PlannerConfig{});
  auto result = planner.get_plan(beer.domain, problem);
  REQUIRE(result.plan.has_value());
  CHECK(result.plan->length() == 8);
  CHECK(result.plan->contains_action("close-fridge"));
}

TEST_CASE("identical runs produce byte-identical plans and traces") {
  for (const char *name : {"beer", "microwave-flawed"}) {
    auto b = testutil::load(name);
    std::string plan_text[2];
    std::string trace_text[2];
    for (int run = 0; run < 2; ++run) {
      auto scripted = advisor_for(name);
      auto dir = testutil::fresh_dir(std::string("hybrid-det-") + name +
                                     std::to_string(run));
      HybridPlanner planner(config_with(scripted.get(), dir.string()));
      auto result = planner.get_plan(b.domain, b.problem);
      REQUIRE(result.plan.has_value());
      plan_text[run] = result.plan->text();
      trace_text[run] = result.trace.to_jsonl();
    }
    INFO(name);
    CHECK(plan_text[0] == plan_text[1]);
    CHECK(trace_text[0] == trace_text[1]);
  }
}

TEST_CASE("concurrent get_plan calls on one planner share the cache safely") {
  auto beer = testutil::load("beer");
  auto fixed = testutil::load("microwave-fixed");
  auto dir = testutil::fresh_dir("hybrid-threads");
  HybridPlanner planner(config_with(nullptr, dir.string()));

  std::atomic<int> bad{0};
  auto worker = [&](const bench::Benchmark &b, size_t expect) {
    for (int i = 0; i < 5; ++i) {
      auto result = planner.get_plan(b.domain, b.problem);
      if (!result.plan || result.plan->length() != expect) ++bad;
    }
  };
  std::thread t1(worker, std::cref(beer), 7);
  std::thread t2(worker, std::cref(fixed), 5);
  t1.join();
  t2.join();
  CHECK(bad == 0);
  CHECK(planner.store()->list_plans().size() == 2);
}

TEST_CASE("solver timeout returns absent without repair") {
  auto cube = testutil::load("cube");
  auto scripted = advisor_for("cube");
  PlannerConfig config;
  config.advisor = scripted.get();
  config.limits = search::SearchLimits{3, 60.0};
  HybridPlanner planner(std::move(config));
  auto result = planner.get_plan(cube.domain, cube.problem);
  CHECK_FALSE(result.plan.has_value());
  CHECK(result.status == search::Status::Timeout);
  CHECK(result.source == "timeout");
  CHECK(result.trace.advisor_calls() == 0);
}
