#ifndef PLANNER_HYBRID_HPP
#define PLANNER_HYBRID_HPP

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "planner/advisor.hpp"
#include "planner/cache.hpp"
#include "planner/fixes.hpp"
#include "planner/model.hpp"
#include "planner/search.hpp"
#include "planner/signature.hpp"
#include "planner/validate.hpp"

namespace planner::hybrid {

struct PlannerConfig {
  search::Algorithm algorithm = search::Algorithm::AStar;
  search::Heuristic heuristic = search::Heuristic::HMax;
  search::SearchLimits limits;
  advisor::Advisor *advisor = nullptr; // not owned; nullptr = no advisor
  std::string cache_dir;               // empty = caching disabled
  bool review_enabled = true;
  int max_repair_rounds = 1;
};

struct TraceEvent {
  std::string event;
  nlohmann::json fields = nlohmann::json::object();

  nlohmann::json to_json() const {
    nlohmann::json doc = fields;
    doc["event"] = event;
    return doc;
  }
  std::string human() const {
    std::string out = "[plan] " + event;
    for (const auto &[key, value] : fields.items()) {
      out += " " + key + "=";
      out += value.is_string() ? value.get<std::string>() : value.dump();
    }
    return out;
  }
};

struct Trace {
  std::vector<TraceEvent> events;

  void add(std::string event, nlohmann::json fields = nlohmann::json::object()) {
    events.push_back(TraceEvent{std::move(event), std::move(fields)});
  }
  size_t count(const std::string &event) const {
    size_t n = 0;
    for (const auto &e : events)
      if (e.event == event) ++n;
    return n;
  }
  size_t solver_calls() const { return count("solver-call"); }
  size_t advisor_calls() const { return count("advisor-call"); }
  std::string returned_source() const {
    for (const auto &e : events)
      if (e.event == "returned") return e.fields.value("source", "");
    return "";
  }
  std::string to_jsonl() const {
    std::string out;
    for (const auto &e : events) {
      out += e.to_json().dump();
      out.push_back('\n');
    }
    return out;
  }
};

struct GetPlanResult {
  std::optional<model::Plan> plan;
  Trace trace;
  search::Status status = search::Status::Unsolvable;
  std::string source; // mirrors the returned event
};

/// Solver-first planning with cache-first short circuits and the advisor in
/// Review mode (successful plans) or Repair mode (unsolvable tasks). Every
/// fix and every reviewed plan is persisted, so advisor work happens at most
/// once per problem signature.
class HybridPlanner {
public:
  explicit HybridPlanner(PlannerConfig config) : config_(std::move(config)) {
    if (!config_.cache_dir.empty())
      cache_ = std::make_unique<cache::Cache>(config_.cache_dir);
  }

  cache::Cache *store() { return cache_.get(); }
  const PlannerConfig &config() const { return config_; }

  GetPlanResult get_plan(const model::Domain &domain,
                         const model::Problem &problem) {
    sig::ProblemSignature signature = sig::create_signature(domain, problem);
    std::unique_lock<std::mutex> guard = lock_signature(signature.to_string());

    GetPlanResult out;
    Trace &trace = out.trace;
    drain_cache_warnings(trace);

    // Branch 1: known plan
    if (cache_) {
      auto record = cache_->get_plan(signature);
      if (record) {
        if (revalidate(domain, problem, signature, record->plan, trace)) {
          trace.add("cache-plan-hit", {{"sig", signature.short_form()}});
          return finish(out, std::move(record->plan), "cache");
        }
        trace.add("warning",
                  {{"message", "cached plan no longer validates; replanning"}});
      }
    }

    // Branch 2: known flaw
    if (cache_) {
      auto flaw = cache_->get_flaw(signature);
      if (flaw) {
        trace.add("cache-flaw-hit", {{"sig", signature.short_form()}});
        try {
          auto [fixed_domain, fixed_problem] =
              fix::apply_fixes(domain, problem, flaw->fix);
          trace.add("fix-applied");
          auto [plan, status] =
              solve_and_cache(fixed_domain, fixed_problem, signature,
                              cache::Provenance::RepairedDomain, trace);
          if (plan) return finish(out, std::move(*plan), "cached-flaw");
          return finish_absent(out, status,
                               status == search::Status::Timeout ? "timeout"
                                                                 : "unsolvable");
        } catch (const fix::FixError &e) {
          // a broken stored fix must not wedge planning; fall through to a
          // fresh solve, which re-runs repair and overwrites the record
          trace.add("warning", {{"message", std::string("cached fix does not "
                                                        "apply: ") +
                                                e.what()}});
        }
      }
    }

    // Branch 3: fresh problem, classical solver first
    search::SearchResult result = run_solver(domain, problem, trace);

    if (result.status == search::Status::Solved) {
      model::Plan plan = std::move(*result.plan);
      if (config_.advisor == nullptr || !config_.review_enabled) {
        cache_plan(signature, plan, cache::Provenance::Solver, trace);
        return finish(out, std::move(plan), "solver");
      }
      try {
        trace.add("advisor-call", {{"mode", "review"}});
        advisor::ReviewVerdict review =
            config_.advisor->review_commonsense(domain, problem, plan);
        if (review.is_good) {
          cache_plan(signature, plan, cache::Provenance::Solver, trace);
          return finish(out, std::move(plan), "solver");
        }
        trace.add("advisor-call", {{"mode", "fixed_plan"}});
        model::Plan fixed = config_.advisor->generate_fixed_plan(
            domain, problem, plan, review.feedback);
        cache_plan(signature, fixed, cache::Provenance::SolverReview, trace);
        return finish(out, std::move(fixed), "solver+review");
      } catch (const advisor::AdvisorUnavailable &e) {
        trace.add("warning",
                  {{"message", std::string("advisor unavailable during "
                                           "review; returning solver plan "
                                           "uncached: ") +
                                   e.what()}});
        return finish(out, std::move(plan), "solver");
      } catch (const advisor::FixedPlanInvalid &e) {
        trace.add("warning",
                  {{"message", std::string("advisor fixed plan rejected; "
                                           "returning solver plan uncached: ") +
                                   e.what()}});
        return finish(out, std::move(plan), "solver");
      }
    }

    if (result.status == search::Status::Timeout) {
      trace.add("warning", {{"message", "solver hit its limits (" +
                                            result.timeout_reason +
                                            "); no repair attempted"}});
      return finish_absent(out, search::Status::Timeout, "timeout");
    }

    // UNSOLVABLE: repair mode
    if (config_.advisor == nullptr || config_.max_repair_rounds <= 0)
      return finish_absent(out, search::Status::Unsolvable, "unsolvable");
    return repair(domain, problem, signature, std::move(result), out);
  }

  struct SolveAndCacheResult {
    std::optional<model::Plan> plan;
    search::Status status = search::Status::Unsolvable;
  };

  /// Branch-2 helper: solve and, on success, persist under the ORIGINAL
  /// signature. Cache write failures degrade to a warning.
  SolveAndCacheResult solve_and_cache(const model::Domain &domain,
                                      const model::Problem &problem,
                                      const sig::ProblemSignature &key,
                                      cache::Provenance provenance,
                                      Trace &trace) {
    search::SearchResult result = run_solver(domain, problem, trace);
    if (result.status != search::Status::Solved)
      return {std::nullopt, result.status};
    cache_plan(key, *result.plan, provenance, trace);
    return {std::move(result.plan), search::Status::Solved};
  }

private:
  GetPlanResult finish(GetPlanResult &out, model::Plan plan,
                       const std::string &source) {
    out.plan = std::move(plan);
    out.status = search::Status::Solved;
    out.source = source;
    out.trace.add("returned", {{"source", source}});
    return std::move(out);
  }
  GetPlanResult finish_absent(GetPlanResult &out, search::Status status,
                              const std::string &source) {
    out.status = status == search::Status::Solved ? search::Status::Unsolvable
                                                  : status;
    out.source = source;
    out.trace.add("returned", {{"source", source}});
    return std::move(out);
  }

  search::SearchResult run_solver(const model::Domain &domain,
                                  const model::Problem &problem, Trace &trace) {
    search::SearchResult result;
    if (problem.soft_goals.empty()) {
      result = search::solve(model::ground(domain, problem), config_.algorithm,
                             config_.heuristic, config_.limits);
    } else {
      fix::SoftGoalSolveResult soft = fix::solve_with_soft_goals(
          domain, problem, config_.algorithm, config_.heuristic,
          config_.limits);
      result = std::move(soft.result);
      result.expansions = soft.total_expansions;
    }
    trace.add("solver-call", {{"status", search::to_string(result.status)},
                              {"expansions", result.expansions}});
    return result;
  }

  GetPlanResult repair(const model::Domain &domain,
                       const model::Problem &problem,
                       const sig::ProblemSignature &signature,
                       search::SearchResult result, GetPlanResult &out) {
    Trace &trace = out.trace;
    model::Domain current_domain = domain;
    model::Problem current_problem = problem;
    fix::DomainFix merged;

    for (int round = 0; round < config_.max_repair_rounds; ++round) {
      if (!result.certificate) {
        trace.add("warning", {{"message", "unsolvable without certificate; "
                                          "cannot run gap analysis"}});
        break;
      }
      std::optional<advisor::GapAnalysis> analysis;
      try {
        trace.add("advisor-call", {{"mode", "gap_analysis"}});
        analysis = config_.advisor->gap_analysis_for_domain(
            current_domain, current_problem, *result.certificate);
      } catch (const advisor::AdvisorUnavailable &e) {
        trace.add("warning",
                  {{"message", std::string("advisor unavailable during "
                                           "repair: ") +
                                   e.what()}});
        return finish_absent(out, search::Status::Unsolvable,
                             "advisor-unavailable");
      }
      if (!analysis) // the advisor agrees: truly unsolvable
        return finish_absent(out, search::Status::Unsolvable, "unsolvable");

      fix::DomainFix fixes;
      try {
        std::vector<std::string> warnings;
        fixes = fix::parse_fix(analysis->to_json(), &warnings);
        for (const auto &w : warnings) trace.add("warning", {{"message", w}});
        merge_fix(merged, fixes);
        cache_flaw(signature, merged, trace);
        auto [fixed_domain, fixed_problem] =
            fix::apply_fixes(current_domain, current_problem, fixes);
        trace.add("fix-applied");
        current_domain = std::move(fixed_domain);
        current_problem = std::move(fixed_problem);
      } catch (const fix::FixError &e) {
        trace.add("warning",
                  {{"message", std::string("advisor fix rejected: ") + e.what()}});
        return finish_absent(out, search::Status::Unsolvable, "unsolvable");
      }

      // The plan found here is deliberately NOT cached: a later call promotes
      // the flaw to a plan through Branch 2, matching the amortized cost
      // accounting (worst case pays one cache write, the flaw).
      result = run_solver(current_domain, current_problem, trace);
      if (result.status == search::Status::Solved) {
        validate::Verdict verdict = validate::validate_plan(
            current_domain, current_problem, *result.plan);
        if (!verdict.valid()) {
          trace.add("warning", {{"message", "solver plan failed validation "
                                            "on the repaired domain: " +
                                                verdict.describe()}});
          return finish_absent(out, search::Status::Unsolvable, "unsolvable");
        }
        return finish(out, std::move(*result.plan), "repaired-domain");
      }
      if (result.status == search::Status::Timeout)
        return finish_absent(out, search::Status::Timeout, "timeout");
    }
    return finish_absent(out, search::Status::Unsolvable, "unsolvable");
  }

  static void merge_fix(fix::DomainFix &into, const fix::DomainFix &from) {
    for (const auto &a : from.missing_actions) into.missing_actions.push_back(a);
    for (const auto &mp : from.missing_preconditions) {
      bool present = false;
      for (const auto &e : into.missing_preconditions)
        if (e == mp) present = true;
      if (!present) into.missing_preconditions.push_back(mp);
    }
    for (const auto &sg : from.added_soft_goals) {
      bool present = false;
      for (const auto &e : into.added_soft_goals)
        if (e == sg) present = true;
      if (!present) into.added_soft_goals.push_back(sg);
    }
    for (const auto &atom : from.added_subgoals) {
      bool present = false;
      for (const auto &e : into.added_subgoals)
        if (e == atom) present = true;
      if (!present) into.added_subgoals.push_back(atom);
    }
    for (const auto &[key, value] : from.passthrough.items())
      into.passthrough[key] = value;
  }

  bool revalidate(const model::Domain &domain, const model::Problem &problem,
                  const sig::ProblemSignature &signature,
                  const model::Plan &plan, Trace &trace) {
    if (validate::validate_plan(domain, problem, plan).valid()) return true;
    // a repaired-domain plan cannot validate against the unrepaired domain;
    // reconstruct the repaired pair through the stored flaw
    auto flaw = cache_->get_flaw(signature);
    if (!flaw) return false;
    try {
      auto [fixed_domain, fixed_problem] =
          fix::apply_fixes(domain, problem, flaw->fix);
      return validate::validate_plan(fixed_domain, fixed_problem, plan).valid();
    } catch (const fix::FixError &e) {
      trace.add("warning",
                {{"message",
                  std::string("stored flaw failed to reconstruct the repaired "
                              "domain: ") +
                      e.what()}});
      return false;
    }
  }

  void cache_plan(const sig::ProblemSignature &signature,
                  const model::Plan &plan, cache::Provenance provenance,
                  Trace &trace) {
    if (!cache_) return;
    try {
      cache::PlanRecord record;
      record.plan = plan;
      record.created_at = cache::now_iso8601();
      record.provenance = provenance;
      cache_->put_plan(signature, std::move(record));
      trace.add("plan-cached",
                {{"provenance", cache::to_string(provenance)}});
    } catch (const cache::CacheError &e) {
      trace.add("warning", {{"message", std::string("plan cache write "
                                                    "failed: ") +
                                            e.what()}});
    }
  }

  void cache_flaw(const sig::ProblemSignature &signature,
                  const fix::DomainFix &fixes, Trace &trace) {
    if (!cache_) return;
    try {
      cache::FlawRecord record;
      record.fix = fixes;
      record.created_at = cache::now_iso8601();
      record.advisor_backend =
          config_.advisor != nullptr ? config_.advisor->id() : "";
      cache_->put_flaw(signature, std::move(record));
      trace.add("flaw-cached");
    } catch (const cache::CacheError &e) {
      trace.add("warning", {{"message", std::string("flaw cache write "
                                                    "failed: ") +
                                            e.what()}});
    }
  }

  void drain_cache_warnings(Trace &trace) {
    if (!cache_) return;
    for (const auto &w : cache_->drain_warnings())
      trace.add("warning", {{"message", w}});
  }

  std::unique_lock<std::mutex> lock_signature(const std::string &key) {
    std::unique_lock<std::mutex> map_guard(signature_mutexes_lock_);
    auto &slot = signature_mutexes_[key];
    if (!slot) slot = std::make_unique<std::mutex>();
    std::mutex &m = *slot;
    map_guard.unlock();
    return std::unique_lock<std::mutex>(m);
  }

  PlannerConfig config_;
  std::unique_ptr<cache::Cache> cache_;
  std::mutex signature_mutexes_lock_;
  std::map<std::string, std::unique_ptr<std::mutex>> signature_mutexes_;
};

} // namespace planner::hybrid

#endif
