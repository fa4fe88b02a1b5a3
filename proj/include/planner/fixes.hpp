#ifndef PLANNER_FIXES_HPP
#define PLANNER_FIXES_HPP

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "planner/detail/text.hpp"
#include "planner/model.hpp"
#include "planner/pddl.hpp"
#include "planner/search.hpp"
#include "planner/validate.hpp"

namespace planner::fix {

struct FixError : Error {
  using Error::Error;
};

struct MissingPrecondition {
  std::string action;
  std::string atom; // name(arg,...) — args may be ?params of the action
  std::string why;

  friend bool operator==(const MissingPrecondition &,
                         const MissingPrecondition &) = default;
};

/// Structured domain/problem delta: new action schemas, strengthened
/// preconditions, extra soft goals and extra hard-goal conjuncts.
struct DomainFix {
  std::vector<model::ActionSchema> missing_actions;
  std::vector<MissingPrecondition> missing_preconditions;
  std::vector<model::SoftGoal> added_soft_goals;
  std::vector<model::GroundAtom> added_subgoals;
  nlohmann::json passthrough = nlohmann::json::object(); // unknown keys, kept

  bool empty() const {
    return missing_actions.empty() && missing_preconditions.empty() &&
           added_soft_goals.empty() && added_subgoals.empty();
  }
  friend bool operator==(const DomainFix &a, const DomainFix &b) {
    return a.missing_actions == b.missing_actions &&
           a.missing_preconditions == b.missing_preconditions &&
           a.added_soft_goals == b.added_soft_goals &&
           a.added_subgoals == b.added_subgoals &&
           a.passthrough == b.passthrough;
  }
};

// Wire format: the gap-analysis response schema plus the extensions
// "action_definitions" (name -> "(:action ...)" text), "added_subgoals" and
// "added_soft_goals". "suggested_plan" and "rationale" ride through untouched.
inline DomainFix parse_fix(const nlohmann::json &doc,
                           std::vector<std::string> *warnings = nullptr) {
  if (!doc.is_object()) throw FixError("fix document must be a JSON object");
  DomainFix out;

  std::map<std::string, std::string> definitions;
  if (doc.contains("action_definitions")) {
    if (!doc["action_definitions"].is_object())
      throw FixError("action_definitions must map names to action text");
    for (const auto &[name, text] : doc["action_definitions"].items())
      definitions[detail::to_lower(name)] = text.get<std::string>();
  }
  if (doc.contains("missing_actions")) {
    if (!doc["missing_actions"].is_array())
      throw FixError("missing_actions must be an array of names");
    for (const auto &entry : doc["missing_actions"]) {
      std::string name = detail::to_lower(entry.get<std::string>());
      auto def = definitions.find(name);
      if (def == definitions.end())
        throw FixError("missing_actions entry '" + name +
                       "' has no action_definitions entry; the name alone is "
                       "not enough to repair a domain");
      model::ActionSchema schema = pddl::parse_action_schema(def->second);
      if (schema.name != name)
        throw FixError("action_definitions entry '" + name +
                       "' defines action '" + schema.name + "'");
      out.missing_actions.push_back(std::move(schema));
    }
  }
  if (doc.contains("missing_preconditions")) {
    if (!doc["missing_preconditions"].is_array())
      throw FixError("missing_preconditions must be an array");
    for (const auto &entry : doc["missing_preconditions"]) {
      if (!entry.is_object() || !entry.contains("action") ||
          !entry.contains("atom"))
        throw FixError("missing_preconditions entries need action and atom");
      MissingPrecondition mp;
      mp.action = detail::to_lower(entry["action"].get<std::string>());
      mp.atom = detail::to_lower(entry["atom"].get<std::string>());
      if (entry.contains("why")) mp.why = entry["why"].get<std::string>();
      out.missing_preconditions.push_back(std::move(mp));
    }
  }
  if (doc.contains("added_soft_goals")) {
    for (const auto &entry : doc["added_soft_goals"]) {
      if (!entry.is_object() || !entry.contains("atom") ||
          !entry.contains("penalty"))
        throw FixError("added_soft_goals entries need atom and penalty");
      auto parsed = detail::parse_atom_text(entry["atom"].get<std::string>());
      int penalty = entry["penalty"].get<int>();
      if (penalty < 0) throw FixError("negative soft-goal penalty");
      out.added_soft_goals.push_back(
          model::SoftGoal{model::GroundAtom{parsed.name, parsed.args}, penalty});
    }
  }
  if (doc.contains("added_subgoals")) {
    for (const auto &entry : doc["added_subgoals"]) {
      auto parsed = detail::parse_atom_text(entry.get<std::string>());
      out.added_subgoals.push_back(model::GroundAtom{parsed.name, parsed.args});
    }
  }

  static const std::vector<std::string> known{
      "missing_actions", "action_definitions", "missing_preconditions",
      "added_soft_goals", "added_subgoals", "suggested_plan", "rationale"};
  for (const auto &[key, value] : doc.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      if (warnings)
        warnings->push_back("fix document: unknown key \"" + key +
                            "\" preserved as-is");
      out.passthrough[key] = value;
    } else if (key == "suggested_plan" || key == "rationale") {
      out.passthrough[key] = value;
    }
  }
  return out;
}

inline DomainFix parse_fix(const std::string &text,
                           std::vector<std::string> *warnings = nullptr) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception &e) {
    throw FixError(std::string("fix document is not valid JSON: ") + e.what());
  }
  return parse_fix(doc, warnings);
}

inline nlohmann::json print_fix(const DomainFix &fix) {
  nlohmann::json doc = nlohmann::json::object();
  nlohmann::json names = nlohmann::json::array();
  nlohmann::json defs = nlohmann::json::object();
  for (const auto &schema : fix.missing_actions) {
    names.push_back(schema.name);
    defs[schema.name] = pddl::print_action_schema(schema);
  }
  doc["missing_actions"] = names;
  if (!defs.empty()) doc["action_definitions"] = defs;
  nlohmann::json pres = nlohmann::json::array();
  for (const auto &mp : fix.missing_preconditions)
    pres.push_back({{"action", mp.action}, {"atom", mp.atom}, {"why", mp.why}});
  doc["missing_preconditions"] = pres;
  if (!fix.added_soft_goals.empty()) {
    nlohmann::json soft = nlohmann::json::array();
    for (const auto &sg : fix.added_soft_goals)
      soft.push_back({{"atom", sg.atom.text()}, {"penalty", sg.penalty}});
    doc["added_soft_goals"] = soft;
  }
  if (!fix.added_subgoals.empty()) {
    nlohmann::json subs = nlohmann::json::array();
    for (const auto &atom : fix.added_subgoals) subs.push_back(atom.text());
    doc["added_subgoals"] = subs;
  }
  for (const auto &[key, value] : fix.passthrough.items()) doc[key] = value;
  return doc;
}

namespace internal {

// Turns a fix atom like "microwave-on(microwave1)" or "inspected(?c,platform-a)"
// into a lifted literal over the target schema: ?names must be schema
// parameters; bare names may be domain constants, or objects that lift to the
// unique parameter of a compatible type.
inline model::Literal lift_fix_atom(const model::Domain &domain,
                                    const model::Problem &problem,
                                    const model::ActionSchema &schema,
                                    const std::string &atom_text) {
  auto parsed = detail::parse_atom_text(atom_text);
  const model::Predicate *pred = domain.find_predicate(parsed.name);
  if (pred == nullptr)
    throw FixError("fix atom uses undeclared predicate: " + atom_text);
  if (pred->params.size() != parsed.args.size())
    throw FixError("fix atom arity mismatch: " + atom_text);

  std::map<std::string, std::string> object_type;
  for (const auto &c : domain.constants) object_type[c.name] = c.type;
  for (const auto &o : problem.objects) object_type[o.name] = o.type;

  model::Atom atom{parsed.name, {}};
  for (size_t i = 0; i < parsed.args.size(); ++i) {
    const std::string &arg = parsed.args[i];
    if (!arg.empty() && arg.front() == '?') {
      std::string var = arg.substr(1);
      bool is_param = false;
      for (const auto &p : schema.params)
        if (p.name == var) is_param = true;
      if (!is_param)
        throw FixError("fix atom " + atom_text + " references ?" + var +
                       ", which is not a parameter of " + schema.name);
      atom.args.push_back(model::variable(var));
      continue;
    }
    bool is_constant = false;
    for (const auto &c : domain.constants)
      if (c.name == arg) is_constant = true;
    if (is_constant) {
      atom.args.push_back(model::constant(arg));
      continue;
    }
    auto ot = object_type.find(arg);
    if (ot == object_type.end())
      throw FixError("fix atom " + atom_text + " references unknown name '" +
                     arg + "'");
    // a problem object cannot appear in a schema: lift it to the unique
    // parameter whose type admits the object
    std::vector<std::string> candidates;
    for (const auto &p : schema.params)
      if (domain.is_subtype(ot->second, p.type)) candidates.push_back(p.name);
    if (candidates.size() != 1)
      throw FixError("fix atom " + atom_text + ": object '" + arg +
                     "' does not lift to a unique parameter of " + schema.name);
    atom.args.push_back(model::variable(candidates.front()));
  }
  return model::Literal{std::move(atom), false};
}

} // namespace internal

/// Compiles a fix into a repaired (domain, problem): new schemas, strengthened
/// preconditions, subgoals conjoined into the hard goal, soft goals appended.
/// Inputs are untouched; idempotent for missing-preconditions.
inline std::pair<model::Domain, model::Problem>
apply_fixes(const model::Domain &domain, const model::Problem &problem,
            const DomainFix &fix) {
  if (fix.empty()) throw FixError("fix has no content");

  model::Domain new_domain = domain;
  model::Problem new_problem = problem;

  for (const auto &schema : fix.missing_actions) {
    if (new_domain.find_action(schema.name) != nullptr)
      throw FixError("fix adds action '" + schema.name +
                     "', which already exists");
    new_domain.actions.push_back(schema);
  }
  for (const auto &mp : fix.missing_preconditions) {
    model::ActionSchema *target = nullptr;
    for (auto &a : new_domain.actions)
      if (a.name == mp.action) target = &a;
    if (target == nullptr)
      throw FixError("missing_preconditions names unknown action '" +
                     mp.action + "'");
    model::Literal lit =
        internal::lift_fix_atom(new_domain, new_problem, *target, mp.atom);
    bool present = false;
    for (const auto &existing : target->preconditions)
      if (existing == lit) present = true;
    if (!present) target->preconditions.push_back(std::move(lit));
  }
  for (const auto &atom : fix.added_subgoals) {
    if (new_domain.find_predicate(atom.predicate) == nullptr)
      throw FixError("added subgoal uses undeclared predicate: " + atom.text());
    for (const auto &arg : atom.args)
      if (!arg.empty() && arg.front() == '?')
        throw FixError("added subgoal must be ground: " + atom.text());
    model::GroundLiteral lit{atom, false};
    bool present = false;
    for (const auto &existing : new_problem.goal)
      if (existing == lit) present = true;
    if (!present) new_problem.goal.push_back(lit);
  }
  for (const auto &sg : fix.added_soft_goals) {
    if (new_domain.find_predicate(sg.atom.predicate) == nullptr)
      throw FixError("added soft goal uses undeclared predicate: " +
                     sg.atom.text());
    bool present = false;
    for (const auto &existing : new_problem.soft_goals)
      if (existing == sg) present = true;
    if (!present) new_problem.soft_goals.push_back(sg);
  }

  model::check_domain_invariants(new_domain);
  return {std::move(new_domain), std::move(new_problem)};
}

// --- soft-goal compilation ---

struct SoftGoalSolveResult {
  search::SearchResult result;   // the chosen subset's search outcome
  int cost = 0;                  // plan length + end-state penalty
  int penalty = 0;
  uint64_t total_expansions = 0; // across all subsets tried
  std::vector<std::string> satisfied_soft_goals;
};

/// Plan cost is length plus the penalties of soft goals unsatisfied at the
/// end. Solves the hard goal alone and conjoined with every soft-goal subset
/// (power set; at most 4 soft goals), and keeps the cheapest valid plan.
inline SoftGoalSolveResult
solve_with_soft_goals(const model::Domain &domain, const model::Problem &problem,
                      search::Algorithm algo, search::Heuristic heuristic,
                      const search::SearchLimits &limits = {}) {
  SoftGoalSolveResult best;
  const auto &soft = problem.soft_goals;
  if (soft.size() > 4)
    throw FixError("soft-goal compilation supports at most 4 soft goals, got " +
                   std::to_string(soft.size()));

  if (soft.empty()) {
    best.result = search::solve(model::ground(domain, problem), algo, heuristic,
                                limits);
    best.total_expansions = best.result.expansions;
    if (best.result.status == search::Status::Solved)
      best.cost = static_cast<int>(best.result.plan->length());
    return best;
  }

  bool have_best = false;
  for (uint32_t mask = 0; mask < (1u << soft.size()); ++mask) {
    model::Problem candidate = problem;
    for (size_t i = 0; i < soft.size(); ++i) {
      if (!(mask & (1u << i))) continue;
      model::GroundLiteral lit{soft[i].atom, false};
      bool present = false;
      for (const auto &g : candidate.goal)
        if (g == lit) present = true;
      if (!present) candidate.goal.push_back(lit);
    }
    search::SearchResult sub =
        search::solve(model::ground(domain, candidate), algo, heuristic, limits);
    best.total_expansions += sub.expansions;
    if (mask == 0 && sub.status != search::Status::Solved) {
      // hard goal alone is unsolvable or timed out; supersets cannot do better
      best.result = std::move(sub);
      return best;
    }
    if (sub.status != search::Status::Solved) continue;

    validate::Verdict verdict =
        validate::validate_plan(domain, problem, *sub.plan);
    int penalty = validate::soft_goal_penalty(problem, verdict);
    int cost = static_cast<int>(sub.plan->length()) + penalty;
    if (!have_best || cost < best.cost ||
        (cost == best.cost &&
         sub.plan->length() < best.result.plan->length())) {
      best.result = std::move(sub);
      best.cost = cost;
      best.penalty = penalty;
      best.satisfied_soft_goals = verdict.satisfied_soft_goals;
      have_best = true;
    }
  }
  return best;
}

} // namespace planner::fix

#endif
