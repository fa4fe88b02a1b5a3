#ifndef PLANNER_VALIDATE_HPP
#define PLANNER_VALIDATE_HPP

#include <map>
#include <set>
#include <string>
#include <vector>

#include "planner/model.hpp"

namespace planner::validate {

enum class VerdictKind {
  Valid,
  UnknownAction,
  BadArguments,
  PreconditionFailure,
  GoalUnsatisfied
};

struct Verdict {
  VerdictKind kind = VerdictKind::Valid;
  int failing_step = -1;           // 0-based plan index for step-level failures
  std::string failing_action;
  std::string unmet_atom;          // precondition failures
  std::vector<std::string> missing_goal_atoms;
  std::vector<std::string> satisfied_soft_goals;
  std::vector<std::string> unsatisfied_soft_goals;

  bool valid() const { return kind == VerdictKind::Valid; }

  std::string describe() const {
    switch (kind) {
    case VerdictKind::Valid:
      return "valid";
    case VerdictKind::UnknownAction:
      return "step " + std::to_string(failing_step + 1) + ": unknown action " +
             failing_action;
    case VerdictKind::BadArguments:
      return "step " + std::to_string(failing_step + 1) +
             ": bad arguments for " + failing_action + " (" + unmet_atom + ")";
    case VerdictKind::PreconditionFailure:
      return "step " + std::to_string(failing_step + 1) + ": " +
             failing_action + " requires " + unmet_atom;
    case VerdictKind::GoalUnsatisfied: {
      std::string out = "goal unsatisfied:";
      for (const auto &a : missing_goal_atoms) out += " " + a;
      return out;
    }
    }
    return "?";
  }
};

// The validator deliberately avoids the grounder: it interprets the lifted
// model directly over a set of atom strings (bind arguments, substitute,
// check) so that it can cross-check the search module's successor generator.
namespace internal {

inline std::string bind_atom(const model::Atom &atom,
                             const std::map<std::string, std::string> &binding) {
  std::vector<std::string> args;
  for (const auto &term : atom.args) {
    if (term.is_variable) {
      args.push_back(binding.at(term.name));
    } else {
      args.push_back(term.name);
    }
  }
  return model::GroundAtom{atom.predicate, args}.text();
}

} // namespace internal

inline Verdict validate_plan(const model::Domain &domain,
                             const model::Problem &problem,
                             const model::Plan &plan) {
  Verdict verdict;

  std::map<std::string, std::string> object_type;
  for (const auto &c : domain.constants) object_type[c.name] = c.type;
  for (const auto &o : problem.objects) object_type[o.name] = o.type;

  std::set<std::string> state;
  for (const auto &atom : problem.init) state.insert(atom.text());

  for (size_t step = 0; step < plan.steps.size(); ++step) {
    const auto &call = plan.steps[step];
    const model::ActionSchema *schema = domain.find_action(call.name);
    if (schema == nullptr) {
      verdict.kind = VerdictKind::UnknownAction;
      verdict.failing_step = static_cast<int>(step);
      verdict.failing_action = call.text();
      return verdict;
    }
    if (schema->params.size() != call.args.size()) {
      verdict.kind = VerdictKind::BadArguments;
      verdict.failing_step = static_cast<int>(step);
      verdict.failing_action = call.text();
      verdict.unmet_atom = "expected " + std::to_string(schema->params.size()) +
                           " arguments, got " + std::to_string(call.args.size());
      return verdict;
    }
    std::map<std::string, std::string> binding;
    for (size_t i = 0; i < call.args.size(); ++i) {
      auto it = object_type.find(call.args[i]);
      if (it == object_type.end() ||
          !domain.is_subtype(it->second, schema->params[i].type)) {
        verdict.kind = VerdictKind::BadArguments;
        verdict.failing_step = static_cast<int>(step);
        verdict.failing_action = call.text();
        verdict.unmet_atom = "argument '" + call.args[i] + "' is not a " +
                             schema->params[i].type;
        return verdict;
      }
      binding[schema->params[i].name] = call.args[i];
    }
    for (const auto &lit : schema->preconditions) {
      std::string atom = internal::bind_atom(lit.atom, binding);
      bool holds = state.count(atom) > 0;
      if (holds == lit.negated) {
        verdict.kind = VerdictKind::PreconditionFailure;
        verdict.failing_step = static_cast<int>(step);
        verdict.failing_action = call.text();
        verdict.unmet_atom = lit.negated ? "!" + atom : atom;
        return verdict;
      }
    }
    // delete, then add
    for (const auto &atom : schema->delete_effects)
      state.erase(internal::bind_atom(atom, binding));
    for (const auto &atom : schema->add_effects)
      state.insert(internal::bind_atom(atom, binding));
  }

  for (const auto &lit : problem.goal) {
    bool holds = state.count(lit.atom.text()) > 0;
    if (holds == lit.negated)
      verdict.missing_goal_atoms.push_back(lit.text());
  }
  if (!verdict.missing_goal_atoms.empty()) {
    verdict.kind = VerdictKind::GoalUnsatisfied;
    return verdict;
  }

  for (const auto &sg : problem.soft_goals) {
    if (state.count(sg.atom.text()))
      verdict.satisfied_soft_goals.push_back(sg.atom.text());
    else
      verdict.unsatisfied_soft_goals.push_back(sg.atom.text());
  }
  return verdict;
}

/// End-state soft-goal penalty of a valid plan.
inline int soft_goal_penalty(const model::Problem &problem,
                             const Verdict &verdict) {
  int penalty = 0;
  for (const auto &sg : problem.soft_goals) {
    bool satisfied = false;
    for (const auto &s : verdict.satisfied_soft_goals)
      if (s == sg.atom.text()) satisfied = true;
    if (!satisfied) penalty += sg.penalty;
  }
  return penalty;
}

} // namespace planner::validate

#endif
