#ifndef PLANNER_MODEL_HPP
#define PLANNER_MODEL_HPP

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "planner/detail/text.hpp"

namespace planner {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ModelError : Error {
  using Error::Error;
};

namespace model {

/// A term in a lifted literal: either a schema variable (?x) or a constant.
struct Term {
  bool is_variable = false;
  std::string name;

  friend bool operator==(const Term &a, const Term &b) {
    return a.is_variable == b.is_variable && a.name == b.name;
  }
  friend auto operator<=>(const Term &a, const Term &b) = default;
};

inline Term variable(std::string name) { return Term{true, std::move(name)}; }
inline Term constant(std::string name) { return Term{false, std::move(name)}; }

struct Atom {
  std::string predicate;
  std::vector<Term> args;

  friend bool operator==(const Atom &, const Atom &) = default;
  friend auto operator<=>(const Atom &, const Atom &) = default;
};

struct Literal {
  Atom atom;
  bool negated = false;

  friend bool operator==(const Literal &, const Literal &) = default;
  friend auto operator<=>(const Literal &, const Literal &) = default;
};

struct Parameter {
  std::string name;
  std::string type;

  friend bool operator==(const Parameter &, const Parameter &) = default;
};

struct Predicate {
  std::string name;
  std::vector<Parameter> params;

  friend bool operator==(const Predicate &, const Predicate &) = default;
};

struct ActionSchema {
  std::string name;
  std::vector<Parameter> params;
  std::vector<Literal> preconditions;
  std::vector<Atom> add_effects;
  std::vector<Atom> delete_effects;

  friend bool operator==(const ActionSchema &, const ActionSchema &) = default;
};

struct TypeDef {
  std::string name;
  std::string parent; // empty only for the root "object"

  friend bool operator==(const TypeDef &, const TypeDef &) = default;
};

struct TypedObject {
  std::string name;
  std::string type;

  friend bool operator==(const TypedObject &, const TypedObject &) = default;
  friend auto operator<=>(const TypedObject &, const TypedObject &) = default;
};

struct Domain {
  std::string name;
  std::vector<std::string> requirements;
  std::vector<TypeDef> types; // excludes the implicit root "object"
  std::vector<Predicate> predicates;
  std::vector<TypedObject> constants;
  std::vector<ActionSchema> actions;

  const Predicate *find_predicate(const std::string &n) const {
    for (const auto &p : predicates)
      if (p.name == n) return &p;
    return nullptr;
  }
  const ActionSchema *find_action(const std::string &n) const {
    for (const auto &a : actions)
      if (a.name == n) return &a;
    return nullptr;
  }
  bool is_subtype(const std::string &type, const std::string &super) const {
    if (super == "object" || type == super) return true;
    std::string cur = type;
    // hierarchy is validated acyclic on construction; walk to root
    while (true) {
      const TypeDef *def = nullptr;
      for (const auto &t : types)
        if (t.name == cur) def = &t;
      if (def == nullptr || def->parent.empty()) return false;
      if (def->parent == super) return true;
      cur = def->parent;
    }
  }
};

struct GroundAtom {
  std::string predicate;
  std::vector<std::string> args;

  std::string text() const {
    return detail::format_atom_text(predicate, args);
  }
  friend bool operator==(const GroundAtom &, const GroundAtom &) = default;
  friend auto operator<=>(const GroundAtom &, const GroundAtom &) = default;
};

struct GroundLiteral {
  GroundAtom atom;
  bool negated = false;

  std::string text() const {
    return negated ? "!" + atom.text() : atom.text();
  }
  friend bool operator==(const GroundLiteral &, const GroundLiteral &) = default;
  friend auto operator<=>(const GroundLiteral &, const GroundLiteral &) = default;
};

struct SoftGoal {
  GroundAtom atom;
  int penalty = 0; // cost units, >= 0

  friend bool operator==(const SoftGoal &, const SoftGoal &) = default;
  friend auto operator<=>(const SoftGoal &, const SoftGoal &) = default;
};

struct Problem {
  std::string name;
  std::string domain_name;
  std::vector<TypedObject> objects;
  std::vector<GroundAtom> init;
  std::vector<GroundLiteral> goal;
  std::vector<SoftGoal> soft_goals;
};

/// One step of a plan, as written in .plan files: an action name plus bound
/// object arguments. Kept string-based so the validator and the caches stay
/// independent of any grounding.
struct ActionCall {
  std::string name;
  std::vector<std::string> args;

  std::string text() const { return detail::format_atom_text(name, args); }

  static ActionCall parse(std::string_view text) {
    auto parsed = detail::parse_atom_text(text);
    return ActionCall{std::move(parsed.name), std::move(parsed.args)};
  }
  friend bool operator==(const ActionCall &, const ActionCall &) = default;
};

struct Plan {
  std::vector<ActionCall> steps;

  size_t length() const { return steps.size(); }
  bool contains_action(const std::string &name) const {
    for (const auto &s : steps)
      if (s.name == name) return true;
    return false;
  }
  std::string text() const {
    std::string out;
    for (const auto &s : steps) {
      out += s.text();
      out.push_back('\n');
    }
    return out;
  }
  friend bool operator==(const Plan &, const Plan &) = default;
};

/// Membership bitset over the ground task's atom table.
class GroundState {
public:
  GroundState() = default;
  explicit GroundState(size_t atom_count)
      : nbits_(atom_count), words_((atom_count + 63) / 64, 0) {}

  size_t size() const { return nbits_; }

  bool test(size_t i) const {
    return (words_[i >> 6] >> (i & 63)) & 1u;
  }
  void set(size_t i) {
    if (i >= nbits_) throw ModelError("atom index out of range");
    words_[i >> 6] |= uint64_t{1} << (i & 63);
  }
  void reset(size_t i) {
    if (i >= nbits_) throw ModelError("atom index out of range");
    words_[i >> 6] &= ~(uint64_t{1} << (i & 63));
  }
  size_t count() const {
    size_t n = 0;
    for (uint64_t w : words_) n += static_cast<size_t>(__builtin_popcountll(w));
    return n;
  }
  bool is_superset_of(const GroundState &other) const {
    for (size_t i = 0; i < words_.size(); ++i)
      if ((other.words_[i] & ~words_[i]) != 0) return false;
    return true;
  }

  size_t hash() const {
    size_t h = nbits_;
    for (uint64_t w : words_) {
      h ^= static_cast<size_t>(w) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    }
    return h;
  }

  friend bool operator==(const GroundState &, const GroundState &) = default;

private:
  size_t nbits_ = 0;
  std::vector<uint64_t> words_;
};

struct GroundStateHash {
  size_t operator()(const GroundState &s) const { return s.hash(); }
};

/// A fully instantiated action over the atom table. Index vectors are sorted.
struct GroundAction {
  std::string name;
  std::vector<std::string> args;
  std::vector<int> pre_pos;
  std::vector<int> pre_neg;
  std::vector<int> add;
  std::vector<int> del;
  int cost = 1;

  std::string call() const { return detail::format_atom_text(name, args); }
  ActionCall as_call() const { return ActionCall{name, args}; }
};

/// Immutable grounding of (domain, problem); safe to share across threads.
struct GroundTask {
  std::vector<GroundAtom> atoms; // sorted by (predicate, args)
  std::map<std::string, int> atom_index; // atom text -> index
  std::vector<GroundAction> actions;     // sorted by call string
  GroundState init;
  std::vector<int> goal_pos;
  std::vector<int> goal_neg;
  std::vector<std::pair<int, int>> soft_goals; // (atom index, penalty)

  size_t atom_count() const { return atoms.size(); }

  int index_of(const GroundAtom &atom) const {
    auto it = atom_index.find(atom.text());
    return it == atom_index.end() ? -1 : it->second;
  }
  bool goal_satisfied(const GroundState &s) const {
    for (int i : goal_pos)
      if (!s.test(static_cast<size_t>(i))) return false;
    for (int i : goal_neg)
      if (s.test(static_cast<size_t>(i))) return false;
    return true;
  }
};

inline bool applicable(const GroundState &state, const GroundAction &action) {
  for (int i : action.pre_pos)
    if (!state.test(static_cast<size_t>(i))) return false;
  for (int i : action.pre_neg)
    if (state.test(static_cast<size_t>(i))) return false;
  return true;
}

namespace internal {
inline void apply_effects(const GroundAction &action, GroundState &state) {
  for (int i : action.del) state.reset(static_cast<size_t>(i));
  for (int i : action.add) state.set(static_cast<size_t>(i));
}
} // namespace internal

inline GroundState apply(const GroundTask &task, const GroundState &state,
                         const GroundAction &action) {
  for (int i : action.pre_pos) {
    if (!state.test(static_cast<size_t>(i))) {
      throw ModelError("precondition violated by " + action.call() + ": " +
                       task.atoms[static_cast<size_t>(i)].text());
    }
  }
  for (int i : action.pre_neg) {
    if (state.test(static_cast<size_t>(i))) {
      throw ModelError("negative precondition violated by " + action.call() +
                       ": " + task.atoms[static_cast<size_t>(i)].text());
    }
  }
  GroundState next = state;
  internal::apply_effects(action, next);
  return next;
}

// --- grounding ---

namespace internal {

struct ObjectTable {
  std::vector<TypedObject> objects; // constants + problem objects, sorted
  std::map<std::string, std::string> type_of;

  std::vector<std::string> of_type(const Domain &d,
                                   const std::string &type) const {
    std::vector<std::string> out;
    for (const auto &o : objects)
      if (d.is_subtype(o.type, type)) out.push_back(o.name);
    return out;
  }
};

inline ObjectTable build_object_table(const Domain &domain,
                                      const Problem &problem) {
  ObjectTable table;
  auto add = [&](const TypedObject &o, const char *what) {
    if (o.type != "object") {
      bool known = false;
      for (const auto &t : domain.types)
        if (t.name == o.type) known = true;
      if (!known)
        throw ModelError(std::string(what) + " '" + o.name +
                         "' has unknown type '" + o.type + "'");
    }
    if (table.type_of.count(o.name))
      throw ModelError(std::string("duplicate object name '") + o.name + "'");
    table.objects.push_back(o);
    table.type_of[o.name] = o.type;
  };
  for (const auto &c : domain.constants) add(c, "constant");
  for (const auto &o : problem.objects) add(o, "object");
  std::sort(table.objects.begin(), table.objects.end());
  return table;
}

inline void check_ground_atom(const Domain &domain, const ObjectTable &objects,
                              const GroundAtom &atom) {
  const Predicate *pred = domain.find_predicate(atom.predicate);
  if (pred == nullptr)
    throw ModelError("unknown predicate in atom " + atom.text());
  if (pred->params.size() != atom.args.size())
    throw ModelError("arity mismatch in atom " + atom.text());
  for (size_t i = 0; i < atom.args.size(); ++i) {
    auto it = objects.type_of.find(atom.args[i]);
    if (it == objects.type_of.end())
      throw ModelError("unknown object '" + atom.args[i] + "' in atom " +
                       atom.text());
    if (!domain.is_subtype(it->second, pred->params[i].type))
      throw ModelError("type error in atom " + atom.text() + ": '" +
                       atom.args[i] + "' is not a " + pred->params[i].type);
  }
}

} // namespace internal

/// Exhaustive deterministic grounding: the atom table holds every
/// type-consistent instantiation of every declared predicate, sorted
/// lexicographically; ground actions are sorted by their call string.
inline GroundTask ground(const Domain &domain, const Problem &problem) {
  internal::ObjectTable objects = internal::build_object_table(domain, problem);

  GroundTask task;
  for (const auto &pred : domain.predicates) {
    std::vector<std::vector<std::string>> pools;
    for (const auto &param : pred.params)
      pools.push_back(objects.of_type(domain, param.type));
    std::vector<size_t> idx(pools.size(), 0);
    bool empty_pool = false;
    for (const auto &pool : pools)
      if (pool.empty()) empty_pool = true;
    if (empty_pool) continue;
    while (true) {
      GroundAtom atom{pred.name, {}};
      for (size_t i = 0; i < pools.size(); ++i)
        atom.args.push_back(pools[i][idx[i]]);
      task.atoms.push_back(std::move(atom));
      size_t i = pools.size();
      while (i > 0) {
        --i;
        if (++idx[i] < pools[i].size()) break;
        idx[i] = 0;
        if (i == 0) goto done_pred;
      }
      if (pools.empty()) break;
    }
  done_pred:;
  }
  std::sort(task.atoms.begin(), task.atoms.end());
  task.atoms.erase(std::unique(task.atoms.begin(), task.atoms.end()),
                   task.atoms.end());
  for (size_t i = 0; i < task.atoms.size(); ++i)
    task.atom_index[task.atoms[i].text()] = static_cast<int>(i);

  auto atom_id = [&](const GroundAtom &a) {
    auto it = task.atom_index.find(a.text());
    if (it == task.atom_index.end())
      throw ModelError("atom outside the grounding: " + a.text());
    return it->second;
  };

  for (const auto &schema : domain.actions) {
    std::vector<std::vector<std::string>> pools;
    for (const auto &param : schema.params)
      pools.push_back(objects.of_type(domain, param.type));
    bool empty_pool = false;
    for (const auto &pool : pools)
      if (pool.empty()) empty_pool = true;
    if (empty_pool) continue;

    std::vector<size_t> idx(pools.size(), 0);
    while (true) {
      std::map<std::string, std::string> binding;
      GroundAction ga;
      ga.name = schema.name;
      for (size_t i = 0; i < pools.size(); ++i) {
        ga.args.push_back(pools[i][idx[i]]);
        binding[schema.params[i].name] = pools[i][idx[i]];
      }
      auto bind_atom = [&](const Atom &atom) {
        GroundAtom out{atom.predicate, {}};
        for (const auto &term : atom.args) {
          if (term.is_variable) {
            auto it = binding.find(term.name);
            if (it == binding.end())
              throw ModelError("unbound variable ?" + term.name +
                               " in action " + schema.name);
            out.args.push_back(it->second);
          } else {
            if (!objects.type_of.count(term.name))
              throw ModelError("unknown constant '" + term.name +
                               "' in action " + schema.name);
            out.args.push_back(term.name);
          }
        }
        return out;
      };
      for (const auto &lit : schema.preconditions) {
        int id = atom_id(bind_atom(lit.atom));
        (lit.negated ? ga.pre_neg : ga.pre_pos).push_back(id);
      }
      for (const auto &atom : schema.add_effects)
        ga.add.push_back(atom_id(bind_atom(atom)));
      for (const auto &atom : schema.delete_effects)
        ga.del.push_back(atom_id(bind_atom(atom)));

      auto dedupe = [](std::vector<int> &v) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
      };
      dedupe(ga.pre_pos);
      dedupe(ga.pre_neg);
      dedupe(ga.add);
      dedupe(ga.del);
      // delete-then-add semantics: an atom both added and deleted survives,
      // so drop it from the delete set to keep add/delete disjoint
      std::vector<int> del;
      for (int i : ga.del)
        if (!std::binary_search(ga.add.begin(), ga.add.end(), i))
          del.push_back(i);
      ga.del = std::move(del);

      task.actions.push_back(std::move(ga));

      if (pools.empty()) break;
      size_t i = pools.size();
      bool rolled_over = true;
      while (i > 0) {
        --i;
        if (++idx[i] < pools[i].size()) {
          rolled_over = false;
          break;
        }
        idx[i] = 0;
      }
      if (rolled_over) break;
    }
  }
  std::stable_sort(task.actions.begin(), task.actions.end(),
                   [](const GroundAction &a, const GroundAction &b) {
                     return a.call() < b.call();
                   });

  task.init = GroundState(task.atoms.size());
  for (const auto &atom : problem.init) {
    internal::check_ground_atom(domain, objects, atom);
    task.init.set(static_cast<size_t>(atom_id(atom)));
  }
  for (const auto &lit : problem.goal) {
    internal::check_ground_atom(domain, objects, lit.atom);
    (lit.negated ? task.goal_neg : task.goal_pos).push_back(atom_id(lit.atom));
  }
  for (const auto &sg : problem.soft_goals) {
    internal::check_ground_atom(domain, objects, sg.atom);
    if (sg.penalty < 0)
      throw ModelError("negative soft-goal penalty for " + sg.atom.text());
    task.soft_goals.emplace_back(atom_id(sg.atom), sg.penalty);
  }
  auto dedupe = [](std::vector<int> &v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  dedupe(task.goal_pos);
  dedupe(task.goal_neg);
  return task;
}

// --- structural model checks (used by parser and fixes) ---

inline void check_domain_invariants(const Domain &domain) {
  std::set<std::string> type_names{"object"};
  for (const auto &t : domain.types) {
    if (!type_names.insert(t.name).second && t.name != "object")
      throw ModelError("duplicate type '" + t.name + "'");
  }
  for (const auto &t : domain.types) {
    // acyclicity: walking parents must terminate
    std::set<std::string> seen{t.name};
    std::string cur = t.parent;
    while (!cur.empty() && cur != "object") {
      if (!seen.insert(cur).second)
        throw ModelError("type hierarchy cycle through '" + t.name + "'");
      const TypeDef *def = nullptr;
      for (const auto &u : domain.types)
        if (u.name == cur) def = &u;
      if (def == nullptr)
        throw ModelError("unknown parent type '" + cur + "'");
      cur = def->parent;
    }
  }
  std::set<std::string> pred_names;
  for (const auto &p : domain.predicates) {
    if (p.name.empty()) throw ModelError("predicate with empty name");
    if (!pred_names.insert(p.name).second)
      throw ModelError("duplicate predicate '" + p.name + "'");
    std::set<std::string> param_names;
    for (const auto &param : p.params)
      if (!param_names.insert(param.name).second)
        throw ModelError("duplicate parameter ?" + param.name +
                         " in predicate " + p.name);
  }
  std::set<std::string> action_names;
  for (const auto &a : domain.actions) {
    if (!action_names.insert(a.name).second)
      throw ModelError("duplicate action '" + a.name + "'");
    std::set<std::string> params;
    for (const auto &p : a.params)
      if (!params.insert(p.name).second)
        throw ModelError("duplicate parameter ?" + p.name + " in action " +
                         a.name);
    auto check_atom = [&](const Atom &atom) {
      if (domain.find_predicate(atom.predicate) == nullptr)
        throw ModelError("action " + a.name + " uses undeclared predicate '" +
                         atom.predicate + "'");
      for (const auto &term : atom.args)
        if (term.is_variable && !params.count(term.name))
          throw ModelError("action " + a.name + " uses unbound variable ?" +
                           term.name);
    };
    for (const auto &lit : a.preconditions) check_atom(lit.atom);
    for (const auto &atom : a.add_effects) check_atom(atom);
    for (const auto &atom : a.delete_effects) check_atom(atom);
    for (const auto &add : a.add_effects)
      for (const auto &del : a.delete_effects)
        if (add == del)
          throw ModelError("action " + a.name + " adds and deletes " +
                           add.predicate);
  }
}

// Order-insensitive comparison over declaration collections; parameter order
// stays significant.
inline bool structurally_equal(const Domain &a, const Domain &b) {
  if (a.name != b.name) return false;
  auto sorted_by_name = [](auto collection) {
    std::sort(collection.begin(), collection.end(),
              [](const auto &x, const auto &y) { return x.name < y.name; });
    return collection;
  };
  auto norm_schema = [](ActionSchema s) {
    std::sort(s.preconditions.begin(), s.preconditions.end());
    std::sort(s.add_effects.begin(), s.add_effects.end());
    std::sort(s.delete_effects.begin(), s.delete_effects.end());
    return s;
  };
  auto types_a = a.types, types_b = b.types;
  std::sort(types_a.begin(), types_a.end(),
            [](const TypeDef &x, const TypeDef &y) { return x.name < y.name; });
  std::sort(types_b.begin(), types_b.end(),
            [](const TypeDef &x, const TypeDef &y) { return x.name < y.name; });
  if (types_a != types_b) return false;
  if (sorted_by_name(a.predicates) != sorted_by_name(b.predicates))
    return false;
  auto consts_a = a.constants, consts_b = b.constants;
  std::sort(consts_a.begin(), consts_a.end());
  std::sort(consts_b.begin(), consts_b.end());
  if (consts_a != consts_b) return false;
  auto actions_a = sorted_by_name(a.actions);
  auto actions_b = sorted_by_name(b.actions);
  if (actions_a.size() != actions_b.size()) return false;
  for (size_t i = 0; i < actions_a.size(); ++i)
    if (norm_schema(actions_a[i]) != norm_schema(actions_b[i])) return false;
  return true;
}

inline bool structurally_equal(const Problem &a, const Problem &b) {
  if (a.name != b.name || a.domain_name != b.domain_name) return false;
  auto objs_a = a.objects, objs_b = b.objects;
  std::sort(objs_a.begin(), objs_a.end());
  std::sort(objs_b.begin(), objs_b.end());
  if (objs_a != objs_b) return false;
  auto init_a = a.init, init_b = b.init;
  std::sort(init_a.begin(), init_a.end());
  std::sort(init_b.begin(), init_b.end());
  if (init_a != init_b) return false;
  auto goal_a = a.goal, goal_b = b.goal;
  std::sort(goal_a.begin(), goal_a.end());
  std::sort(goal_b.begin(), goal_b.end());
  if (goal_a != goal_b) return false;
  auto soft_a = a.soft_goals, soft_b = b.soft_goals;
  std::sort(soft_a.begin(), soft_a.end());
  std::sort(soft_b.begin(), soft_b.end());
  return soft_a == soft_b;
}

} // namespace model
} // namespace planner

#endif
