#ifndef PLANNER_SEARCH_HPP
#define PLANNER_SEARCH_HPP

#include <chrono>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <optional>
#include <queue>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "planner/model.hpp"

namespace planner::search {

enum class Algorithm { Bfs, AStar, Gbfs, IdaStar, Ehc };
enum class Heuristic { GoalCount, HAdd, HMax, LmCount };

inline const char *to_string(Algorithm a) {
  switch (a) {
  case Algorithm::Bfs: return "bfs";
  case Algorithm::AStar: return "astar";
  case Algorithm::Gbfs: return "gbfs";
  case Algorithm::IdaStar: return "idastar";
  case Algorithm::Ehc: return "ehc";
  }
  return "?";
}
inline const char *to_string(Heuristic h) {
  switch (h) {
  case Heuristic::GoalCount: return "goalcount";
  case Heuristic::HAdd: return "hadd";
  case Heuristic::HMax: return "hmax";
  case Heuristic::LmCount: return "lmcount";
  }
  return "?";
}
inline std::optional<Algorithm> algorithm_from_string(const std::string &s) {
  if (s == "bfs") return Algorithm::Bfs;
  if (s == "astar") return Algorithm::AStar;
  if (s == "gbfs") return Algorithm::Gbfs;
  if (s == "idastar") return Algorithm::IdaStar;
  if (s == "ehc") return Algorithm::Ehc;
  return std::nullopt;
}
inline std::optional<Heuristic> heuristic_from_string(const std::string &s) {
  if (s == "goalcount") return Heuristic::GoalCount;
  if (s == "hadd") return Heuristic::HAdd;
  if (s == "hmax") return Heuristic::HMax;
  if (s == "lmcount") return Heuristic::LmCount;
  return std::nullopt;
}

struct SearchLimits {
  uint64_t max_expansions = 1'000'000;
  double timeout_seconds = 60.0;
};

enum class Status { Solved, Unsolvable, Timeout };

inline const char *to_string(Status s) {
  switch (s) {
  case Status::Solved: return "SOLVED";
  case Status::Unsolvable: return "UNSOLVABLE";
  case Status::Timeout: return "TIMEOUT";
  }
  return "?";
}

/// Why a task has no plan: goal atoms outside the delete-relaxed reachability
/// fixpoint, preconditions no action can ever supply, or plain exhaustion of
/// the (finite) state space.
struct UnsolvabilityCertificate {
  std::vector<std::string> unreachable_goal_atoms;
  std::vector<std::pair<std::string, std::string>> orphan_preconditions;
  bool exhausted = false;

  nlohmann::json to_json() const {
    nlohmann::json orphans = nlohmann::json::array();
    for (const auto &[action, atom] : orphan_preconditions)
      orphans.push_back({{"action", action}, {"atom", atom}});
    return {{"unreachable_goal_atoms", unreachable_goal_atoms},
            {"orphan_preconditions", orphans},
            {"exhausted", exhausted}};
  }
};

struct SearchResult {
  Status status = Status::Timeout;
  std::optional<model::Plan> plan;
  uint64_t expansions = 0;
  uint64_t generated = 0;
  double wall_seconds = 0.0;
  std::optional<UnsolvabilityCertificate> certificate;
  std::string timeout_reason;
};

namespace internal {

constexpr int kInf = std::numeric_limits<int>::max() / 4;

struct Reachability {
  model::GroundState atoms;           // relaxed-reachable atom set
  std::vector<bool> action_reachable; // pre_pos within the fixpoint
};

inline Reachability relaxed_fixpoint(const model::GroundTask &task,
                                     const model::GroundState &from) {
  Reachability r{from, std::vector<bool>(task.actions.size(), false)};
  bool changed = true;
  while (changed) {
    changed = false;
    for (size_t ai = 0; ai < task.actions.size(); ++ai) {
      if (r.action_reachable[ai]) continue;
      const auto &a = task.actions[ai];
      bool ok = true;
      for (int p : a.pre_pos)
        if (!r.atoms.test(static_cast<size_t>(p))) {
          ok = false;
          break;
        }
      if (!ok) continue;
      r.action_reachable[ai] = true;
      for (int add : a.add) {
        if (!r.atoms.test(static_cast<size_t>(add))) {
          r.atoms.set(static_cast<size_t>(add));
          changed = true;
        }
      }
    }
  }
  return r;
}

inline std::vector<std::pair<std::string, std::string>>
orphan_preconditions(const model::GroundTask &task) {
  model::GroundState added(task.atom_count());
  for (const auto &a : task.actions)
    for (int i : a.add) added.set(static_cast<size_t>(i));
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto &a : task.actions) {
    for (int p : a.pre_pos) {
      if (!added.test(static_cast<size_t>(p)) &&
          !task.init.test(static_cast<size_t>(p))) {
        out.emplace_back(a.call(), task.atoms[static_cast<size_t>(p)].text());
      }
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// h_max / h_add over the delete relaxation; negative preconditions and
// negative goal literals contribute zero.
inline int relaxation_heuristic(const model::GroundTask &task,
                                const model::GroundState &state, bool use_max) {
  std::vector<int> cost(task.atom_count(), kInf);
  for (size_t i = 0; i < task.atom_count(); ++i)
    if (state.test(i)) cost[i] = 0;
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto &a : task.actions) {
      int pre_cost = 0;
      for (int p : a.pre_pos) {
        int c = cost[static_cast<size_t>(p)];
        if (c >= kInf) {
          pre_cost = kInf;
          break;
        }
        pre_cost = use_max ? std::max(pre_cost, c) : pre_cost + c;
      }
      if (pre_cost >= kInf) continue;
      int via = pre_cost + a.cost;
      for (int add : a.add) {
        if (via < cost[static_cast<size_t>(add)]) {
          cost[static_cast<size_t>(add)] = via;
          changed = true;
        }
      }
    }
  }
  int h = 0;
  for (int g : task.goal_pos) {
    int c = cost[static_cast<size_t>(g)];
    if (c >= kInf) return kInf;
    h = use_max ? std::max(h, c) : h + c;
  }
  return h;
}

inline int goal_count(const model::GroundTask &task,
                      const model::GroundState &state) {
  int unsat = 0;
  for (int g : task.goal_pos)
    if (!state.test(static_cast<size_t>(g))) ++unsat;
  for (int g : task.goal_neg)
    if (state.test(static_cast<size_t>(g))) ++unsat;
  return unsat;
}

// Fact landmarks by backchaining over the delete relaxation: a fact's
// landmark set is itself plus everything shared by the preconditions of all
// of its reachable achievers. Computed relative to `state` as the new init.
inline int landmark_count(const model::GroundTask &task,
                          const model::GroundState &state) {
  const size_t n = task.atom_count();
  Reachability reach = relaxed_fixpoint(task, state);
  for (int g : task.goal_pos)
    if (!reach.atoms.test(static_cast<size_t>(g))) return kInf;

  // achievers[f] = reachable actions adding f
  std::vector<std::vector<int>> achievers(n);
  for (size_t ai = 0; ai < task.actions.size(); ++ai) {
    if (!reach.action_reachable[ai]) continue;
    for (int add : task.actions[ai].add)
      achievers[static_cast<size_t>(add)].push_back(static_cast<int>(ai));
  }

  std::vector<model::GroundState> lm(n);
  model::GroundState full(n);
  for (size_t i = 0; i < n; ++i) full.set(i);
  for (size_t i = 0; i < n; ++i) {
    if (state.test(i)) {
      lm[i] = model::GroundState(n);
      lm[i].set(i);
    } else {
      lm[i] = full;
    }
  }
  bool changed = true;
  while (changed) {
    changed = false;
    for (size_t f = 0; f < n; ++f) {
      if (state.test(f) || !reach.atoms.test(f)) continue;
      model::GroundState acc = full;
      bool any = false;
      for (int ai : achievers[f]) {
        model::GroundState pre_lms(n);
        for (int p : task.actions[static_cast<size_t>(ai)].pre_pos) {
          for (size_t b = 0; b < n; ++b)
            if (lm[static_cast<size_t>(p)].test(b)) pre_lms.set(b);
        }
        if (!any) {
          acc = pre_lms;
          any = true;
        } else {
          model::GroundState meet(n);
          for (size_t b = 0; b < n; ++b)
            if (acc.test(b) && pre_lms.test(b)) meet.set(b);
          acc = meet;
        }
      }
      if (!any) continue; // unreachable facts keep the full set
      acc.set(f);
      if (!(acc == lm[f])) {
        lm[f] = acc;
        changed = true;
      }
    }
  }
  model::GroundState landmarks(n);
  for (int g : task.goal_pos)
    for (size_t b = 0; b < n; ++b)
      if (lm[static_cast<size_t>(g)].test(b)) landmarks.set(b);
  int h = 0;
  for (size_t b = 0; b < n; ++b)
    if (landmarks.test(b) && !state.test(b)) ++h;
  return h;
}

inline int evaluate(const model::GroundTask &task,
                    const model::GroundState &state, Heuristic h) {
  switch (h) {
  case Heuristic::GoalCount: return goal_count(task, state);
  case Heuristic::HAdd: return relaxation_heuristic(task, state, false);
  case Heuristic::HMax: return relaxation_heuristic(task, state, true);
  case Heuristic::LmCount: return landmark_count(task, state);
  }
  return 0;
}

struct Clock {
  std::chrono::steady_clock::time_point start =
      std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start)
        .count();
  }
};

struct Node {
  model::GroundState state;
  int parent = -1;
  int action = -1;
  int g = 0;
};

inline model::Plan extract_plan(const model::GroundTask &task,
                                const std::vector<Node> &nodes, int leaf) {
  std::vector<int> actions;
  for (int cur = leaf; nodes[static_cast<size_t>(cur)].parent >= 0;
       cur = nodes[static_cast<size_t>(cur)].parent)
    actions.push_back(nodes[static_cast<size_t>(cur)].action);
  std::reverse(actions.begin(), actions.end());
  model::Plan plan;
  for (int a : actions)
    plan.steps.push_back(task.actions[static_cast<size_t>(a)].as_call());
  return plan;
}

} // namespace internal

/// Delete-relaxed reachability fixpoint from init; yields a certificate iff
/// some positive goal atom lies outside it.
inline std::pair<model::GroundState, std::optional<UnsolvabilityCertificate>>
relaxed_reachability(const model::GroundTask &task) {
  internal::Reachability r = internal::relaxed_fixpoint(task, task.init);
  std::vector<std::string> unreachable;
  for (int g : task.goal_pos)
    if (!r.atoms.test(static_cast<size_t>(g)))
      unreachable.push_back(task.atoms[static_cast<size_t>(g)].text());
  if (unreachable.empty()) return {r.atoms, std::nullopt};
  UnsolvabilityCertificate cert;
  cert.unreachable_goal_atoms = std::move(unreachable);
  cert.orphan_preconditions = internal::orphan_preconditions(task);
  cert.exhausted = false;
  return {r.atoms, cert};
}

inline double heuristic_value(const model::GroundTask &task,
                              const model::GroundState &state, Heuristic h) {
  int v = internal::evaluate(task, state, h);
  if (v >= internal::kInf) return std::numeric_limits<double>::infinity();
  return static_cast<double>(v);
}

namespace internal {

struct LimitGuard {
  const SearchLimits &limits;
  const Clock &clock;
  SearchResult &result;

  // true when a limit tripped; sets status/reason
  bool charge_expansion() {
    ++result.expansions;
    if (result.expansions > limits.max_expansions) {
      result.status = Status::Timeout;
      result.timeout_reason = "max-expansions";
      return true;
    }
    if ((result.expansions & 1023) == 0 &&
        clock.seconds() > limits.timeout_seconds) {
      result.status = Status::Timeout;
      result.timeout_reason = "wall-clock";
      return true;
    }
    return false;
  }
};

inline void finish_unsolvable(const model::GroundTask &task,
                              SearchResult &result) {
  result.status = Status::Unsolvable;
  UnsolvabilityCertificate cert;
  cert.exhausted = true;
  cert.orphan_preconditions = orphan_preconditions(task);
  result.certificate = cert;
}

inline SearchResult best_first(const model::GroundTask &task, Algorithm algo,
                               Heuristic heuristic, const SearchLimits &limits,
                               const Clock &clock) {
  SearchResult result;
  LimitGuard guard{limits, clock, result};
  const bool weigh_g = algo == Algorithm::AStar;

  using Key = std::tuple<int, int, uint64_t>; // (f or h, h, seq)
  using Entry = std::pair<Key, int>;
  auto cmp = [](const Entry &a, const Entry &b) { return a.first > b.first; };
  std::priority_queue<Entry, std::vector<Entry>, decltype(cmp)> open(cmp);

  std::vector<Node> nodes;
  std::unordered_map<model::GroundState, int, model::GroundStateHash> best_g;

  int h0 = evaluate(task, task.init, heuristic);
  if (h0 >= kInf) {
    finish_unsolvable(task, result);
    return result;
  }
  nodes.push_back(Node{task.init, -1, -1, 0});
  best_g[task.init] = 0;
  uint64_t seq = 0;
  open.push({Key{h0, h0, seq++}, 0});

  while (!open.empty()) {
    auto [key, idx] = open.top();
    open.pop();
    Node node = nodes[static_cast<size_t>(idx)];
    auto it = best_g.find(node.state);
    if (it != best_g.end() && it->second < node.g) continue; // stale entry
    if (task.goal_satisfied(node.state)) {
      result.status = Status::Solved;
      result.plan = extract_plan(task, nodes, idx);
      return result;
    }
    if (guard.charge_expansion()) return result;

    for (size_t ai = 0; ai < task.actions.size(); ++ai) {
      const auto &action = task.actions[ai];
      if (!model::applicable(node.state, action)) continue;
      model::GroundState succ = node.state;
      model::internal::apply_effects(action, succ);
      ++result.generated;
      int g = node.g + action.cost;
      auto seen = best_g.find(succ);
      if (seen != best_g.end() && seen->second <= g) continue;
      int h = evaluate(task, succ, heuristic);
      if (h >= kInf) continue; // dead end under the relaxation
      best_g[succ] = g;
      nodes.push_back(Node{std::move(succ), idx, static_cast<int>(ai), g});
      int primary = weigh_g ? g + h : h;
      open.push({Key{primary, h, seq++}, static_cast<int>(nodes.size() - 1)});
    }
  }
  finish_unsolvable(task, result);
  return result;
}

inline SearchResult breadth_first(const model::GroundTask &task,
                                  const SearchLimits &limits,
                                  const Clock &clock) {
  SearchResult result;
  LimitGuard guard{limits, clock, result};
  std::vector<Node> nodes;
  std::unordered_map<model::GroundState, int, model::GroundStateHash> seen;

  nodes.push_back(Node{task.init, -1, -1, 0});
  seen[task.init] = 0;
  if (task.goal_satisfied(task.init)) {
    result.status = Status::Solved;
    result.plan = model::Plan{};
    return result;
  }
  std::deque<int> open{0};
  while (!open.empty()) {
    int idx = open.front();
    open.pop_front();
    Node node = nodes[static_cast<size_t>(idx)];
    if (guard.charge_expansion()) return result;
    for (size_t ai = 0; ai < task.actions.size(); ++ai) {
      const auto &action = task.actions[ai];
      if (!model::applicable(node.state, action)) continue;
      model::GroundState succ = node.state;
      model::internal::apply_effects(action, succ);
      ++result.generated;
      if (seen.count(succ)) continue;
      nodes.push_back(Node{succ, idx, static_cast<int>(ai), node.g + 1});
      int nid = static_cast<int>(nodes.size() - 1);
      seen[succ] = nid;
      if (task.goal_satisfied(succ)) {
        result.status = Status::Solved;
        result.plan = extract_plan(task, nodes, nid);
        return result;
      }
      open.push_back(nid);
    }
  }
  finish_unsolvable(task, result);
  return result;
}

inline SearchResult ida_star(const model::GroundTask &task, Heuristic heuristic,
                             const SearchLimits &limits, const Clock &clock) {
  SearchResult result;
  LimitGuard guard{limits, clock, result};

  int h0 = evaluate(task, task.init, heuristic);
  if (h0 >= kInf) {
    finish_unsolvable(task, result);
    return result;
  }

  std::vector<int> plan_actions;
  std::unordered_map<model::GroundState, int, model::GroundStateHash> visited;

  struct Frame {
    bool found = false;
    bool limit = false;
    int next_bound = kInf;
  };

  // plain recursive bounded DFS with per-iteration transposition pruning
  std::function<Frame(const model::GroundState &, int, int)> dfs =
      [&](const model::GroundState &state, int g, int bound) -> Frame {
    Frame frame;
    int h = evaluate(task, state, heuristic);
    if (h >= kInf) return frame;
    int f = g + h;
    if (f > bound) {
      frame.next_bound = f;
      return frame;
    }
    if (task.goal_satisfied(state)) {
      frame.found = true;
      return frame;
    }
    if (guard.charge_expansion()) {
      frame.limit = true;
      return frame;
    }
    for (size_t ai = 0; ai < task.actions.size(); ++ai) {
      const auto &action = task.actions[ai];
      if (!model::applicable(state, action)) continue;
      model::GroundState succ = state;
      model::internal::apply_effects(action, succ);
      ++result.generated;
      auto it = visited.find(succ);
      if (it != visited.end() && it->second <= g + action.cost) continue;
      visited[succ] = g + action.cost;
      Frame child = dfs(succ, g + action.cost, bound);
      if (child.found) {
        plan_actions.push_back(static_cast<int>(ai));
        frame.found = true;
        return frame;
      }
      if (child.limit) {
        frame.limit = true;
        return frame;
      }
      frame.next_bound = std::min(frame.next_bound, child.next_bound);
    }
    return frame;
  };

  int bound = h0;
  while (true) {
    visited.clear();
    visited[task.init] = 0;
    Frame top = dfs(task.init, 0, bound);
    if (top.found) {
      std::reverse(plan_actions.begin(), plan_actions.end());
      model::Plan plan;
      for (int a : plan_actions)
        plan.steps.push_back(task.actions[static_cast<size_t>(a)].as_call());
      result.status = Status::Solved;
      result.plan = std::move(plan);
      return result;
    }
    if (top.limit) return result;
    if (top.next_bound >= kInf) {
      finish_unsolvable(task, result);
      return result;
    }
    bound = top.next_bound;
  }
}

// Enforced hill-climbing: breadth-first lookahead from the incumbent for a
// strictly better heuristic value, restart-free.
inline SearchResult enforced_hill_climbing(const model::GroundTask &task,
                                           Heuristic heuristic,
                                           const SearchLimits &limits,
                                           const Clock &clock) {
  SearchResult result;
  LimitGuard guard{limits, clock, result};

  model::GroundState current = task.init;
  int h_cur = evaluate(task, current, heuristic);
  model::Plan plan;

  while (true) {
    if (task.goal_satisfied(current)) {
      result.status = Status::Solved;
      result.plan = std::move(plan);
      return result;
    }
    if (h_cur >= kInf) break;

    std::vector<Node> nodes{Node{current, -1, -1, 0}};
    std::unordered_map<model::GroundState, int, model::GroundStateHash> seen{
        {current, 0}};
    std::deque<int> open{0};
    int improved = -1;

    while (!open.empty() && improved < 0) {
      int idx = open.front();
      open.pop_front();
      Node node = nodes[static_cast<size_t>(idx)];
      if (guard.charge_expansion()) return result;
      for (size_t ai = 0; ai < task.actions.size() && improved < 0; ++ai) {
        const auto &action = task.actions[ai];
        if (!model::applicable(node.state, action)) continue;
        model::GroundState succ = node.state;
        model::internal::apply_effects(action, succ);
        ++result.generated;
        if (seen.count(succ)) continue;
        nodes.push_back(Node{succ, idx, static_cast<int>(ai), node.g + 1});
        int nid = static_cast<int>(nodes.size() - 1);
        seen[succ] = nid;
        int h = evaluate(task, succ, heuristic);
        if (h < h_cur || task.goal_satisfied(succ)) {
          improved = nid;
          h_cur = h;
          break;
        }
        open.push_back(nid);
      }
    }
    if (improved < 0) break; // plateau with no exit

    model::Plan segment = extract_plan(task, nodes, improved);
    for (auto &step : segment.steps) plan.steps.push_back(std::move(step));
    current = nodes[static_cast<size_t>(improved)].state;
  }

  result.status = Status::Timeout;
  result.timeout_reason = "ehc-dead-end";
  return result;
}

} // namespace internal

inline SearchResult solve(const model::GroundTask &task, Algorithm algo,
                          Heuristic heuristic, const SearchLimits &limits = {}) {
  internal::Clock clock;
  auto [reachable, cert] = relaxed_reachability(task);
  SearchResult result;
  if (cert) {
    result.status = Status::Unsolvable;
    result.certificate = std::move(cert);
    result.wall_seconds = clock.seconds();
    return result;
  }
  switch (algo) {
  case Algorithm::Bfs:
    result = internal::breadth_first(task, limits, clock);
    break;
  case Algorithm::AStar:
  case Algorithm::Gbfs:
    result = internal::best_first(task, algo, heuristic, limits, clock);
    break;
  case Algorithm::IdaStar:
    result = internal::ida_star(task, heuristic, limits, clock);
    break;
  case Algorithm::Ehc:
    result = internal::enforced_hill_climbing(task, heuristic, limits, clock);
    break;
  }
  result.wall_seconds = clock.seconds();
  return result;
}

} // namespace planner::search

#endif
