#ifndef PLANNER_SIGNATURE_HPP
#define PLANNER_SIGNATURE_HPP

#include <algorithm>
#include <string>
#include <vector>

#include "planner/detail/sha256.hpp"
#include "planner/model.hpp"
#include "planner/pddl.hpp"

namespace planner::sig {

inline constexpr const char *kDigestAlgorithm = "sha-256";

/// Cache key for a (domain, problem) pair. The domain digest covers the
/// canonical domain text; the problem digest covers sorted init atoms, sorted
/// goal literals and sorted soft goals. Insensitive to fact order, whitespace
/// and identifier case by construction (the parser normalizes case, the
/// printer normalizes layout).
struct ProblemSignature {
  std::string domain_digest;  // 64 hex chars
  std::string problem_digest; // 64 hex chars

  std::string to_string() const { return domain_digest + ":" + problem_digest; }
  std::string short_form() const {
    return domain_digest.substr(0, 8) + ":" + problem_digest.substr(0, 8);
  }

  friend bool operator==(const ProblemSignature &,
                         const ProblemSignature &) = default;
};

inline ProblemSignature create_signature(const model::Domain &domain,
                                         const model::Problem &problem) {
  ProblemSignature out;
  out.domain_digest = detail::sha256_hex(pddl::print_domain(domain));

  std::vector<std::string> init;
  for (const auto &atom : problem.init) init.push_back(atom.text());
  std::sort(init.begin(), init.end());
  init.erase(std::unique(init.begin(), init.end()), init.end());

  std::vector<std::string> goal;
  for (const auto &lit : problem.goal) goal.push_back(lit.text());
  std::sort(goal.begin(), goal.end());
  goal.erase(std::unique(goal.begin(), goal.end()), goal.end());

  std::vector<std::string> soft;
  for (const auto &sg : problem.soft_goals)
    soft.push_back(sg.atom.text() + "=" + std::to_string(sg.penalty));
  std::sort(soft.begin(), soft.end());

  std::string blob;
  for (size_t i = 0; i < init.size(); ++i) {
    if (i) blob += ";";
    blob += init[i];
  }
  blob += "|";
  for (size_t i = 0; i < goal.size(); ++i) {
    if (i) blob += ";";
    blob += goal[i];
  }
  blob += "|";
  for (size_t i = 0; i < soft.size(); ++i) {
    if (i) blob += ";";
    blob += soft[i];
  }
  out.problem_digest = detail::sha256_hex(blob);
  return out;
}

} // namespace planner::sig

#endif
