#ifndef PLANNER_ADVISOR_HPP
#define PLANNER_ADVISOR_HPP

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "planner/fixes.hpp"
#include "planner/model.hpp"
#include "planner/pddl.hpp"
#include "planner/search.hpp"
#include "planner/signature.hpp"
#include "planner/validate.hpp"

namespace planner::advisor {

struct AdvisorUnavailable : Error {
  using Error::Error;
};

struct FixedPlanInvalid : Error {
  validate::Verdict verdict;
  FixedPlanInvalid(const std::string &message, validate::Verdict v = {})
      : Error(message), verdict(std::move(v)) {}
};

struct ReviewVerdict {
  bool is_good = true;
  std::string feedback; // empty iff is_good
};

/// The repair mode's answer: what is missing and why, plus an illustrative
/// plan. Convertible into a DomainFix via fix::parse_fix(to_json()).
struct GapAnalysis {
  std::vector<std::string> missing_actions;
  std::vector<fix::MissingPrecondition> missing_preconditions;
  std::map<std::string, std::string> action_definitions;
  std::vector<std::string> suggested_plan;
  std::string rationale;

  bool empty() const {
    return missing_actions.empty() && missing_preconditions.empty();
  }

  nlohmann::json to_json() const {
    nlohmann::json doc;
    doc["missing_actions"] = missing_actions;
    nlohmann::json pres = nlohmann::json::array();
    for (const auto &mp : missing_preconditions)
      pres.push_back(
          {{"action", mp.action}, {"atom", mp.atom}, {"why", mp.why}});
    doc["missing_preconditions"] = pres;
    if (!action_definitions.empty()) {
      nlohmann::json defs = nlohmann::json::object();
      for (const auto &[name, text] : action_definitions) defs[name] = text;
      doc["action_definitions"] = defs;
    }
    doc["suggested_plan"] = suggested_plan;
    doc["rationale"] = rationale;
    return doc;
  }

  static GapAnalysis from_json(const nlohmann::json &doc) {
    GapAnalysis out;
    if (doc.contains("missing_actions"))
      for (const auto &name : doc["missing_actions"])
        out.missing_actions.push_back(
            detail::to_lower(name.get<std::string>()));
    if (doc.contains("missing_preconditions")) {
      for (const auto &entry : doc["missing_preconditions"]) {
        fix::MissingPrecondition mp;
        mp.action = detail::to_lower(entry.value("action", ""));
        mp.atom = detail::to_lower(entry.value("atom", ""));
        mp.why = entry.value("why", "");
        out.missing_preconditions.push_back(std::move(mp));
      }
    }
    if (doc.contains("action_definitions"))
      for (const auto &[name, text] : doc["action_definitions"].items())
        out.action_definitions[detail::to_lower(name)] = text.get<std::string>();
    if (doc.contains("suggested_plan"))
      for (const auto &step : doc["suggested_plan"])
        out.suggested_plan.push_back(step.get<std::string>());
    out.rationale = doc.value("rationale", "");
    return out;
  }
};

class Advisor {
public:
  virtual ~Advisor() = default;
  virtual std::string id() const = 0;

  virtual ReviewVerdict review_commonsense(const model::Domain &domain,
                                           const model::Problem &problem,
                                           const model::Plan &plan) = 0;

  /// The returned plan is guaranteed valid for (domain, problem); anything
  /// else raises FixedPlanInvalid with the validator's verdict attached.
  virtual model::Plan generate_fixed_plan(const model::Domain &domain,
                                          const model::Problem &problem,
                                          const model::Plan &plan,
                                          const std::string &feedback) = 0;

  virtual std::optional<GapAnalysis> gap_analysis_for_domain(
      const model::Domain &domain, const model::Problem &problem,
      const search::UnsolvabilityCertificate &certificate) = 0;

protected:
  static model::Plan checked(const model::Domain &domain,
                             const model::Problem &problem, model::Plan plan) {
    validate::Verdict verdict = validate::validate_plan(domain, problem, plan);
    if (!verdict.valid())
      throw FixedPlanInvalid("advisor returned an invalid plan: " +
                                 verdict.describe(),
                             verdict);
    return plan;
  }
};

// --- scripted backend ---
//
// Fixture file: one JSON object keyed "<mode>:<signature>" with modes
// review / fixed_plan / gap_analysis; "<mode>:*" matches any signature.
// Review values are either a verdict object or {"cases": [...], "default"}
// where a case matches on if_plan_contains / if_plan_lacks / if_plan_length.
class ScriptedAdvisor final : public Advisor {
public:
  explicit ScriptedAdvisor(const std::filesystem::path &fixture_path) {
    std::ifstream in(fixture_path);
    if (!in)
      throw Error("cannot read advisor fixture file " + fixture_path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    fixtures_ = nlohmann::json::parse(buf.str(), nullptr, false);
    if (fixtures_.is_discarded() || !fixtures_.is_object())
      throw Error("advisor fixture file " + fixture_path.string() +
                  " is not a JSON object");
    id_ = "scripted:" + fixture_path.filename().string();
  }

  explicit ScriptedAdvisor(nlohmann::json fixtures)
      : fixtures_(std::move(fixtures)), id_("scripted:<inline>") {}

  std::string id() const override { return id_; }

  ReviewVerdict review_commonsense(const model::Domain &domain,
                                   const model::Problem &problem,
                                   const model::Plan &plan) override {
    auto entry = lookup("review", domain, problem);
    if (!entry) return ReviewVerdict{true, ""}; // default-accept
    return match_review(*entry, plan);
  }

  model::Plan generate_fixed_plan(const model::Domain &domain,
                                  const model::Problem &problem,
                                  const model::Plan &plan,
                                  const std::string &feedback) override {
    (void)plan;
    (void)feedback;
    auto entry = lookup("fixed_plan", domain, problem);
    if (!entry)
      throw FixedPlanInvalid("scripted backend has no fixed_plan fixture for "
                             "this problem");
    if (!entry->is_object() || !entry->contains("plan"))
      throw FixedPlanInvalid("fixed_plan fixture lacks a \"plan\" array");
    model::Plan fixed;
    for (const auto &step : (*entry)["plan"])
      fixed.steps.push_back(model::ActionCall::parse(step.get<std::string>()));
    return checked(domain, problem, std::move(fixed));
  }

  std::optional<GapAnalysis> gap_analysis_for_domain(
      const model::Domain &domain, const model::Problem &problem,
      const search::UnsolvabilityCertificate &certificate) override {
    (void)certificate;
    auto entry = lookup("gap_analysis", domain, problem);
    if (!entry || entry->is_null()) return std::nullopt;
    GapAnalysis analysis = GapAnalysis::from_json(*entry);
    if (analysis.empty()) return std::nullopt;
    return analysis;
  }

private:
  std::optional<nlohmann::json> lookup(const std::string &mode,
                                       const model::Domain &domain,
                                       const model::Problem &problem) const {
    std::string key =
        mode + ":" + sig::create_signature(domain, problem).to_string();
    if (fixtures_.contains(key)) return fixtures_.at(key);
    std::string wildcard = mode + ":*";
    if (fixtures_.contains(wildcard)) return fixtures_.at(wildcard);
    return std::nullopt;
  }

  static ReviewVerdict decode_verdict(const nlohmann::json &doc) {
    ReviewVerdict v;
    v.is_good = doc.value("is_good", true);
    v.feedback = doc.value("feedback", "");
    return v;
  }

  static ReviewVerdict match_review(const nlohmann::json &entry,
                                    const model::Plan &plan) {
    if (!entry.contains("cases")) return decode_verdict(entry);
    for (const auto &c : entry["cases"]) {
      bool matches = true;
      if (c.contains("if_plan_contains") &&
          !plan.contains_action(c["if_plan_contains"].get<std::string>()))
        matches = false;
      if (c.contains("if_plan_lacks") &&
          plan.contains_action(c["if_plan_lacks"].get<std::string>()))
        matches = false;
      if (c.contains("if_plan_length") &&
          plan.length() != c["if_plan_length"].get<size_t>())
        matches = false;
      if (matches) return decode_verdict(c);
    }
    if (entry.contains("default")) return decode_verdict(entry["default"]);
    return ReviewVerdict{true, ""};
  }

  nlohmann::json fixtures_;
  std::string id_;
};

// --- HTTP backend ---

struct HttpOptions {
  std::string url;   // falls back to PLAN_ADVISOR_URL
  std::string token; // falls back to PLAN_ADVISOR_TOKEN
  int timeout_ms = 30'000;
  int max_retries = 2;
  int backoff_ms = 250;
  std::string prompts_dir; // falls back to PLAN_PROMPTS_DIR, then build default
};

namespace internal {

// first balanced JSON object (or array) in a possibly prose-wrapped body;
// a bare null (the gap-analysis "no fixes" reply) is accepted as-is
inline std::optional<nlohmann::json> extract_json(const std::string &body) {
  if (planner::detail::trim(body) == "null") return nlohmann::json(nullptr);
  for (char open : {'{', '['}) {
    char close = open == '{' ? '}' : ']';
    size_t start = body.find(open);
    while (start != std::string::npos) {
      int depth = 0;
      bool in_string = false, escaped = false;
      for (size_t i = start; i < body.size(); ++i) {
        char c = body[i];
        if (in_string) {
          if (escaped)
            escaped = false;
          else if (c == '\\')
            escaped = true;
          else if (c == '"')
            in_string = false;
          continue;
        }
        if (c == '"') {
          in_string = true;
        } else if (c == open) {
          ++depth;
        } else if (c == close) {
          --depth;
          if (depth == 0) {
            auto doc = nlohmann::json::parse(
                body.substr(start, i - start + 1), nullptr, false);
            if (!doc.is_discarded()) return doc;
            break;
          }
        }
      }
      start = body.find(open, start + 1);
    }
  }
  return std::nullopt;
}

} // namespace internal

class HttpAdvisor final : public Advisor {
public:
  explicit HttpAdvisor(HttpOptions options) : options_(std::move(options)) {
    if (options_.url.empty()) {
      const char *env = std::getenv("PLAN_ADVISOR_URL");
      if (env) options_.url = env;
    }
    if (options_.url.empty())
      throw Error("http advisor needs a URL (flag or PLAN_ADVISOR_URL)");
    if (options_.token.empty()) {
      const char *env = std::getenv("PLAN_ADVISOR_TOKEN");
      if (env) options_.token = env;
    }
    if (options_.prompts_dir.empty()) {
      const char *env = std::getenv("PLAN_PROMPTS_DIR");
      if (env) options_.prompts_dir = env;
    }
#ifdef PLANNER_PROMPTS_DIR
    if (options_.prompts_dir.empty()) options_.prompts_dir = PLANNER_PROMPTS_DIR;
#endif
  }

  std::string id() const override { return "http:" + options_.url; }

  ReviewVerdict review_commonsense(const model::Domain &domain,
                                   const model::Problem &problem,
                                   const model::Plan &plan) override {
    nlohmann::json payload = base_payload("review", domain, problem);
    payload["plan"] = plan_array(plan);
    nlohmann::json response = post(payload);
    if (!response.is_object() || !response.contains("is_good"))
      throw AdvisorUnavailable("review response lacks is_good");
    ReviewVerdict verdict;
    verdict.is_good = response["is_good"].get<bool>();
    verdict.feedback = response.value("feedback", "");
    return verdict;
  }

  model::Plan generate_fixed_plan(const model::Domain &domain,
                                  const model::Problem &problem,
                                  const model::Plan &plan,
                                  const std::string &feedback) override {
    nlohmann::json payload = base_payload("fixed_plan", domain, problem);
    payload["plan"] = plan_array(plan);
    payload["feedback"] = feedback;
    nlohmann::json response = post(payload);
    nlohmann::json steps;
    if (response.is_array())
      steps = response;
    else if (response.is_object() && response.contains("plan"))
      steps = response["plan"];
    else
      throw FixedPlanInvalid("fixed_plan response carries no plan");
    model::Plan fixed;
    try {
      for (const auto &step : steps)
        fixed.steps.push_back(model::ActionCall::parse(step.get<std::string>()));
    } catch (const std::exception &e) {
      throw FixedPlanInvalid(std::string("unparseable fixed plan: ") + e.what());
    }
    return checked(domain, problem, std::move(fixed));
  }

  std::optional<GapAnalysis> gap_analysis_for_domain(
      const model::Domain &domain, const model::Problem &problem,
      const search::UnsolvabilityCertificate &certificate) override {
    nlohmann::json payload = base_payload("gap_analysis", domain, problem);
    payload["certificate"] = certificate.to_json();
    nlohmann::json response = post(payload);
    if (response.is_null()) return std::nullopt;
    if (!response.is_object())
      throw AdvisorUnavailable("gap_analysis response is not an object");
    if (response.value("unsolvable", false)) return std::nullopt;
    GapAnalysis analysis = GapAnalysis::from_json(response);
    if (analysis.empty()) return std::nullopt;
    return analysis;
  }

private:
  nlohmann::json base_payload(const std::string &mode,
                              const model::Domain &domain,
                              const model::Problem &problem) const {
    return {{"mode", mode},
            {"system_prompt", prompt_for(mode)},
            {"domain_text", pddl::print_domain(domain)},
            {"problem_text", pddl::print_problem(problem)}};
  }

  static nlohmann::json plan_array(const model::Plan &plan) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto &step : plan.steps) arr.push_back(step.text());
    return arr;
  }

  std::string prompt_for(const std::string &mode) const {
    std::filesystem::path path =
        std::filesystem::path(options_.prompts_dir) / (mode + ".txt");
    std::ifstream in(path);
    if (!in)
      throw AdvisorUnavailable("prompt template not found: " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
  }

  nlohmann::json post(const nlohmann::json &payload) {
    std::string url = options_.url;
    std::string base = url, path = "/";
    size_t scheme = url.find("://");
    if (scheme != std::string::npos) {
      size_t slash = url.find('/', scheme + 3);
      if (slash != std::string::npos) {
        base = url.substr(0, slash);
        path = url.substr(slash);
      }
    }

    std::string body = payload.dump();
    std::string failure = "no attempt made";
    for (int attempt = 0; attempt <= options_.max_retries; ++attempt) {
      if (attempt > 0) {
        std::this_thread::sleep_for(
            std::chrono::milliseconds(options_.backoff_ms << (attempt - 1)));
      }
      httplib::Client client(base);
      client.set_connection_timeout(0, options_.timeout_ms * 1000LL);
      client.set_read_timeout(options_.timeout_ms / 1000,
                              (options_.timeout_ms % 1000) * 1000);
      client.set_write_timeout(options_.timeout_ms / 1000,
                               (options_.timeout_ms % 1000) * 1000);
      httplib::Headers headers;
      if (!options_.token.empty())
        headers.emplace("Authorization", "Bearer " + options_.token);
      auto res = client.Post(path, headers, body, "application/json");
      if (!res) {
        failure = "transport error: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status != 200) {
        failure = "status " + std::to_string(res->status);
        continue;
      }
      auto doc = internal::extract_json(res->body);
      if (!doc) {
        failure = "response carries no JSON object";
        continue;
      }
      return *doc;
    }
    throw AdvisorUnavailable("advisor at " + options_.url +
                             " unavailable after " +
                             std::to_string(options_.max_retries + 1) +
                             " attempts (" + failure + ")");
  }

  HttpOptions options_;
};

/// "scripted:<fixture-file>" or "http"; "off" and "" yield a null advisor.
inline std::unique_ptr<Advisor> make_advisor(const std::string &spec,
                                             const HttpOptions &http = {}) {
  if (spec.empty() || spec == "off") return nullptr;
  if (spec.rfind("scripted:", 0) == 0)
    return std::make_unique<ScriptedAdvisor>(
        std::filesystem::path(spec.substr(9)));
  if (spec == "http") return std::make_unique<HttpAdvisor>(http);
  throw Error("unknown advisor spec '" + spec +
              "' (expected scripted:FILE, http or off)");
}

} // namespace planner::advisor

#endif
