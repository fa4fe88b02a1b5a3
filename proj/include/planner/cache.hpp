#ifndef PLANNER_CACHE_HPP
#define PLANNER_CACHE_HPP

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fcntl.h>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <unistd.h>
#include <vector>

#include <json.hpp>

#include "planner/fixes.hpp"
#include "planner/model.hpp"
#include "planner/signature.hpp"

namespace planner::cache {

struct CacheError : Error {
  using Error::Error;
};

enum class Provenance { Solver, SolverReview, RepairedDomain };

inline const char *to_string(Provenance p) {
  switch (p) {
  case Provenance::Solver: return "solver";
  case Provenance::SolverReview: return "solver+review";
  case Provenance::RepairedDomain: return "repaired-domain";
  }
  return "?";
}
inline std::optional<Provenance> provenance_from_string(const std::string &s) {
  if (s == "solver") return Provenance::Solver;
  if (s == "solver+review") return Provenance::SolverReview;
  if (s == "repaired-domain") return Provenance::RepairedDomain;
  return std::nullopt;
}

struct PlanRecord {
  std::string signature;
  model::Plan plan;
  std::string created_at;
  Provenance provenance = Provenance::Solver;
};

struct FlawRecord {
  std::string signature;
  fix::DomainFix fix;
  std::string created_at;
  std::string advisor_backend;
};

struct CacheStats {
  uint64_t plan_hits = 0;
  uint64_t plan_misses = 0;
  uint64_t flaw_hits = 0;
  uint64_t flaw_misses = 0;
  uint64_t writes = 0;
};

inline std::string now_iso8601() {
  std::time_t t = std::chrono::system_clock::to_time_t(
      std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

namespace internal {

constexpr int kFormatVersion = 1;

inline nlohmann::json header(const char *kind) {
  return {{"format_version", kFormatVersion},
          {"digest", sig::kDigestAlgorithm},
          {"kind", kind}};
}

// One append-only jsonl file with a header line; keeps the last record per
// key, skips corrupt lines, and rewrites itself compacted when it finds
// shadowed or unreadable lines.
class JsonlTable {
public:
  void open(const std::filesystem::path &path, const char *kind,
            std::vector<std::string> &warnings) {
    path_ = path;
    kind_ = kind;
    records_.clear();
    if (!std::filesystem::exists(path_)) {
      rewrite();
      return;
    }
    std::ifstream in(path_);
    if (!in) throw CacheError("cannot read " + path_.string());
    std::string line;
    size_t lineno = 0;
    size_t bad = 0, shadowed = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      nlohmann::json doc = nlohmann::json::parse(line, nullptr, false);
      if (lineno == 1) {
        if (doc.is_discarded() || !doc.is_object() ||
            doc.value("kind", "") != kind_ ||
            doc.value("format_version", 0) != kFormatVersion)
          throw CacheError(path_.string() + ": bad store header");
        if (doc.value("digest", "") != sig::kDigestAlgorithm)
          throw CacheError(path_.string() + ": store uses digest '" +
                           doc.value("digest", "") + "', this build uses '" +
                           sig::kDigestAlgorithm + "'");
        continue;
      }
      if (doc.is_discarded() || !doc.is_object() || !doc.contains("sig")) {
        warnings.push_back(path_.string() + ":" + std::to_string(lineno) +
                           ": skipping corrupt record");
        ++bad;
        continue;
      }
      if (records_.count(doc["sig"].get<std::string>())) ++shadowed;
      records_[doc["sig"].get<std::string>()] = doc;
    }
    in.close();
    if (bad > 0 || shadowed > 0) rewrite();
  }

  std::optional<nlohmann::json> get(const std::string &key) const {
    auto it = records_.find(key);
    if (it == records_.end()) return std::nullopt;
    return it->second;
  }

  void put(const std::string &key, nlohmann::json doc) {
    bool fresh = !std::filesystem::exists(path_);
    std::ofstream out(path_, std::ios::app);
    if (!out) throw CacheError("cannot append to " + path_.string());
    if (fresh) out << header(kind_).dump() << "\n";
    out << doc.dump() << "\n";
    out.flush();
    if (!out) throw CacheError("write failed on " + path_.string());
    records_[key] = std::move(doc);
  }

  void clear() {
    records_.clear();
    rewrite();
  }

  const std::map<std::string, nlohmann::json> &records() const {
    return records_;
  }

private:
  void rewrite() {
    std::ofstream out(path_, std::ios::trunc);
    if (!out) throw CacheError("cannot write " + path_.string());
    out << header(kind_).dump() << "\n";
    for (const auto &[key, doc] : records_) out << doc.dump() << "\n";
    out.flush();
    if (!out) throw CacheError("write failed on " + path_.string());
  }

  std::filesystem::path path_;
  const char *kind_ = "";
  std::map<std::string, nlohmann::json> records_;
};

} // namespace internal

/// The two persistent stores: known plans and known flaws, as
/// <dir>/known_plans.jsonl and <dir>/known_flaws.jsonl, guarded by
/// <dir>/LOCK against a second process. Thread-safe within a process.
class Cache {
public:
  explicit Cache(const std::filesystem::path &dir) : dir_(dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec)
      throw CacheError("cannot create cache directory " + dir_.string());
    lock_fd_ = ::open((dir_ / "LOCK").c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (lock_fd_ < 0)
      throw CacheError("cache directory " + dir_.string() +
                       " is locked by another process (stale LOCK file?)");
    std::string pid = std::to_string(::getpid()) + "\n";
    [[maybe_unused]] ssize_t n = ::write(lock_fd_, pid.data(), pid.size());
    try {
      plans_.open(dir_ / "known_plans.jsonl", "known_plans", warnings_);
      flaws_.open(dir_ / "known_flaws.jsonl", "known_flaws", warnings_);
    } catch (...) {
      release_lock();
      throw;
    }
  }

  ~Cache() { release_lock(); }
  Cache(const Cache &) = delete;
  Cache &operator=(const Cache &) = delete;

  std::optional<PlanRecord> get_plan(const sig::ProblemSignature &s) {
    return get_plan(s.to_string());
  }
  std::optional<PlanRecord> get_plan(const std::string &key) {
    std::lock_guard lock(mutex_);
    auto doc = plans_.get(key);
    if (!doc) {
      ++stats_.plan_misses;
      return std::nullopt;
    }
    ++stats_.plan_hits;
    return decode_plan(*doc);
  }

  void put_plan(const sig::ProblemSignature &s, PlanRecord record) {
    std::lock_guard lock(mutex_);
    record.signature = s.to_string();
    nlohmann::json steps = nlohmann::json::array();
    for (const auto &step : record.plan.steps) steps.push_back(step.text());
    plans_.put(record.signature, {{"sig", record.signature},
                                  {"plan", steps},
                                  {"created_at", record.created_at},
                                  {"provenance", to_string(record.provenance)}});
    ++stats_.writes;
  }

  std::optional<FlawRecord> get_flaw(const sig::ProblemSignature &s) {
    return get_flaw(s.to_string());
  }
  std::optional<FlawRecord> get_flaw(const std::string &key) {
    std::lock_guard lock(mutex_);
    auto doc = flaws_.get(key);
    if (!doc) {
      ++stats_.flaw_misses;
      return std::nullopt;
    }
    ++stats_.flaw_hits;
    return decode_flaw(*doc);
  }

  void put_flaw(const sig::ProblemSignature &s, FlawRecord record) {
    std::lock_guard lock(mutex_);
    if (record.fix.empty()) throw CacheError("refusing to store an empty fix");
    record.signature = s.to_string();
    flaws_.put(record.signature,
               {{"sig", record.signature},
                {"fix", fix::print_fix(record.fix)},
                {"created_at", record.created_at},
                {"advisor_backend", record.advisor_backend}});
    ++stats_.writes;
  }

  CacheStats stats() const {
    std::lock_guard lock(mutex_);
    return stats_;
  }

  std::vector<std::string> drain_warnings() {
    std::lock_guard lock(mutex_);
    return std::exchange(warnings_, {});
  }

  void clear() {
    std::lock_guard lock(mutex_);
    plans_.clear();
    flaws_.clear();
  }

  std::vector<PlanRecord> list_plans() {
    std::lock_guard lock(mutex_);
    std::vector<PlanRecord> out;
    for (const auto &[key, doc] : plans_.records()) out.push_back(decode_plan(doc));
    return out;
  }
  std::vector<FlawRecord> list_flaws() {
    std::lock_guard lock(mutex_);
    std::vector<FlawRecord> out;
    for (const auto &[key, doc] : flaws_.records()) out.push_back(decode_flaw(doc));
    return out;
  }

  const std::filesystem::path &directory() const { return dir_; }

private:
  void release_lock() {
    if (lock_fd_ >= 0) {
      ::close(lock_fd_);
      std::error_code ec;
      std::filesystem::remove(dir_ / "LOCK", ec);
      lock_fd_ = -1;
    }
  }

  static PlanRecord decode_plan(const nlohmann::json &doc) {
    PlanRecord record;
    record.signature = doc.value("sig", "");
    for (const auto &step : doc.at("plan"))
      record.plan.steps.push_back(
          model::ActionCall::parse(step.get<std::string>()));
    record.created_at = doc.value("created_at", "");
    auto prov = provenance_from_string(doc.value("provenance", "solver"));
    record.provenance = prov.value_or(Provenance::Solver);
    return record;
  }
  static FlawRecord decode_flaw(const nlohmann::json &doc) {
    FlawRecord record;
    record.signature = doc.value("sig", "");
    record.fix = fix::parse_fix(doc.at("fix"));
    record.created_at = doc.value("created_at", "");
    record.advisor_backend = doc.value("advisor_backend", "");
    return record;
  }

  std::filesystem::path dir_;
  int lock_fd_ = -1;
  mutable std::mutex mutex_;
  internal::JsonlTable plans_;
  internal::JsonlTable flaws_;
  CacheStats stats_;
  std::vector<std::string> warnings_;
};

} // namespace planner::cache

#endif
