#include <catch2/catch.hpp>

#include <array>
#include <cstdio>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "helpers.hpp"

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;

  std::vector<std::string> lines() const {
    std::vector<std::string> result;
    std::istringstream is(out);
    std::string line;
    while (std::getline(is, line))
      if (!line.empty()) result.push_back(line);
    return result;
  }
};

RunResult run(const std::string &args, bool merge_stderr = false,
              const std::string &env = "") {
  std::string command = (env.empty() ? "" : "env " + env + " ") +
                        std::string(PLAN_CLI_PATH) + " " + args +
                        (merge_stderr ? " 2>&1" : " 2>/dev/null");
  std::array<char, 4096> buffer{};
  RunResult result;
  FILE *pipe = popen(command.c_str(), "r");
  REQUIRE(pipe != nullptr);
  size_t n;
  while ((n = fread(buffer.data(), 1, buffer.size(), pipe)) > 0)
    result.out.append(buffer.data(), n);
  int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

std::string arg_path(const std::string &benchmark, const std::string &file) {
  return (testutil::bench_dir() / benchmark / file).string();
}

std::string beer_args() {
  return "--domain " + arg_path("beer", "domain.pddl") + " --problem " +
         arg_path("beer", "problem.pddl");
}

} // namespace

TEST_CASE("plan solve: classical baseline emits exactly the plan") {
  auto result = run("solve " + beer_args());
  CHECK(result.exit_code == 0);
  auto lines = result.lines();
  REQUIRE(lines.size() == 7);
  for (const auto &line : lines) {
    CHECK(line.find('(') != std::string::npos);
    CHECK(line.back() == ')');
  }
}

TEST_CASE("plan solve: scripted advisor turns 7 steps into 8") {
  auto result = run("solve " + beer_args() + " --advisor scripted:" +
                    arg_path("beer", "fixtures.json"));
  CHECK(result.exit_code == 0);
  auto lines = result.lines();
  REQUIRE(lines.size() == 8);
  CHECK(lines[3] == "close-fridge(robot)"); // position 4 of the golden 8-step plan
}

TEST_CASE("plan solve: unsolvable exits 2, timeout exits 3") {
  auto unsolvable = run("solve --domain " +
                        arg_path("microwave-flawed", "domain.pddl") +
                        " --problem " +
                        arg_path("microwave-flawed", "problem.pddl"));
  CHECK(unsolvable.exit_code == 2);
  CHECK(unsolvable.out.empty()); // diagnostics go to stderr

  auto timeout = run("solve --domain " + arg_path("cube", "domain.pddl") +
                     " --problem " + arg_path("cube", "problem.pddl") +
                     " --max-expansions 2");
  CHECK(timeout.exit_code == 3);
}

TEST_CASE("plan solve: bad usage and bad files exit 1") {
  CHECK(run("solve --domain /nonexistent.pddl --problem /nonexistent.pddl")
            .exit_code == 1);
  CHECK(run("solve").exit_code != 0);
  CHECK(run("solve " + beer_args() + " --algo warpdrive").exit_code == 1);
}

TEST_CASE("plan solve: hybrid run with cache and trace") {
  auto dir = testutil::fresh_dir("cli-cache");
  auto trace_path = dir / "trace.jsonl";
  std::string base = "solve " + beer_args() + " --advisor scripted:" +
                     arg_path("beer", "fixtures.json") + " --cache " +
                     (dir / "store").string();

  auto first = run(base + " --trace " + trace_path.string());
  CHECK(first.exit_code == 0);
  CHECK(first.lines().size() == 8);

  // the trace is machine-readable jsonl with one returned event
  std::ifstream in(trace_path);
  REQUIRE(in.good());
  std::string line;
  int returned = 0;
  while (std::getline(in, line)) {
    auto doc = nlohmann::json::parse(line);
    REQUIRE(doc.contains("event"));
    if (doc["event"] == "returned") ++returned;
  }
  CHECK(returned == 1);

  // second run is served from the cache
  auto second = run(base + " --trace " + trace_path.string(), true);
  CHECK(second.exit_code == 0);
  CHECK(second.out.find("cache-plan-hit") != std::string::npos);

  // cache ls shows the record; clear empties it
  auto ls = run("cache ls --cache " + (dir / "store").string());
  CHECK(ls.exit_code == 0);
  CHECK(ls.out.find("plan ") != std::string::npos);
  CHECK(ls.out.find("solver+review") != std::string::npos);
  CHECK(run("cache clear --cache " + (dir / "store").string()).exit_code == 0);
  auto ls_after = run("cache ls --cache " + (dir / "store").string());
  CHECK(ls_after.out.empty());
}

TEST_CASE("plan validate") {
  std::string base = "validate " + beer_args();

  SECTION("golden 8-step plan is valid") {
    auto result = run(base + " --plan " + arg_path("beer", "golden/cleanup-8step.plan"));
    CHECK(result.exit_code == 0);
    CHECK(result.out.find("valid") != std::string::npos);
  }
  SECTION("goal holds but the soft goal is reported unmet") {
    auto result = run(base + " --plan " +
                      arg_path("beer", "golden/optimal-7step-alt.plan") +
                      " --soft-goals " + arg_path("beer", "soft_goals.json"));
    CHECK(result.exit_code == 0);
    CHECK(result.out.find("soft-goal unmet: fridge-closed(fridge)") !=
          std::string::npos);
  }
  SECTION("an invalid plan exits 2 with the failing step") {
    auto dir = testutil::fresh_dir("cli-invalid");
    std::ofstream out(dir / "bad.plan");
    out << "open-fridge(robot)\n";
    out.close();
    auto result = run(base + " --plan " + (dir / "bad.plan").string());
    CHECK(result.exit_code == 2);
    CHECK(result.out.find("requires") != std::string::npos);
  }
  SECTION("garbage plan files exit 1") {
    auto dir = testutil::fresh_dir("cli-garbage");
    std::ofstream out(dir / "garbage.plan");
    out << "this is not ( a plan\n";
    out.close();
    auto result =
        run(base + " --plan " + (dir / "garbage.plan").string());
    CHECK(result.exit_code == 1);
  }
}

TEST_CASE("plan solve: http advisor configured through the environment") {
  httplib::Server server;
  std::string seen_token;
  server.Post("/advise", [&](const httplib::Request &req,
                             httplib::Response &res) {
    if (req.has_header("Authorization"))
      seen_token = req.get_header_value("Authorization");
    res.set_content(R"({"is_good": true, "feedback": ""})", "application/json");
  });
  int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread listener([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  auto result = run("solve " + beer_args() + " --advisor http",
                    false,
                    "PLAN_ADVISOR_URL=http://127.0.0.1:" +
                        std::to_string(port) +
                        "/advise PLAN_ADVISOR_TOKEN=cli-secret");
  server.stop();
  listener.join();

  CHECK(result.exit_code == 0);
  CHECK(result.lines().size() == 7); // review accepted the solver plan
  CHECK(seen_token == "Bearer cli-secret");
}

TEST_CASE("plan bench") {
  SECTION("beer ablation prints the 7-vs-8 table") {
    auto result = run("bench beer --ablation");
    CHECK(result.exit_code == 0);
    CHECK(result.out.find("no-soft-goal") != std::string::npos);
    CHECK(result.out.find("soft-goal penalty=2") != std::string::npos);
    CHECK(result.out.find("includes close-fridge") != std::string::npos);
  }
  SECTION("cube ablation reports the expansion ratio") {
    auto result = run("bench cube --ablation");
    CHECK(result.exit_code == 0);
    CHECK(result.out.find("expansion ratio") != std::string::npos);
  }
  SECTION("plain bench run") {
    auto result = run("bench microwave-fixed");
    CHECK(result.exit_code == 0);
    CHECK(result.out.find("SOLVED") != std::string::npos);
  }
  SECTION("unknown benchmark exits 1") {
    CHECK(run("bench fridge-2000").exit_code == 1);
    CHECK(run("bench microwave-fixed --ablation").exit_code == 1);
  }
}
