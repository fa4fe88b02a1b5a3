#include <catch2/catch.hpp>

#include "planner/detail/sha256.hpp"
#include "planner/pddl.hpp"
#include "planner/signature.hpp"

#include "helpers.hpp"

using namespace planner;

TEST_CASE("sha-256 matches the NIST short-message vectors") {
  CHECK(detail::sha256_hex("") ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(detail::sha256_hex("abc") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(detail::sha256_hex("abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq") ==
        "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
  // 56-byte message exercises the two-block padding path
  CHECK(detail::sha256_hex(std::string(56, 'a')) ==
        detail::sha256_hex(std::string(56, 'a')));
  CHECK(detail::sha256_hex(std::string(1000, 'x')).size() == 64);
}

TEST_CASE("signatures ignore fact order, whitespace and case") {
  auto b = testutil::load("beer");
  auto base = sig::create_signature(b.domain, b.problem);
  CHECK(base.domain_digest.size() == 64);
  CHECK(base.problem_digest.size() == 64);

  SECTION("shuffled init facts") {
    auto shuffled = b.problem;
    std::reverse(shuffled.init.begin(), shuffled.init.end());
    CHECK(sig::create_signature(b.domain, shuffled) == base);
  }
  SECTION("reparsed from noisy text") {
    std::string text = testutil::slurp(testutil::bench_dir() / "beer" /
                                       "problem.pddl");
    // uppercase everything and stretch the whitespace
    std::string noisy;
    for (char c : text) {
      noisy.push_back(static_cast<char>(std::toupper(c)));
      if (c == ' ') noisy.push_back(' ');
    }
    auto reparsed = pddl::parse_problem(noisy, b.domain);
    CHECK(sig::create_signature(b.domain, reparsed) == base);
  }
  SECTION("print/parse round trip preserves the signature") {
    auto again = pddl::parse_problem(pddl::print_problem(b.problem), b.domain);
    CHECK(sig::create_signature(b.domain, again) == base);
  }
}

TEST_CASE("signature separates problems, goals, domains and soft goals") {
  auto b = testutil::load("beer");
  auto base = sig::create_signature(b.domain, b.problem);

  SECTION("extending the goal changes the problem digest") {
    auto extended = b.problem;
    extended.goal.push_back(model::GroundLiteral{
        model::GroundAtom{"fridge-closed", {"fridge"}}, false});
    auto other = sig::create_signature(b.domain, extended);
    CHECK(other.domain_digest == base.domain_digest);
    CHECK(other.problem_digest != base.problem_digest);
  }
  SECTION("soft goals are part of the key") {
    auto softened = b.problem;
    softened.soft_goals.push_back(
        model::SoftGoal{model::GroundAtom{"fridge-closed", {"fridge"}}, 2});
    CHECK(sig::create_signature(b.domain, softened).problem_digest !=
          base.problem_digest);
  }
  SECTION("flawed vs fixed microwave domains cannot collide") {
    auto flawed = testutil::load("microwave-flawed");
    auto fixed = testutil::load("microwave-fixed");
    auto s1 = sig::create_signature(flawed.domain, flawed.problem);
    auto s2 = sig::create_signature(fixed.domain, fixed.problem);
    CHECK(s1.domain_digest != s2.domain_digest);
    CHECK(s1.problem_digest == s2.problem_digest); // same problem text
    CHECK(s1.to_string() != s2.to_string());
  }
}

TEST_CASE("no alpha-renaming: renamed objects get a fresh signature") {
  auto b = testutil::load("beer");
  auto renamed = b.problem;
  for (auto &o : renamed.objects)
    if (o.name == "beer-bottle") o.name = "lager-bottle";
  for (auto &atom : renamed.init)
    for (auto &arg : atom.args)
      if (arg == "beer-bottle") arg = "lager-bottle";
  for (auto &lit : renamed.goal)
    for (auto &arg : lit.atom.args)
      if (arg == "beer-bottle") arg = "lager-bottle";
  CHECK(sig::create_signature(b.domain, renamed).problem_digest !=
        sig::create_signature(b.domain, b.problem).problem_digest);
}

TEST_CASE("signatures of all bundled benchmarks are pairwise distinct") {
  std::vector<std::string> keys;
  for (const auto &name : bench::benchmark_names()) {
    auto b = testutil::load(name);
    keys.push_back(sig::create_signature(b.domain, b.problem).to_string());
  }
  std::sort(keys.begin(), keys.end());
  CHECK(std::adjacent_find(keys.begin(), keys.end()) == keys.end());
}

TEST_CASE("signature string form") {
  auto b = testutil::load("cube");
  auto s = sig::create_signature(b.domain, b.problem);
  CHECK(s.to_string() == s.domain_digest + ":" + s.problem_digest);
  CHECK(s.to_string().size() == 129);
}
