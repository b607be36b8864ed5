// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Commenotes Authors

#include <cmath>
#include <random>
#include <set>

#include <catch_amalgamated.hpp>

#include "commenotes/synthesis.hpp"
#include "commenotes/util/digest.hpp"
#include "commenotes/util/text.hpp"
#include "support.hpp"

using namespace commenotes;
using namespace commenotes::synthesis;
using Catch::Approx;
using commenotes::testing::fixture;

namespace {

Post make_post() {
  Post p;
  p.post_id = "p";
  p.author_id = "u";
  p.created_at = Instant{std::chrono::seconds{1'700'000'000}};
  p.text = "The moon landing was staged in 1969.";
  return p;
}

std::vector<Comment> fact_checks(std::size_t n, const std::string& body = "False, according to NASA records") {
  std::vector<Comment> out;
  const auto base = make_post().created_at;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({"c" + std::to_string(i), "p", base + std::chrono::seconds{60 * (i + 1)},
                   body + " #" + std::to_string(i)});
  }
  return out;
}

// n scalar values, each "é" is two bytes.
std::string accented(std::size_t n) {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s += i % 10 == 9 ? "\xC3\xA9" : "a";
  return s;
}

SynthesisConfig config() {
  SynthesisConfig c;
  c.seed = 7;
  return c;
}

}  // namespace

TEST_CASE("eligibility gate at 25", "[synthesis][contract]") {
  ScriptedGenerator g({std::string("A short note.")});
  const auto declined = synthesize(make_post(), fact_checks(24), config(), g);
  REQUIRE_FALSE(declined.generated());
  CHECK(declined.declined().reason == DeclineReason::InsufficientFactChecks);
  CHECK(declined.declined().attempts == 0);
  CHECK(g.calls() == 0);

  const auto ok = synthesize(make_post(), fact_checks(25), config(), g);
  CHECK(g.calls() == 1);
  REQUIRE(ok.generated());
  CHECK(ok.note().text == "A short note.");
  CHECK(ok.note().attempts == 1);
  CHECK(ok.note().source_comment_ids.size() == 25);

  auto one = config();
  one.min_factcheck_comments = 1;
  ScriptedGenerator g1({std::string("n")});
  CHECK(synthesize(make_post(), fact_checks(1), one, g1).generated());
}

TEST_CASE("over-limit output triggers regeneration with the same prompt", "[synthesis][contract]") {
  REQUIRE(text::count_scalar_values(accented(281)) == 281);
  REQUIRE(accented(281).size() > 281);
  ScriptedGenerator g({accented(281), accented(280)});
  const auto r = synthesize(make_post(), fact_checks(30), config(), g);
  REQUIRE(r.generated());
  CHECK(g.calls() == 2);
  CHECK(r.note().attempts == 2);
  CHECK(r.note().text == accented(280));
  const auto reqs = g.requests();
  CHECK(reqs[0].prompt == reqs[1].prompt);
  CHECK(reqs[0].attempt == 1);
  CHECK(reqs[1].attempt == 2);
}

TEST_CASE("persistent overflow declines after exactly max_regenerations calls", "[synthesis][contract]") {
  for (const std::size_t max : {1u, 3u, 5u}) {
    auto c = config();
    c.max_regenerations = max;
    ScriptedGenerator g({accented(400)});
    const auto r = synthesize(make_post(), fact_checks(30), c, g);
    REQUIRE_FALSE(r.generated());
    CHECK(r.declined().reason == DeclineReason::LimitExceededAfterRetries);
    CHECK(r.declined().attempts == max);
    CHECK(g.calls() == max);
  }
}

TEST_CASE("forbidden word and empty replies are retried", "[synthesis][contract]") {
  ScriptedGenerator g({std::string("Comments point out the photos are real."), std::string("  "),
                       std::string("Records show the landing happened.")});
  const auto r = synthesize(make_post(), fact_checks(30), config(), g);
  REQUIRE(r.generated());
  CHECK(r.note().attempts == 3);
  CHECK(contains_forbidden_word("COMMENTS: x"));
  CHECK(contains_forbidden_word("the comments."));
  CHECK_FALSE(contains_forbidden_word("commentsection and commenters"));

  ScriptedGenerator always({std::string("As the comments say, it is fake.")});
  const auto d = synthesize(make_post(), fact_checks(30), config(), always);
  REQUIRE_FALSE(d.generated());
  CHECK(d.declined().reason == DeclineReason::LimitExceededAfterRetries);
  CHECK(d.declined().detail.find("comments") != std::string::npos);
}

TEST_CASE("refusal and transport failures decline", "[synthesis][contract]") {
  ScriptedGenerator refuse({std::string("I Could Not Synthesize a note from this.")});
  const auto r = synthesize(make_post(), fact_checks(30), config(), refuse);
  REQUIRE_FALSE(r.generated());
  CHECK(r.declined().reason == DeclineReason::ModelRefusal);
  CHECK(refuse.calls() == 1);

  ScriptedGenerator down({llm::TransportError{"timeout", 0}});
  const auto t = synthesize(make_post(), fact_checks(30), config(), down);
  REQUIRE_FALSE(t.generated());
  CHECK(t.declined().reason == DeclineReason::TransportFailure);
}

TEST_CASE("stub notes respect the limit and the forbidden word", "[synthesis][contract][stub]") {
  std::mt19937_64 rng(123);
  const std::vector<std::string> words{"false",    "comments", "Comments.", "according", "to",      "the",
                                       "2019",     "report",   "\xF0\x9D\x95\x8F",    "caf\xC3\xA9", "claims",
                                       "@someone", "is",       "wrong",     "because",   "evidence"};
  StubGenerator stub;
  std::size_t generated = 0;
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<Comment> cs;
    const auto n = 25 + rng() % 40;
    for (std::size_t i = 0; i < n; ++i) {
      std::string t;
      const auto len = 1 + rng() % 60;
      for (std::size_t w = 0; w < len; ++w) t += words[rng() % words.size()] + " ";
      cs.push_back({"c" + std::to_string(i), "p", make_post().created_at, t});
    }
    auto c = config();
    c.seed = static_cast<std::uint64_t>(trial);
    c.max_comments = 1 + rng() % 50;
    const auto r = synthesize(make_post(), cs, c, stub);
    if (!r.generated()) continue;
    ++generated;
    REQUIRE(text::count_scalar_values(r.note().text) <= 280);
    REQUIRE_FALSE(contains_forbidden_word(r.note().text));
  }
  CHECK(generated > 250);
}

TEST_CASE("synthesis is deterministic under a fixed seed", "[synthesis][contract]") {
  auto c = config();
  c.max_comments = 10;
  StubGenerator a, b;
  const auto cs = fact_checks(80);
  const auto r1 = synthesize(make_post(), cs, c, a);
  const auto r2 = synthesize(make_post(), cs, c, b);
  CHECK(to_json(r1, c).dump() == to_json(r2, c).dump());
  REQUIRE(r1.generated());
  CHECK(r1.note().source_comment_ids.size() == 10);
  CHECK(r1.note().generated_at <= cs.back().created_at);
  c.seed = 8;
  const auto r3 = synthesize(make_post(), cs, c, a);
  CHECK(r3.note().source_comment_ids != r1.note().source_comment_ids);

  const Instant fixed{std::chrono::seconds{42}};
  const auto clocked = synthesize(make_post(), cs, c, a, [&] { return fixed; });
  CHECK(clocked.note().generated_at == fixed);
}

TEST_CASE("provenance is complete", "[synthesis]") {
  ScriptedGenerator g({std::string("A note.")});
  auto cs = fact_checks(26);
  cs[3].text = "@only @mentions";
  const auto r = synthesize(make_post(), cs, config(), g);
  REQUIRE(r.generated());
  const auto& n = r.note();
  CHECK(n.source_comment_ids.size() == 25);
  CHECK(std::find(n.source_comment_ids.begin(), n.source_comment_ids.end(), "c3") == n.source_comment_ids.end());
  CHECK(n.prompt_hash == sha256_hex(g.requests()[0].prompt));
  CHECK(n.model_id == "stub");
  const auto j = to_json(r, config());
  CHECK(j["outcome"] == "Generated");
  CHECK(j["decline"].is_null());
  CHECK(j["config"]["max_comments"] == 300);
}

TEST_CASE("synthesis prompt is a byte-exact template fill", "[synthesis][prompt]") {
  const std::vector<std::string> texts{"first comment", "second comment"};
  const auto p = build_prompt("P", texts);
  CHECK(p == read_file(fixture("golden/synthesize_P.txt")));
  CHECK(p.find("within 280 characters") != std::string::npos);
  CHECK(p.find("Do not use the word \"comments\" in your answer.") != std::string::npos);
  CHECK(build_prompt("P", texts, 140).find("within 140 characters") != std::string::npos);
  CHECK_THROWS_AS(build_prompt("P", {}), std::invalid_argument);
}

TEST_CASE("prompt token estimate", "[synthesis]") {
  CHECK(estimate_prompt_tokens(300) == Approx(9660.0));
  CHECK(std::fabs(estimate_prompt_tokens(300) - 9700.0) <= 100.0);
}

TEST_CASE("preprocessing strips mentions and drops empty comments", "[synthesis]") {
  const std::vector<Comment> cs{{"a", "p", {}, "@bob   that is false"}, {"b", "p", {}, "@x @y"},
                                {"c", "p", {}, "mail me at a@b.com"}};
  CHECK(preprocess(cs) == std::vector<std::string>{"that is false", "mail me at a@b.com"});
}

TEST_CASE("sample_cap keeps order and caps", "[synthesis][sampling]") {
  const auto cs = fact_checks(350);
  auto c = config();
  const auto capped = sample_cap(cs, c);
  REQUIRE(capped.size() == 300);
  CHECK(std::is_sorted(capped.begin(), capped.end(),
                       [](const Comment& a, const Comment& b) { return a.created_at < b.created_at; }));
  std::set<std::string> ids;
  for (const auto& x : capped) ids.insert(x.comment_id);
  CHECK(ids.size() == 300);
  CHECK(sample_cap(fact_checks(20), c).size() == 20);
  CHECK(sample_indices(10, 3, 5) == sample_indices(10, 3, 5));
  c.max_comments = 0;
  CHECK_THROWS_AS(sample_cap(cs, c), std::invalid_argument);
}

TEST_CASE("cap stage controls whether filtering or capping runs first", "[synthesis][sampling]") {
  std::vector<Comment> slice;
  for (int i = 0; i < 40; ++i) slice.push_back({"c" + std::to_string(i), "p", {}, i % 2 ? "fc" : "chat"});
  const auto is_fc = [](const Comment& c) { return c.text == "fc"; };
  auto c = config();
  c.max_comments = 10;
  CHECK(candidate_comments(slice, is_fc, c).size() == 20);
  c.cap_stage = CapStage::BeforeFilter;
  const auto before = candidate_comments(slice, is_fc, c);
  CHECK(before.size() <= 10);
  for (const auto& x : before) CHECK(x.text == "fc");
}

TEST_CASE("cap of one over 350 comments is uniform across 10000 seeds", "[synthesis][sampling][statistics]") {
  constexpr std::size_t n = 350;
  constexpr std::size_t seeds = 10000;
  std::vector<std::size_t> freq(n, 0);
  for (std::uint64_t s = 0; s < seeds; ++s) {
    const auto idx = sample_indices(n, 1, s);
    REQUIRE(idx.size() == 1);
    ++freq[idx[0]];
  }
  const double p = 1.0 / n;
  const double mu = seeds * p;
  const double sigma = std::sqrt(seeds * p * (1 - p));
  std::size_t outside = 0;
  double chi2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::fabs(static_cast<double>(freq[i]) - mu) > 3 * sigma) {
      ++outside;
      UNSCOPED_INFO("position " << i << " frequency " << freq[i] << " outside " << mu << " +/- " << 3 * sigma);
    }
    chi2 += (freq[i] - mu) * (freq[i] - mu) / mu;
  }
  UNSCOPED_INFO("chi-square " << chi2 << " on " << n - 1 << " df");
  CHECK(outside == 0);
}
