// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Commenotes Authors

#include <random>
#include <set>

#include <catch_amalgamated.hpp>

#include <fmt/format.h>

#include "commenotes/evaluation.hpp"
#include "support.hpp"

using namespace commenotes;
using namespace commenotes::evaluation;
using Catch::Approx;
using commenotes::testing::TempDir;

namespace {

std::vector<std::string> ids(const std::string& prefix, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 1; i <= n; ++i) out.push_back(fmt::format("{}-{:02}", prefix, i));
  return out;
}

// Recounts a plan from scratch without using check_balance.
void require_balanced(const StudyPlan& plan, std::size_t expected_per_post) {
  const std::set<std::string> pool(plan.post_pool.begin(), plan.post_pool.end());
  std::map<std::string, std::size_t> per_post;
  REQUIRE(plan.assignments.size() == plan.raters.size());
  REQUIRE(plan.pair_order.size() == plan.raters.size() * plan.posts_per_rater);
  for (const auto& rater : plan.raters) {
    const auto& posts = plan.assignments.at(rater);
    REQUIRE(posts.size() == plan.posts_per_rater);
    REQUIRE(std::set<std::string>(posts.begin(), posts.end()).size() == posts.size());
    std::size_t first = 0, second = 0;
    for (const auto& p : posts) {
      REQUIRE(pool.count(p) == 1);
      ++per_post[p];
      const auto o = plan.pair_order.at({rater, p});
      (o == PairOrder::CommenoteFirst ? first : second)++;
    }
    REQUIRE(first + second == plan.posts_per_rater);
    REQUIRE((first > second ? first - second : second - first) <= 1);
  }
  REQUIRE(per_post.size() == pool.size());
  for (const auto& [post, n] : per_post) REQUIRE(n == expected_per_post);
}

RatingRecord rating(const std::string& rater, const std::string& post, NoteSource src, Helpfulness h,
                    std::array<int, 5> ch = {3, 3, 3, 3, 3}, const std::string& group = "g") {
  RatingRecord r;
  r.rater_id = rater;
  r.post_id = post;
  r.note_source = src;
  r.helpfulness = h;
  r.characteristics = ch;
  r.group = group;
  return r;
}

WinChoice win(const std::string& rater, const std::string& post, NoteSource choice, const std::string& group = "g") {
  return WinChoice{rater, post, choice, Instant{}, group};
}

std::vector<PairedRating> pairs_with_wins(std::size_t wins, std::size_t n) {
  std::vector<PairedRating> out;
  for (std::size_t i = 0; i < n; ++i) {
    PairedRating p;
    p.rater_id = fmt::format("r{:04}", i);
    p.post_id = "p";
    p.win = i < wins ? NoteSource::Commenote : NoteSource::HumanNote;
    out.push_back(p);
  }
  return out;
}

}  // namespace

TEST_CASE("helpfulness mapping covers every level exactly", "[evaluation]") {
  const std::map<Helpfulness, double> expected{
      {Helpfulness::NotHelpful, 0.0}, {Helpfulness::SomewhatHelpful, 0.5}, {Helpfulness::Helpful, 1.0}};
  std::set<double> seen;
  for (const auto h : {Helpfulness::NotHelpful, Helpfulness::SomewhatHelpful, Helpfulness::Helpful}) {
    CHECK(map_helpfulness(h) == expected.at(h));
    seen.insert(map_helpfulness(h));
    CHECK(helpfulness_from_string(to_string(h)) == h);
  }
  CHECK(seen == std::set<double>{0.0, 0.5, 1.0});
  CHECK_FALSE(helpfulness_from_string("VeryHelpful"));
}

TEST_CASE("study plan balance with 36 raters and 20 posts over 60", "[evaluation][plan]") {
  const auto plan = plan_study(ids("post", 60), 20, ids("rater", 36), 2024);
  CHECK(plan.ratings_per_post() == 12);
  require_balanced(plan, 12);
  const auto report = check_balance(plan);
  CHECK(report.ok);
  for (const auto& [post, n] : report.per_post) CHECK(n == 12);
  CHECK(plan_study(ids("post", 60), 20, ids("rater", 36), 2024) == plan);
  CHECK(plan_study(ids("post", 60), 20, ids("rater", 36), 2025) != plan);
  CHECK(plan_from_json(to_json(plan)) == plan);
}

TEST_CASE("study plan balance over every small configuration", "[evaluation][plan]") {
  std::size_t checked = 0;
  for (std::size_t pool = 1; pool <= 8; ++pool) {
    for (std::size_t k = 1; k <= pool; ++k) {
      for (std::size_t raters = 1; raters <= 10; ++raters) {
        if ((raters * k) % pool != 0) {
          CHECK_THROWS_AS(plan_study(ids("p", pool), k, ids("r", raters), 1), std::invalid_argument);
          continue;
        }
        for (std::uint64_t seed = 0; seed < 4; ++seed) {
          const auto plan = plan_study(ids("p", pool), k, ids("r", raters), seed);
          require_balanced(plan, raters * k / pool);
          REQUIRE(check_balance(plan).ok);
          ++checked;
        }
      }
    }
  }
  CHECK(checked > 100);
  const auto small = plan_study(ids("p", 4), 2, ids("r", 6), 3);
  CHECK(small.ratings_per_post() == 3);
}

TEST_CASE("plan validation and tampering", "[evaluation][plan]") {
  CHECK_THROWS_AS(plan_study({}, 1, ids("r", 1), 0), std::invalid_argument);
  CHECK_THROWS_AS(plan_study(ids("p", 3), 4, ids("r", 3), 0), std::invalid_argument);
  CHECK_THROWS_AS(plan_study({"a", "a"}, 1, ids("r", 2), 0), std::invalid_argument);
  auto plan = plan_study(ids("p", 4), 2, ids("r", 6), 3);
  auto& first = plan.assignments.begin()->second;
  first[1] = first[0];
  CHECK_FALSE(check_balance(plan).ok);

  const auto fresh = plan_study(ids("p", 4), 2, ids("r", 6), 3);
  const auto deficits = assignment_deficits(fresh, {"r-01", "r-02", "r-03", "r-04", "r-05"});
  std::size_t missing = 0;
  for (const auto& [post, n] : deficits) missing += n;
  CHECK(missing == 2);
}

TEST_CASE("demographics and buckets", "[evaluation]") {
  CHECK(stance_of(1) == Stance::Left);
  CHECK(stance_of(3) == Stance::Left);
  CHECK(stance_of(4) == Stance::Neutral);
  CHECK(stance_of(7) == Stance::Right);
  CHECK_THROWS_AS(stance_of(0), std::invalid_argument);
  const std::vector<Demographics> d{{"a", 2, 90, 10}, {"b", 4, 50, 50}, {"c", 6, 40, 60}, {"d", 5, 0, 100}};
  CHECK(d[0].ap() == 80.0);
  const auto buckets = polarization_buckets(d);
  // median AP is 50
  CHECK(buckets.at("a") == Polarization::High);
  CHECK(buckets.at("b") == Polarization::LowMed);
  CHECK(buckets.at("c") == Polarization::LowMed);
  CHECK(buckets.at("d") == Polarization::High);
  CHECK(validate(Demographics{"x", 8, 0, 0}) == "ideology");
  CHECK(validate(Demographics{"x", 4, 101, 0}) == "ft_view1");
  CHECK(validate(Demographics{"x", 4, 1, 2}) == std::nullopt);
  CHECK(demographics_from_json(to_json(d[3])) == d[3]);
}

TEST_CASE("rating validation and json", "[evaluation]") {
  auto r = rating("r", "p", NoteSource::HumanNote, Helpfulness::SomewhatHelpful, {1, 2, 3, 4, 5});
  CHECK(validate(r) == std::nullopt);
  CHECK(r.characteristic(Dimension::Coverage) == 3);
  CHECK(value_of(r, Dimension::Helpfulness) == 0.5);
  CHECK(value_of(r, Dimension::Impartiality) == 5.0);
  CHECK(rating_from_json(to_json(r)) == r);
  CHECK(to_json(r)["characteristics"].contains("quality"));
  r.characteristics[4] = 6;
  CHECK(validate(r) == "impartiality");
  const auto w = win("r", "p", NoteSource::HumanNote);
  CHECK(win_choice_from_json(to_json(w)) == w);
}

TEST_CASE("win rate reproduces the reported intervals", "[evaluation][win]") {
  const auto w = win_rate(pairs_with_wins(505, 720));
  CHECK(w.commenote_wins == 505);
  CHECK(w.ci.p_hat == Approx(0.701).margin(5e-4));
  CHECK(w.ci.lower == Approx(0.667).margin(0.002));
  CHECK(w.ci.upper == Approx(0.734).margin(0.002));
  const auto w2 = win_rate(pairs_with_wins(388, 720));
  CHECK(w2.ci.lower == Approx(0.502).margin(0.002));
  CHECK(w2.ci.upper == Approx(0.575).margin(0.002));
  CHECK(w2.test.p_value == Approx(0.0403).margin(5e-4));
  const auto wald = win_rate(pairs_with_wins(505, 720), 0.95, stats::IntervalMethod::Wald);
  CHECK(wald.ci.method == stats::IntervalMethod::Wald);
  CHECK(wald.ci.lower == Approx(0.667).margin(0.002));
  CHECK_THROWS_AS(win_rate(std::vector<PairedRating>{}), std::invalid_argument);
}

TEST_CASE("pairs join ratings and win choices", "[evaluation][store]") {
  RatingStore store;
  store.add(rating("r1", "p1", NoteSource::Commenote, Helpfulness::Helpful));
  store.add(rating("r1", "p1", NoteSource::HumanNote, Helpfulness::Helpful));
  store.add(win("r1", "p1", NoteSource::Commenote));
  store.add(rating("r1", "p2", NoteSource::Commenote, Helpfulness::Helpful));
  store.add(rating("r1", "p2", NoteSource::HumanNote, Helpfulness::NotHelpful));
  store.add(win("r1", "p2", NoteSource::HumanNote));
  const auto pairs = store.pairs();
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0].post_id == "p1");
  CHECK(both_helpful(pairs).size() == 1);
  CHECK(win_rate(store, "g").commenote_wins == 1);
  CHECK(store.groups() == std::vector<std::string>{"g"});

  RatingStore broken = store;
  broken.add(rating("r2", "p1", NoteSource::Commenote, Helpfulness::Helpful));
  CHECK_THROWS_AS(broken.pairs(), std::invalid_argument);
  RatingStore doubled = store;
  doubled.add(win("r1", "p1", NoteSource::HumanNote));
  CHECK_THROWS_AS(doubled.pairs(), std::invalid_argument);
  CHECK(store.restricted_to({"nobody"}).pairs().empty());
}

TEST_CASE("compare_sources uses a paired signed-rank test", "[evaluation][compare]") {
  std::vector<PairedRating> pairs;
  for (int i = 0; i < 12; ++i) {
    PairedRating p;
    p.rater_id = fmt::format("r{:02}", i);
    p.post_id = "p";
    p.commenote = rating(p.rater_id, "p", NoteSource::Commenote, Helpfulness::Helpful, {5, 4, 4, 4, 4});
    p.human = rating(p.rater_id, "p", NoteSource::HumanNote,
                     i % 3 == 0 ? Helpfulness::Helpful : Helpfulness::SomewhatHelpful, {3, 4, 4, 4, 4});
    pairs.push_back(p);
  }
  const auto h = compare_sources(pairs, Dimension::Helpfulness);
  REQUIRE(h.test);
  CHECK(h.direction == "Commenote");
  CHECK(h.mean_commenote == 1.0);
  CHECK(h.mean_human == Approx((4 * 1.0 + 8 * 0.5) / 12));
  std::vector<double> a(12), b(12);
  for (int i = 0; i < 12; ++i) {
    a[i] = 1.0;
    b[i] = i % 3 == 0 ? 1.0 : 0.5;
  }
  CHECK(h.test->p_value == stats::wilcoxon_signed_rank(a, b).p_value);
  CHECK(compare_sources(pairs, Dimension::Quality).test->p_value < 0.01);
  const auto same = compare_sources(pairs, Dimension::Clarity);
  CHECK_FALSE(same.test);
  CHECK(same.direction == "none");
  CHECK(same.notice == "no difference");
}

TEST_CASE("subgroup analysis finds a planted shift", "[evaluation][subgroup]") {
  std::mt19937_64 rng(11);
  std::vector<PairedRating> pairs;
  std::map<std::string, Demographics> demo;
  for (int r = 0; r < 30; ++r) {
    const auto id = fmt::format("r{:02}", r);
    const int ideology = r < 10 ? 2 : r < 20 ? 4 : 6;
    demo[id] = Demographics{id, ideology, static_cast<double>(r * 3), 50.0};
    for (int p = 0; p < 8; ++p) {
      PairedRating pr;
      pr.rater_id = id;
      pr.post_id = fmt::format("p{}", p);
      const bool left = ideology == 2;
      const auto noise = static_cast<int>(rng() % 3);
      pr.commenote = rating(id, pr.post_id, NoteSource::Commenote, left ? Helpfulness::Helpful : Helpfulness(noise));
      pr.human = rating(id, pr.post_id, NoteSource::HumanNote,
                        left ? Helpfulness::NotHelpful : Helpfulness(static_cast<int>(rng() % 3)));
      pairs.push_back(pr);
    }
  }
  const auto t = subgroup_analysis(pairs, demo, Grouping::Stance);
  REQUIRE(t.rows.size() == 3);
  CHECK(t.rows[0].bucket == "Left");
  CHECK(t.rows[0].mean_difference == 1.0);
  CHECK(t.rows[0].raters == 10);
  CHECK(t.rows[0].pairs == 80);
  // constant differences leave the paired test undefined
  CHECK_FALSE(t.rows[0].paired_t);
  CHECK(t.rows[0].notice);
  REQUIRE(t.across);
  CHECK(t.across->p_value < 0.001);
  CHECK(std::fabs(t.rows[1].mean_difference) < 0.4);

  const auto pol = subgroup_analysis(pairs, demo, Grouping::Polarization);
  CHECK(pol.rows.size() == 2);

  auto left_only = std::vector<PairedRating>(pairs.begin(), pairs.begin() + 80);
  const auto single = subgroup_analysis(left_only, demo, Grouping::Stance);
  CHECK_FALSE(single.across);
  CHECK(single.notices.size() == 3);

  demo.erase("r00");
  CHECK_THROWS_AS(subgroup_analysis(pairs, demo, Grouping::Stance), std::invalid_argument);
}

TEST_CASE("study report files", "[evaluation][report]") {
  const auto plan = plan_study(ids("post", 4), 2, ids("rater", 6), 5);
  RatingStore store;
  for (const auto& [rater, posts] : plan.assignments) {
    store.add(Demographics{rater, 3, 20, 80});
    for (const auto& post : posts) {
      store.add(rating(rater, post, NoteSource::Commenote, Helpfulness::Helpful, {4, 4, 4, 4, 4}));
      store.add(rating(rater, post, NoteSource::HumanNote, Helpfulness::SomewhatHelpful, {3, 4, 4, 4, 2}));
      store.add(win(rater, post, NoteSource::Commenote));
    }
  }
  const std::set<std::string> excluded{"rater-01"};
  const auto report = build_report("s1", store, &plan, &excluded);
  REQUIRE(report.groups.size() == 1);
  CHECK(report.groups[0].pairs == 10);
  CHECK(report.groups[0].raters == 5);
  CHECK(report.groups[0].win_rate.commenote_wins == 10);
  CHECK(report.excluded_raters == std::vector<std::string>{"rater-01"});
  std::size_t missing = 0;
  for (const auto& [post, n] : report.deficits) missing += n;
  CHECK(missing == 2);
  CHECK(report.groups[0].comparisons.size() == 6);

  TempDir dir;
  write_report(dir.path(), report);
  for (const auto* f : {"report.json", "helpfulness.csv", "win_rate.csv", "dimensions.csv", "subgroups.csv"}) {
    CHECK(std::filesystem::exists(dir / f));
  }
  const auto j = json::parse(read_file(dir / "report.json"));
  CHECK(j["study_id"] == "s1");
  CHECK(j["groups"][0]["win_rate"]["commenote_wins"] == 10);
  CHECK(read_file(dir / "win_rate.csv").rfind("group,subset,commenote_wins,pairs,p_hat,ci_lower,ci_upper,p_value\n", 0) == 0);
}
