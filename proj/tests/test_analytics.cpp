// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Commenotes Authors

#include <algorithm>
#include <cmath>
#include <map>

#include <catch_amalgamated.hpp>

#include "commenotes/analytics.hpp"
#include "support.hpp"

using namespace commenotes;
using namespace commenotes::analytics;
using Catch::Approx;
using commenotes::testing::TempDir;
using commenotes::testing::fixture;

namespace {

struct Loaded {
  corpus::Corpus corpus;
  std::vector<filter::ClassifierVerdict> verdicts;
  VerdictStore store;
};

const Loaded& analytics_fixture() {
  static const Loaded loaded = [] {
    Loaded l;
    auto r = corpus::load_corpus(fixture("analytics/posts.jsonl"), fixture("analytics/comments.jsonl"),
                                 fixture("analytics/notes.jsonl"), {.strict = true});
    l.corpus = std::move(r.corpus);
    for (const auto& p : l.corpus.posts()) {
      for (const auto& c : l.corpus.comments_of(p.post_id)) {
        l.verdicts.push_back(filter::heuristic_classify(p, c));
      }
    }
    l.store = VerdictStore(l.verdicts);
    return l;
  }();
  return loaded;
}

Post post_at(Instant t, std::string id = "p") {
  Post p;
  p.post_id = std::move(id);
  p.created_at = t;
  p.text = "x";
  return p;
}

Comment comment_at(const Post& p, long long seconds, std::string id = "c") {
  return Comment{std::move(id), p.post_id, p.created_at + std::chrono::seconds{seconds}, "x"};
}

PostBins bins_from_counts(std::string id, const std::vector<std::size_t>& counts) {
  PostBins pb{std::move(id), {}};
  for (std::size_t i = 0; i < counts.size(); ++i) {
    pb.bins.push_back({i, kBinWidth * static_cast<long long>(i), counts[i]});
  }
  return pb;
}

double naive_median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2;
}

}  // namespace

TEST_CASE("binning boundaries are half-open", "[analytics][bins]") {
  const auto p = post_at(Instant{std::chrono::seconds{1000}});
  const auto bins = bin_fact_checks(p, std::vector{comment_at(p, 60), comment_at(p, 16 * 60)}, Duration{1800});
  REQUIRE(bins.size() == 2);
  CHECK(bins[0].count == 1);
  CHECK(bins[1].count == 1);
  CHECK(bins[1].start_offset == Duration{900});
  const auto edge = bin_fact_checks(p, std::vector{comment_at(p, 900)}, Duration{1800});
  CHECK(edge[0].count == 0);
  CHECK(edge[1].count == 1);
  const auto outside = bin_fact_checks(p, std::vector{comment_at(p, -5), comment_at(p, 1800)}, Duration{1800});
  CHECK(outside[0].count + outside[1].count == 0);
  CHECK_THROWS_AS(bin_fact_checks(p, {}, Duration{1000}), std::invalid_argument);
  CHECK_THROWS_AS(bin_fact_checks(p, {}, Duration{0}), std::invalid_argument);
  auto stray = comment_at(p, 10);
  stray.post_id = "q";
  CHECK_THROWS_AS(bin_fact_checks(p, std::vector{stray}, Duration{900}), std::invalid_argument);
}

TEST_CASE("fixture bins equal a brute-force histogram", "[analytics][bins]") {
  const auto& f = analytics_fixture();
  const auto& post = f.corpus.post("a1");
  const auto all = f.corpus.comments_of("a1");
  std::size_t in_two_hours = 0;
  for (const auto& c : all) in_two_hours += (c.created_at - post.created_at) < std::chrono::hours{2};
  CHECK(in_two_hours == 28);

  const auto fcs = fact_checks_of(all, f.store);
  const auto bins = bin_fact_checks(post, fcs, std::chrono::hours{2});
  std::vector<std::size_t> brute(8, 0);
  std::size_t inside = 0;
  for (const auto& c : fcs) {
    const auto secs = (c.created_at - post.created_at).count();
    if (secs < 0 || secs >= 7200) continue;
    ++brute[static_cast<std::size_t>(secs / 900)];
    ++inside;
  }
  std::vector<std::size_t> got;
  std::size_t total = 0;
  for (const auto& b : bins) {
    got.push_back(b.count);
    total += b.count;
  }
  CHECK(got == brute);
  CHECK(total == inside);
  CHECK(inside == 21);
}

TEST_CASE("cumulative curves", "[analytics][curves]") {
  const std::vector<PostBins> one{bins_from_counts("x", {2, 0, 2})};
  const auto count = cumulative_curve(one, CurveKind::Count);
  CHECK(count.mean_values == std::vector<double>{2, 2, 4});
  CHECK(count.offsets == std::vector<Duration>{Duration{900}, Duration{1800}, Duration{2700}});
  const auto pct = cumulative_curve(one, CurveKind::Percentage);
  CHECK(pct.mean_values == std::vector<double>{0.5, 0.5, 1.0});

  const std::vector<PostBins> twins{bins_from_counts("x", {1, 3, 0}), bins_from_counts("y", {1, 3, 0})};
  const auto t = cumulative_curve(twins, CurveKind::Percentage);
  CHECK(t.mean_values == t.median_values);
  CHECK(t.mean_values == cumulative_curve(std::vector{twins[0]}, CurveKind::Percentage).mean_values);

  const std::vector<PostBins> with_empty{bins_from_counts("x", {1, 1}), bins_from_counts("z", {0, 0})};
  CHECK(cumulative_curve(with_empty, CurveKind::Percentage).posts_used == 1);
  CHECK(cumulative_curve(with_empty, CurveKind::Count).posts_used == 2);

  CHECK_THROWS_AS(cumulative_curve({}, CurveKind::Count), std::invalid_argument);
  const std::vector<PostBins> mismatched{bins_from_counts("x", {1}), bins_from_counts("y", {1, 2})};
  CHECK_THROWS_AS(cumulative_curve(mismatched, CurveKind::Count), std::invalid_argument);
}

TEST_CASE("fixture curves equal a naive recomputation", "[analytics][curves]") {
  const auto& f = analytics_fixture();
  std::vector<PostBins> all;
  std::vector<std::vector<double>> counts_table;
  for (const auto& p : f.corpus.posts()) {
    const auto fcs = fact_checks_of(f.corpus.comments_of(p.post_id), f.store);
    all.push_back({p.post_id, bin_fact_checks(p, fcs, std::chrono::hours{2})});
    std::vector<double> row(8, 0.0);
    for (const auto& c : fcs) {
      const auto secs = (c.created_at - p.created_at).count();
      for (long long b = 0; b < 8; ++b) {
        if (secs >= 0 && secs < (b + 1) * 900) row[b] += 1;
      }
    }
    counts_table.push_back(row);
  }
  const auto count = cumulative_curve(all, CurveKind::Count);
  const auto pct = cumulative_curve(all, CurveKind::Percentage);
  std::size_t with_fc = 0;
  for (const auto& row : counts_table) with_fc += row.back() > 0;
  CHECK(pct.posts_used == with_fc);
  for (std::size_t b = 0; b < 8; ++b) {
    std::vector<double> col, fraction;
    for (const auto& row : counts_table) {
      col.push_back(row[b]);
      if (row.back() > 0) fraction.push_back(row[b] / row.back());
    }
    double sum = 0, fsum = 0;
    for (const auto v : col) sum += v;
    for (const auto v : fraction) fsum += v;
    CHECK(count.mean_values[b] == Approx(sum / col.size()).epsilon(1e-12));
    CHECK(count.median_values[b] == naive_median(col));
    CHECK(pct.mean_values[b] == Approx(fsum / fraction.size()).epsilon(1e-12));
    CHECK(pct.median_values[b] == Approx(naive_median(fraction)).epsilon(1e-12));
    if (b > 0) CHECK(pct.mean_values[b] >= pct.mean_values[b - 1]);
  }
  CHECK(pct.mean_values.back() == Approx(1.0));
}

TEST_CASE("popularity formula properties", "[analytics][popularity]") {
  CHECK(popularity_score(2, 1) == 2.0);
  CHECK(popularity_score(3, 3) == 1.0);
  for (const double c : {1.0, 2.0, 7.0, 16.0, 1000.0}) {
    CHECK(popularity_score(c, c) == 1.0);
    for (const double h : {0.25, 1.0, 8.0, 33.3}) {
      CHECK(popularity_score(2 * c, h) == Approx(popularity_score(c, h) + 1).epsilon(1e-14));
      CHECK(popularity_score(c + 1, h) > popularity_score(c, h));
      CHECK(popularity_score(c, h * 1.5) < popularity_score(c, h));
    }
  }
  CHECK_THROWS_AS(popularity_score(0, 1), std::invalid_argument);

  const auto& f = analytics_fixture();
  std::size_t scored = 0;
  for (const auto& p : f.corpus.posts()) {
    const auto r = popularity(p, f.corpus.comments_of(p.post_id));
    REQUIRE(std::holds_alternative<PopularityScore>(r));
    const auto& s = std::get<PopularityScore>(r);
    CHECK(s.s == Approx(std::log2(s.c / s.h) + 1).epsilon(1e-14));
    CHECK(popularity_score(2.0 * s.c, s.h) == Approx(s.s + 1).epsilon(1e-14));
    ++scored;
  }
  CHECK(scored == 5);
}

TEST_CASE("popularity on the hand-computed fixture post", "[analytics][popularity]") {
  const auto& f = analytics_fixture();
  const auto r = popularity(f.corpus.post("a2"), f.corpus.comments_of("a2"));
  REQUIRE(std::holds_alternative<PopularityScore>(r));
  const auto& s = std::get<PopularityScore>(r);
  CHECK(s.c == 16);
  CHECK(s.h == 8.0);
  CHECK(s.s == 2.0);
}

TEST_CASE("posts without usable comments are excluded with a reason", "[analytics][popularity]") {
  const auto p = post_at(Instant{std::chrono::seconds{0}});
  const auto none = popularity(p, {});
  REQUIRE(std::holds_alternative<PopularityExclusion>(none));
  CHECK(std::get<PopularityExclusion>(none).reason == "no comments");
  const auto instant = popularity(p, std::vector{comment_at(p, 0)});
  CHECK(std::get<PopularityExclusion>(instant).reason == "zero-length timeline");
  const auto late = popularity(p, std::vector{comment_at(p, 3600)}, {.fixed_timeline = Duration{3600}});
  CHECK(std::get<PopularityExclusion>(late).reason == "no comments inside the popularity window");
  const auto fixed = popularity(p, std::vector{comment_at(p, 60), comment_at(p, 7000)},
                                {.fixed_timeline = Duration{4500}});
  CHECK(std::get<PopularityScore>(fixed).c == 1);
  CHECK(std::get<PopularityScore>(fixed).h == 1.0);

  TempDir dir;
  const std::vector<PopularityResult> rows{fixed, none};
  write_popularity_csv(dir / "pop.csv", rows);
  CHECK(read_file(dir / "pop.csv") == "post_id,c,h,s,excluded_reason\np,1,1,1,\np,,,,no comments\n");
}

TEST_CASE("verdict store requires a verdict for every comment", "[analytics]") {
  VerdictStore store;
  store.insert({"a", filter::Label::FactCheck, std::nullopt, "x"});
  const auto p = post_at(Instant{});
  CHECK(store.is_fact_check(comment_at(p, 1, "a")));
  CHECK_THROWS_AS(store.is_fact_check(comment_at(p, 1, "b")), std::invalid_argument);
}

TEST_CASE("author breakdown equals a naive group-by", "[analytics][breakdown]") {
  const auto& f = analytics_fixture();
  std::map<std::string, filter::Label> label;
  for (const auto& v : f.verdicts) label[v.comment_id] = v.label;
  std::map<bool, std::vector<std::pair<double, double>>> groups;
  for (const auto& p : f.corpus.posts()) {
    double fc = 0, total = 0;
    for (const auto& c : f.corpus.comments_of(p.post_id)) {
      if (c.created_at - p.created_at >= std::chrono::hours{2}) continue;
      ++total;
      fc += label.at(c.comment_id) == filter::Label::FactCheck;
    }
    groups[p.author_verified].emplace_back(fc, total);
  }
  const auto table = author_breakdown(f.corpus, f.store, std::chrono::hours{2});
  REQUIRE(table.rows.size() == 2);
  CHECK(table.notices.empty());
  for (const auto& row : table.rows) {
    const auto& g = groups.at(row.group == "Verified");
    double cs = 0, ps = 0, pn = 0;
    for (const auto& [fc, total] : g) {
      cs += fc;
      if (total > 0) {
        ps += fc / total;
        ++pn;
      }
    }
    CHECK(row.posts == g.size());
    CHECK(row.mean_count == Approx(cs / g.size()).epsilon(1e-12));
    CHECK(row.mean_proportion == Approx(ps / pn).epsilon(1e-12));
  }
}

TEST_CASE("author breakdown trivial cases", "[analytics][breakdown]") {
  std::vector<Post> posts;
  std::vector<Comment> comments;
  std::vector<filter::ClassifierVerdict> verdicts;
  for (const bool verified : {true, false}) {
    auto p = post_at(Instant{std::chrono::seconds{0}}, verified ? "v" : "u");
    p.author_id = p.post_id;
    p.author_verified = verified;
    p.topics = {corpus::Topic::Politics};
    for (int i = 0; i < 10; ++i) {
      auto c = comment_at(p, 60 * (i + 1), p.post_id + std::to_string(i));
      const bool fc = i < (verified ? 4 : 1);
      verdicts.push_back({c.comment_id, fc ? filter::Label::FactCheck : filter::Label::NotFactCheck, std::nullopt, "x"});
      comments.push_back(c);
    }
    posts.push_back(p);
  }
  const corpus::Corpus both(posts, comments, {});
  const VerdictStore store(verdicts);
  const auto t = author_breakdown(both, store, std::chrono::hours{2});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0].group == "Verified");
  CHECK(t.rows[0].mean_proportion == Approx(0.4));
  CHECK(t.rows[1].mean_proportion == Approx(0.1));

  std::vector<Comment> only_verified;
  for (const auto& c : comments) {
    if (c.post_id == "v") only_verified.push_back(c);
  }
  const corpus::Corpus single({posts[0]}, only_verified, {});
  const auto s = author_breakdown(single, store, std::chrono::hours{2});
  CHECK(s.rows.size() == 1);
  REQUIRE(s.notices.size() == 1);
  CHECK(s.notices[0].find("Unverified") != std::string::npos);

  const auto topics = topic_breakdown(both, store);
  REQUIRE(topics.rows.size() == 1);
  CHECK(topics.rows[0].group == "Politics");
  CHECK(topics.rows[0].posts == 2);
}

TEST_CASE("topic breakdown equals a naive group-by", "[analytics][breakdown]") {
  const auto& f = analytics_fixture();
  std::map<std::string, filter::Label> label;
  for (const auto& v : f.verdicts) label[v.comment_id] = v.label;
  std::map<std::string, std::vector<std::pair<double, double>>> groups;
  for (const auto& p : f.corpus.posts()) {
    const auto note = f.corpus.note_for(p.post_id);
    double fc = 0, total = 0;
    for (const auto& c : f.corpus.comments_of(p.post_id)) {
      if (note.displayed_at && c.created_at >= *note.displayed_at) continue;
      ++total;
      fc += label.at(c.comment_id) == filter::Label::FactCheck;
    }
    for (const auto t : p.topics) groups[std::string(corpus::to_string(t))].emplace_back(fc, total);
  }
  const auto table = topic_breakdown(f.corpus, f.store);
  REQUIRE(table.rows.size() == groups.size());
  CHECK(table.notices.empty());
  for (const auto& row : table.rows) {
    const auto& g = groups.at(row.group);
    double cs = 0, ps = 0, pn = 0;
    for (const auto& [fc, total] : g) {
      cs += fc;
      if (total > 0) {
        ps += fc / total;
        ++pn;
      }
    }
    CHECK(row.posts == g.size());
    CHECK(row.mean_count == Approx(cs / g.size()).epsilon(1e-12));
    CHECK(row.mean_proportion == Approx(ps / pn).epsilon(1e-12));
  }
  CHECK(groups.at("Politics").size() == 2);
  CHECK(groups.at("SciTech").size() == 2);
}

TEST_CASE("csv writers", "[analytics][csv]") {
  TempDir dir;
  const std::vector<PostBins> bins{bins_from_counts("a,b", {1, 0})};
  write_bins_csv(dir / "bins.csv", bins);
  CHECK(read_file(dir / "bins.csv") == "post_id,bin_index,start_offset_minutes,count\n\"a,b\",0,0,1\n\"a,b\",1,15,0\n");
  write_curve_csv(dir / "curve.csv", cumulative_curve(bins, CurveKind::Percentage));
  CHECK(read_file(dir / "curve.csv") == "offset_minutes,mean,median\n15,1,1\n30,1,1\n");
  BreakdownTable t;
  t.rows.push_back({"Verified", 2, 1.5, 1.0 / 3, {}, {}});
  write_breakdown_csv(dir / "b.csv", t);
  CHECK(read_file(dir / "b.csv") == "group,posts,mean_count,mean_proportion\nVerified,2,1.5,0.3333333333\n");
  CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
}
