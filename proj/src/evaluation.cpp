// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Commenotes Authors

#include "commenotes/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <tuple>

#include <fmt/format.h>

#include "commenotes/util/random.hpp"

namespace commenotes::evaluation {
namespace {

template <typename E, std::size_t N>
std::optional<E> lookup(std::string_view s, const std::array<E, N>& values) {
  for (const auto v : values) {
    if (to_string(v) == s) return v;
  }
  return std::nullopt;
}

std::string csv_num(double v) { return fmt::format("{:.10g}", v); }

std::string opt_num(const std::optional<double>& v) { return v ? csv_num(*v) : std::string(); }

void require_unique(const std::vector<std::string>& ids, const char* what) {
  std::set<std::string> seen;
  for (const auto& id : ids) {
    if (id.empty()) throw std::invalid_argument(fmt::format("empty {} id", what));
    if (!seen.insert(id).second) throw std::invalid_argument(fmt::format("duplicate {} id {}", what, id));
  }
}

std::string required_string(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_string()) {
    throw std::invalid_argument(fmt::format("missing string field {}", key));
  }
  return j.at(key).get<std::string>();
}

Instant required_instant(const json& j, const char* key) {
  const auto t = parse_iso8601(required_string(j, key));
  if (!t) throw std::invalid_argument(fmt::format("bad timestamp in {}", key));
  return *t;
}

template <typename E>
E required_enum(const json& j, const char* key, std::optional<E> (*parse)(std::string_view)) {
  const auto v = parse(required_string(j, key));
  if (!v) throw std::invalid_argument(fmt::format("bad value for {}", key));
  return *v;
}

using PairKey = std::pair<std::string, std::string>;

SourceSummary summarize(const std::vector<const RatingRecord*>& records) {
  SourceSummary s;
  double total = 0.0;
  for (const auto* r : records) {
    total += map_helpfulness(r->helpfulness);
    ++s.distribution[static_cast<std::size_t>(r->helpfulness)];
  }
  s.mean_helpfulness = records.empty() ? 0.0 : total / static_cast<double>(records.size());
  return s;
}

}  // namespace

std::string_view to_string(NoteSource s) {
  return s == NoteSource::Commenote ? "Commenote" : "HumanNote";
}

std::string_view to_string(PairOrder o) {
  return o == PairOrder::CommenoteFirst ? "CommenoteFirst" : "HumanFirst";
}

std::string_view to_string(Helpfulness h) {
  switch (h) {
    case Helpfulness::NotHelpful: return "NotHelpful";
    case Helpfulness::SomewhatHelpful: return "SomewhatHelpful";
    case Helpfulness::Helpful: return "Helpful";
  }
  return "?";
}

std::string_view to_string(Dimension d) {
  switch (d) {
    case Dimension::Helpfulness: return "helpfulness";
    case Dimension::Quality: return "quality";
    case Dimension::Clarity: return "clarity";
    case Dimension::Coverage: return "coverage";
    case Dimension::Context: return "context";
    case Dimension::Impartiality: return "impartiality";
  }
  return "?";
}

std::string_view to_string(Stance s) {
  switch (s) {
    case Stance::Left: return "Left";
    case Stance::Neutral: return "Neutral";
    case Stance::Right: return "Right";
  }
  return "?";
}

std::string_view to_string(Polarization p) { return p == Polarization::LowMed ? "LowMed" : "High"; }

std::string_view to_string(Grouping g) { return g == Grouping::Stance ? "stance" : "polarization"; }

std::optional<NoteSource> note_source_from_string(std::string_view s) {
  return lookup(s, std::array{NoteSource::Commenote, NoteSource::HumanNote});
}

std::optional<PairOrder> pair_order_from_string(std::string_view s) {
  return lookup(s, std::array{PairOrder::CommenoteFirst, PairOrder::HumanFirst});
}

std::optional<Helpfulness> helpfulness_from_string(std::string_view s) {
  return lookup(s, std::array{Helpfulness::NotHelpful, Helpfulness::SomewhatHelpful, Helpfulness::Helpful});
}

std::optional<Dimension> dimension_from_string(std::string_view s) {
  return lookup(s, std::array{Dimension::Helpfulness, Dimension::Quality, Dimension::Clarity,
                              Dimension::Coverage, Dimension::Context, Dimension::Impartiality});
}

double map_helpfulness(Helpfulness h) {
  switch (h) {
    case Helpfulness::NotHelpful: return 0.0;
    case Helpfulness::SomewhatHelpful: return 0.5;
    case Helpfulness::Helpful: return 1.0;
  }
  return 0.0;
}

// --- plan ---------------------------------------------------------------------

std::size_t StudyPlan::ratings_per_post() const {
  return post_pool.empty() ? 0 : raters.size() * posts_per_rater / post_pool.size();
}

StudyPlan plan_study(std::vector<std::string> post_pool, std::size_t posts_per_rater,
                     std::vector<std::string> raters, std::uint64_t seed) {
  if (post_pool.empty()) throw std::invalid_argument("empty post pool");
  if (raters.empty()) throw std::invalid_argument("no raters");
  if (posts_per_rater == 0) throw std::invalid_argument("posts_per_rater must be positive");
  if (posts_per_rater > post_pool.size()) {
    throw std::invalid_argument("posts_per_rater exceeds the post pool");
  }
  if ((raters.size() * posts_per_rater) % post_pool.size() != 0) {
    throw std::invalid_argument(fmt::format("{} raters x {} posts is not divisible by a pool of {}",
                                            raters.size(), posts_per_rater, post_pool.size()));
  }
  require_unique(post_pool, "post");
  require_unique(raters, "rater");

  StudyPlan plan;
  plan.post_pool = post_pool;
  plan.posts_per_rater = posts_per_rater;
  plan.raters = raters;
  plan.seed = seed;

  std::mt19937_64 engine(seed);
  auto order = post_pool;
  stable_shuffle(order, engine);

  // Consecutive windows over the (cyclic) permuted pool: each post is covered
  // the same number of times, and a window of length k <= P has no repeats.
  const std::size_t P = order.size();
  for (std::size_t i = 0; i < raters.size(); ++i) {
    std::vector<std::string> posts;
    posts.reserve(posts_per_rater);
    for (std::size_t j = 0; j < posts_per_rater; ++j) posts.push_back(order[(i * posts_per_rater + j) % P]);
    stable_shuffle(posts, engine);

    std::vector<PairOrder> orders;
    const std::size_t larger = (posts_per_rater + 1) / 2;
    const auto major = i % 2 == 0 ? PairOrder::CommenoteFirst : PairOrder::HumanFirst;
    const auto minor = i % 2 == 0 ? PairOrder::HumanFirst : PairOrder::CommenoteFirst;
    for (std::size_t j = 0; j < posts_per_rater; ++j) orders.push_back(j < larger ? major : minor);
    stable_shuffle(orders, engine);

    for (std::size_t j = 0; j < posts_per_rater; ++j) plan.pair_order[{raters[i], posts[j]}] = orders[j];
    plan.assignments[raters[i]] = std::move(posts);
  }
  return plan;
}

BalanceReport check_balance(const StudyPlan& plan) {
  BalanceReport report;
  auto fail = [&](std::string msg) {
    report.ok = false;
    report.problems.push_back(std::move(msg));
  };
  const std::set<std::string> pool(plan.post_pool.begin(), plan.post_pool.end());
  for (const auto& p : plan.post_pool) report.per_post[p] = 0;
  if (pool.empty()) fail("empty pool");
  if (plan.assignments.size() != plan.raters.size()) fail("assignment count differs from rater count");

  for (const auto& rater : plan.raters) {
    const auto it = plan.assignments.find(rater);
    if (it == plan.assignments.end()) {
      fail("rater " + rater + " has no assignment");
      continue;
    }
    const auto& posts = it->second;
    if (posts.size() != plan.posts_per_rater) {
      fail(fmt::format("rater {} has {} posts, expected {}", rater, posts.size(), plan.posts_per_rater));
    }
    std::set<std::string> distinct;
    std::size_t first = 0, second = 0;
    for (const auto& post : posts) {
      if (!pool.count(post)) fail(fmt::format("rater {} assigned unknown post {}", rater, post));
      if (!distinct.insert(post).second) fail(fmt::format("rater {} sees post {} twice", rater, post));
      ++report.per_post[post];
      const auto ord = plan.pair_order.find({rater, post});
      if (ord == plan.pair_order.end()) {
        fail(fmt::format("no pair order for ({}, {})", rater, post));
      } else if (ord->second == PairOrder::CommenoteFirst) {
        ++first;
      } else {
        ++second;
      }
    }
    if ((first > second ? first - second : second - first) > 1) {
      fail(fmt::format("rater {} order imbalance {} vs {}", rater, first, second));
    }
  }
  if (!pool.empty() && (plan.raters.size() * plan.posts_per_rater) % pool.size() == 0) {
    const std::size_t expected = plan.raters.size() * plan.posts_per_rater / pool.size();
    for (const auto& [post, count] : report.per_post) {
      if (count != expected) fail(fmt::format("post {} assigned {} times, expected {}", post, count, expected));
    }
  } else {
    fail("assignment total is not divisible by the pool size");
  }
  return report;
}

std::map<std::string, std::size_t> assignment_deficits(const StudyPlan& plan,
                                                       const std::set<std::string>& included_raters) {
  std::map<std::string, std::size_t> deficits;
  for (const auto& [rater, posts] : plan.assignments) {
    if (included_raters.count(rater)) continue;
    for (const auto& post : posts) ++deficits[post];
  }
  return deficits;
}

json to_json(const StudyPlan& plan) {
  json assignments = json::object();
  for (const auto& [rater, posts] : plan.assignments) {
    json rows = json::array();
    for (const auto& post : posts) {
      rows.push_back({{"post_id", post}, {"order", std::string(to_string(plan.pair_order.at({rater, post})))}});
    }
    assignments[rater] = std::move(rows);
  }
  return json{{"post_pool", plan.post_pool},
              {"posts_per_rater", plan.posts_per_rater},
              {"raters", plan.raters},
              {"seed", plan.seed},
              {"ratings_per_post", plan.ratings_per_post()},
              {"assignments", std::move(assignments)}};
}

StudyPlan plan_from_json(const json& j) {
  try {
    StudyPlan plan;
    plan.post_pool = j.at("post_pool").get<std::vector<std::string>>();
    plan.posts_per_rater = j.at("posts_per_rater").get<std::size_t>();
    plan.raters = j.at("raters").get<std::vector<std::string>>();
    plan.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& [rater, rows] : j.at("assignments").items()) {
      auto& posts = plan.assignments[rater];
      for (const auto& row : rows) {
        const auto post = row.at("post_id").get<std::string>();
        const auto order = pair_order_from_string(row.at("order").get<std::string>());
        if (!order) throw std::invalid_argument("bad pair order");
        posts.push_back(post);
        plan.pair_order[{rater, post}] = *order;
      }
    }
    return plan;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed study plan: ") + e.what());
  }
}

// --- records ------------------------------------------------------------------

int RatingRecord::characteristic(Dimension d) const {
  for (std::size_t i = 0; i < kCharacteristics.size(); ++i) {
    if (kCharacteristics[i] == d) return characteristics[i];
  }
  throw std::invalid_argument("helpfulness is not a characteristic");
}

double Demographics::ap() const { return std::fabs(ft_view1 - ft_view2); }

Stance stance_of(int ideology) {
  if (ideology < 1 || ideology > 7) throw std::invalid_argument("ideology must be in 1..7");
  if (ideology <= 3) return Stance::Left;
  if (ideology == 4) return Stance::Neutral;
  return Stance::Right;
}

std::map<std::string, Polarization> polarization_buckets(std::span<const Demographics> demographics) {
  std::map<std::string, Polarization> out;
  if (demographics.empty()) return out;
  std::vector<double> aps;
  for (const auto& d : demographics) aps.push_back(d.ap());
  const double med = stats::median(aps);
  for (const auto& d : demographics) out[d.rater_id] = d.ap() > med ? Polarization::High : Polarization::LowMed;
  return out;
}

std::optional<std::string> validate(const RatingRecord& r) {
  if (r.rater_id.empty()) return "rater_id";
  if (r.post_id.empty()) return "post_id";
  for (std::size_t i = 0; i < kCharacteristics.size(); ++i) {
    if (r.characteristics[i] < 1 || r.characteristics[i] > 5) return std::string(to_string(kCharacteristics[i]));
  }
  return std::nullopt;
}

std::optional<std::string> validate(const Demographics& d) {
  if (d.ideology < 1 || d.ideology > 7) return "ideology";
  if (!(d.ft_view1 >= 0.0 && d.ft_view1 <= 100.0)) return "ft_view1";
  if (!(d.ft_view2 >= 0.0 && d.ft_view2 <= 100.0)) return "ft_view2";
  return std::nullopt;
}

json to_json(const RatingRecord& r) {
  json ch = json::object();
  for (std::size_t i = 0; i < kCharacteristics.size(); ++i) {
    ch[std::string(to_string(kCharacteristics[i]))] = r.characteristics[i];
  }
  return json{{"rater_id", r.rater_id},
              {"post_id", r.post_id},
              {"note_source", std::string(to_string(r.note_source))},
              {"helpfulness", std::string(to_string(r.helpfulness))},
              {"characteristics", std::move(ch)},
              {"submitted_at", format_iso8601(r.submitted_at)},
              {"group", r.group}};
}

json to_json(const WinChoice& w) {
  return json{{"rater_id", w.rater_id},
              {"post_id", w.post_id},
              {"choice", std::string(to_string(w.choice))},
              {"submitted_at", format_iso8601(w.submitted_at)},
              {"group", w.group}};
}

json to_json(const Demographics& d) {
  return json{{"rater_id", d.rater_id},
              {"ideology", d.ideology},
              {"ft_view1", d.ft_view1},
              {"ft_view2", d.ft_view2},
              {"ap", d.ap()},
              {"stance_bucket", std::string(to_string(stance_of(d.ideology)))}};
}

RatingRecord rating_from_json(const json& j) {
  try {
    RatingRecord r;
    r.rater_id = required_string(j, "rater_id");
    r.post_id = required_string(j, "post_id");
    r.note_source = required_enum<NoteSource>(j, "note_source", note_source_from_string);
    r.helpfulness = required_enum<Helpfulness>(j, "helpfulness", helpfulness_from_string);
    const auto& ch = j.at("characteristics");
    for (std::size_t i = 0; i < kCharacteristics.size(); ++i) {
      r.characteristics[i] = ch.at(std::string(to_string(kCharacteristics[i]))).get<int>();
    }
    r.submitted_at = required_instant(j, "submitted_at");
    r.group = j.value("group", std::string());
    return r;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed rating: ") + e.what());
  }
}

WinChoice win_choice_from_json(const json& j) {
  WinChoice w;
  w.rater_id = required_string(j, "rater_id");
  w.post_id = required_string(j, "post_id");
  w.choice = required_enum<NoteSource>(j, "choice", note_source_from_string);
  w.submitted_at = required_instant(j, "submitted_at");
  w.group = j.contains("group") && j.at("group").is_string() ? j.at("group").get<std::string>() : "";
  return w;
}

Demographics demographics_from_json(const json& j) {
  try {
    Demographics d;
    d.rater_id = required_string(j, "rater_id");
    d.ideology = j.at("ideology").get<int>();
    d.ft_view1 = j.at("ft_view1").get<double>();
    d.ft_view2 = j.at("ft_view2").get<double>();
    return d;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed demographics: ") + e.what());
  }
}

void RatingStore::add(RatingRecord r) { ratings_.push_back(std::move(r)); }
void RatingStore::add(WinChoice w) { wins_.push_back(std::move(w)); }
void RatingStore::add(Demographics d) {
  auto id = d.rater_id;
  demographics_[id] = std::move(d);
}

std::vector<std::string> RatingStore::groups() const {
  std::set<std::string> g;
  for (const auto& r : ratings_) g.insert(r.group);
  for (const auto& w : wins_) g.insert(w.group);
  return {g.begin(), g.end()};
}

std::vector<PairedRating> RatingStore::pairs(const std::optional<std::string>& group) const {
  struct Slot {
    const RatingRecord* commenote = nullptr;
    const RatingRecord* human = nullptr;
    const WinChoice* win = nullptr;
  };
  std::map<PairKey, Slot> slots;
  for (const auto& r : ratings_) {
    if (group && r.group != *group) continue;
    auto& slot = slots[{r.rater_id, r.post_id}];
    auto*& target = r.note_source == NoteSource::Commenote ? slot.commenote : slot.human;
    if (target) {
      throw std::invalid_argument(fmt::format("({}, {}) has two {} ratings", r.rater_id, r.post_id,
                                              to_string(r.note_source)));
    }
    target = &r;
  }
  for (const auto& w : wins_) {
    if (group && w.group != *group) continue;
    auto& slot = slots[{w.rater_id, w.post_id}];
    if (slot.win) throw std::invalid_argument(fmt::format("({}, {}) has two win choices", w.rater_id, w.post_id));
    slot.win = &w;
  }
  std::vector<PairedRating> out;
  out.reserve(slots.size());
  for (const auto& [key, slot] : slots) {
    if (!slot.commenote || !slot.human) {
      throw std::invalid_argument(fmt::format("({}, {}) lacks a rating for both sources", key.first, key.second));
    }
    if (!slot.win) throw std::invalid_argument(fmt::format("({}, {}) lacks a win choice", key.first, key.second));
    out.push_back({key.first, key.second, slot.commenote->group, *slot.commenote, *slot.human, slot.win->choice});
  }
  return out;
}

RatingStore RatingStore::restricted_to(const std::set<std::string>& raters) const {
  RatingStore out;
  for (const auto& r : ratings_) {
    if (raters.count(r.rater_id)) out.add(r);
  }
  for (const auto& w : wins_) {
    if (raters.count(w.rater_id)) out.add(w);
  }
  for (const auto& [id, d] : demographics_) {
    if (raters.count(id)) out.add(d);
  }
  return out;
}

// --- analyses -----------------------------------------------------------------

json to_json(const WinRate& w) {
  return json{{"commenote_wins", w.commenote_wins},
              {"pairs", w.pairs},
              {"ci", to_json(w.ci)},
              {"test", to_json(w.test)}};
}

WinRate win_rate(std::span<const PairedRating> pairs, double level, stats::IntervalMethod method) {
  if (pairs.empty()) throw std::invalid_argument("win_rate: zero pairs");
  WinRate w;
  w.pairs = pairs.size();
  for (const auto& p : pairs) {
    if (p.win == NoteSource::Commenote) ++w.commenote_wins;
  }
  w.ci = stats::binomial_ci(w.commenote_wins, w.pairs, level, method);
  w.test = stats::binomial_test(w.commenote_wins, w.pairs, 0.5);
  return w;
}

WinRate win_rate(const RatingStore& store, const std::string& group, double level,
                 stats::IntervalMethod method) {
  const auto p = store.pairs(group);
  return win_rate(p, level, method);
}

std::vector<PairedRating> both_helpful(std::span<const PairedRating> pairs) {
  std::vector<PairedRating> out;
  for (const auto& p : pairs) {
    if (p.commenote.helpfulness == Helpfulness::Helpful && p.human.helpfulness == Helpfulness::Helpful) {
      out.push_back(p);
    }
  }
  return out;
}

double value_of(const RatingRecord& r, Dimension d) {
  if (d == Dimension::Helpfulness) return map_helpfulness(r.helpfulness);
  return static_cast<double>(r.characteristic(d));
}

json to_json(const SourceComparison& c) {
  return json{{"dimension", std::string(to_string(c.dimension))},
              {"pairs", c.pairs},
              {"mean_commenote", c.mean_commenote},
              {"mean_human", c.mean_human},
              {"test", c.test ? to_json(*c.test) : json(nullptr)},
              {"direction", c.direction},
              {"notice", c.notice ? json(*c.notice) : json(nullptr)}};
}

SourceComparison compare_sources(std::span<const PairedRating> pairs, Dimension dimension) {
  if (pairs.empty()) throw std::invalid_argument("compare_sources: no pairs");
  std::vector<const PairedRating*> ordered;
  for (const auto& p : pairs) ordered.push_back(&p);
  std::sort(ordered.begin(), ordered.end(), [](const auto* x, const auto* y) {
    return std::tie(x->rater_id, x->post_id) < std::tie(y->rater_id, y->post_id);
  });
  std::vector<double> a, b;
  for (const auto* p : ordered) {
    a.push_back(value_of(p->commenote, dimension));
    b.push_back(value_of(p->human, dimension));
  }
  SourceComparison c;
  c.dimension = dimension;
  c.pairs = ordered.size();
  c.mean_commenote = stats::mean(a);
  c.mean_human = stats::mean(b);
  try {
    c.test = stats::wilcoxon_signed_rank(a, b);
    c.direction = c.mean_commenote > c.mean_human ? "Commenote"
                  : c.mean_commenote < c.mean_human ? "HumanNote"
                                                    : "none";
  } catch (const stats::DegenerateInputError&) {
    c.direction = "none";
    c.notice = "no difference";
  }
  return c;
}

json to_json(const SubgroupTable& t) {
  json rows = json::array();
  for (const auto& r : t.rows) {
    rows.push_back({{"bucket", r.bucket},
                    {"raters", r.raters},
                    {"pairs", r.pairs},
                    {"mean_difference", r.mean_difference},
                    {"paired_t", r.paired_t ? to_json(*r.paired_t) : json(nullptr)},
                    {"notice", r.notice ? json(*r.notice) : json(nullptr)}});
  }
  return json{{"grouping", std::string(to_string(t.grouping))},
              {"rows", std::move(rows)},
              {"across", t.across ? to_json(*t.across) : json(nullptr)},
              {"notices", t.notices}};
}

SubgroupTable subgroup_analysis(std::span<const PairedRating> pairs,
                                const std::map<std::string, Demographics>& demographics,
                                Grouping grouping) {
  if (pairs.empty()) throw std::invalid_argument("subgroup_analysis: no pairs");
  std::set<std::string> raters;
  for (const auto& p : pairs) raters.insert(p.rater_id);
  std::vector<Demographics> present;
  for (const auto& r : raters) {
    const auto it = demographics.find(r);
    if (it == demographics.end()) throw std::invalid_argument("no demographics for rater " + r);
    present.push_back(it->second);
  }

  std::vector<std::string> bucket_names;
  std::map<std::string, std::string> bucket_of;
  if (grouping == Grouping::Stance) {
    bucket_names = {"Left", "Neutral", "Right"};
    for (const auto& d : present) bucket_of[d.rater_id] = std::string(to_string(stance_of(d.ideology)));
  } else {
    bucket_names = {"LowMed", "High"};
    for (const auto& [id, b] : polarization_buckets(present)) bucket_of[id] = std::string(to_string(b));
  }

  struct Acc {
    std::vector<double> commenote, human;
    std::map<std::string, std::vector<double>> per_rater;
  };
  std::map<std::string, Acc> acc;
  for (const auto& p : pairs) {
    auto& a = acc[bucket_of.at(p.rater_id)];
    const double c = map_helpfulness(p.commenote.helpfulness);
    const double h = map_helpfulness(p.human.helpfulness);
    a.commenote.push_back(c);
    a.human.push_back(h);
    a.per_rater[p.rater_id].push_back(c - h);
  }

  SubgroupTable table;
  table.grouping = grouping;
  std::vector<std::vector<double>> kw_groups;
  for (const auto& name : bucket_names) {
    const auto it = acc.find(name);
    if (it == acc.end()) {
      table.notices.push_back(fmt::format("bucket {} has no raters", name));
      continue;
    }
    const auto& a = it->second;
    SubgroupRow row;
    row.bucket = name;
    row.raters = a.per_rater.size();
    row.pairs = a.commenote.size();
    row.mean_difference = stats::mean(a.commenote) - stats::mean(a.human);
    try {
      row.paired_t = stats::paired_t(a.commenote, a.human);
    } catch (const std::exception& e) {
      row.notice = e.what();
    }
    std::vector<double> rater_means;
    for (const auto& [_, diffs] : a.per_rater) rater_means.push_back(stats::mean(diffs));
    kw_groups.push_back(std::move(rater_means));
    table.rows.push_back(std::move(row));
  }
  if (kw_groups.size() < 2) {
    table.notices.push_back("across-bucket test skipped: fewer than two buckets");
  } else {
    try {
      table.across = stats::kruskal_wallis(kw_groups);
    } catch (const std::exception& e) {
      table.notices.push_back(std::string("across-bucket test skipped: ") + e.what());
    }
  }
  return table;
}

StudyReport build_report(std::string study_id, const RatingStore& store, const StudyPlan* plan,
                         const std::set<std::string>* excluded_raters) {
  StudyReport report;
  report.study_id = std::move(study_id);
  RatingStore scoped = store;
  if (excluded_raters && !excluded_raters->empty()) {
    std::set<std::string> keep;
    for (const auto& r : store.ratings()) {
      if (!excluded_raters->count(r.rater_id)) keep.insert(r.rater_id);
    }
    scoped = store.restricted_to(keep);
    report.excluded_raters.assign(excluded_raters->begin(), excluded_raters->end());
  }
  if (plan) {
    std::set<std::string> included;
    for (const auto& r : plan->raters) {
      if (!excluded_raters || !excluded_raters->count(r)) included.insert(r);
    }
    report.deficits = assignment_deficits(*plan, included);
  }

  for (const auto& group : scoped.groups()) {
    GroupReport g;
    g.group = group;
    const auto pairs = scoped.pairs(group);
    if (pairs.empty()) continue;
    g.pairs = pairs.size();
    std::set<std::string> raters;
    std::vector<const RatingRecord*> commenotes, humans;
    for (const auto& p : pairs) {
      raters.insert(p.rater_id);
      commenotes.push_back(&p.commenote);
      humans.push_back(&p.human);
    }
    g.raters = raters.size();
    g.commenote = summarize(commenotes);
    g.human = summarize(humans);
    g.win_rate = win_rate(pairs);
    const auto both = both_helpful(pairs);
    if (both.empty()) {
      g.notices.push_back("no pairs with both notes rated Helpful");
    } else {
      g.both_helpful_win_rate = win_rate(both);
    }
    g.comparisons.push_back(compare_sources(pairs, Dimension::Helpfulness));
    for (const auto d : kCharacteristics) g.comparisons.push_back(compare_sources(pairs, d));

    bool have_demographics = true;
    for (const auto& r : raters) have_demographics = have_demographics && scoped.demographics().count(r);
    if (have_demographics) {
      g.by_stance = subgroup_analysis(pairs, scoped.demographics(), Grouping::Stance);
      g.by_polarization = subgroup_analysis(pairs, scoped.demographics(), Grouping::Polarization);
    } else {
      g.notices.push_back("subgroup tables skipped: demographics missing for some raters");
    }
    report.groups.push_back(std::move(g));
  }
  return report;
}

json to_json(const StudyReport& r) {
  auto summary = [](const SourceSummary& s) {
    return json{{"mean_helpfulness", s.mean_helpfulness},
                {"distribution",
                 {{"NotHelpful", s.distribution[0]},
                  {"SomewhatHelpful", s.distribution[1]},
                  {"Helpful", s.distribution[2]}}}};
  };
  json groups = json::array();
  for (const auto& g : r.groups) {
    json comparisons = json::array();
    for (const auto& c : g.comparisons) comparisons.push_back(to_json(c));
    groups.push_back({{"group", g.group},
                      {"raters", g.raters},
                      {"pairs", g.pairs},
                      {"commenote", summary(g.commenote)},
                      {"human_note", summary(g.human)},
                      {"win_rate", to_json(g.win_rate)},
                      {"both_helpful_win_rate", g.both_helpful_win_rate ? to_json(*g.both_helpful_win_rate) : json(nullptr)},
                      {"comparisons", std::move(comparisons)},
                      {"by_stance", g.by_stance ? to_json(*g.by_stance) : json(nullptr)},
                      {"by_polarization", g.by_polarization ? to_json(*g.by_polarization) : json(nullptr)},
                      {"notices", g.notices}});
  }
  return json{{"study_id", r.study_id},
              {"groups", std::move(groups)},
              {"deficits", r.deficits},
              {"excluded_raters", r.excluded_raters}};
}

void write_report(const std::filesystem::path& dir, const StudyReport& report) {
  std::filesystem::create_directories(dir);
  write_file_atomic(dir / "report.json", to_json(report).dump(2) + "\n");

  std::string helpfulness = "group,source,mean_helpfulness,not_helpful,somewhat_helpful,helpful\n";
  std::string wins = "group,subset,commenote_wins,pairs,p_hat,ci_lower,ci_upper,p_value\n";
  std::string dims = "group,dimension,pairs,mean_commenote,mean_human,W,z,p_value,r,direction\n";
  std::string subgroups = "group,grouping,bucket,raters,pairs,mean_difference,t,df,p_value,cohens_d\n";

  auto win_row = [&](const std::string& group, const char* subset, const WinRate& w) {
    wins += fmt::format("{},{},{},{},{},{},{},{}\n", group, subset, w.commenote_wins, w.pairs, csv_num(w.ci.p_hat),
                        csv_num(w.ci.lower), csv_num(w.ci.upper), csv_num(w.test.p_value));
  };
  for (const auto& g : report.groups) {
    for (const auto& [name, s] : {std::pair{"Commenote", &g.commenote}, std::pair{"HumanNote", &g.human}}) {
      helpfulness += fmt::format("{},{},{},{},{},{}\n", g.group, name, csv_num(s->mean_helpfulness),
                                 s->distribution[0], s->distribution[1], s->distribution[2]);
    }
    win_row(g.group, "all", g.win_rate);
    if (g.both_helpful_win_rate) win_row(g.group, "both_helpful", *g.both_helpful_win_rate);
    for (const auto& c : g.comparisons) {
      dims += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", g.group, to_string(c.dimension), c.pairs,
                          csv_num(c.mean_commenote), csv_num(c.mean_human),
                          c.test ? csv_num(c.test->statistic) : "", c.test ? opt_num(c.test->z) : "",
                          c.test ? csv_num(c.test->p_value) : "", c.test ? opt_num(c.test->effect_size) : "",
                          c.direction);
    }
    for (const auto* table : {&g.by_stance, &g.by_polarization}) {
      if (!*table) continue;
      for (const auto& row : (*table)->rows) {
        const auto& t = row.paired_t;
        subgroups += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", g.group, to_string((*table)->grouping),
                                 row.bucket, row.raters, row.pairs, csv_num(row.mean_difference),
                                 t ? csv_num(t->statistic) : "", t ? opt_num(t->df) : "",
                                 t ? csv_num(t->p_value) : "", t ? opt_num(t->effect_size) : "");
      }
    }
  }
  write_file_atomic(dir / "helpfulness.csv", helpfulness);
  write_file_atomic(dir / "win_rate.csv", wins);
  write_file_atomic(dir / "dimensions.csv", dims);
  write_file_atomic(dir / "subgroups.csv", subgroups);
}

}  // namespace commenotes::evaluation
