// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Commenotes Authors

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "commenotes/stats.hpp"
#include "commenotes/util/jsonl.hpp"
#include "commenotes/util/time.hpp"

namespace commenotes::evaluation {

enum class NoteSource { Commenote, HumanNote };
enum class PairOrder { CommenoteFirst, HumanFirst };
enum class Helpfulness { NotHelpful, SomewhatHelpful, Helpful };
enum class Dimension { Helpfulness, Quality, Clarity, Coverage, Context, Impartiality };
enum class Stance { Left, Neutral, Right };
enum class Polarization { LowMed, High };
enum class Grouping { Stance, Polarization };

inline constexpr std::array<Dimension, 5> kCharacteristics = {
    Dimension::Quality, Dimension::Clarity, Dimension::Coverage, Dimension::Context,
    Dimension::Impartiality};

std::string_view to_string(NoteSource s);
std::string_view to_string(PairOrder o);
std::string_view to_string(Helpfulness h);
std::string_view to_string(Dimension d);
std::string_view to_string(Stance s);
std::string_view to_string(Polarization p);
std::string_view to_string(Grouping g);

std::optional<NoteSource> note_source_from_string(std::string_view s);
std::optional<PairOrder> pair_order_from_string(std::string_view s);
std::optional<Helpfulness> helpfulness_from_string(std::string_view s);
/// Lowercase names ("quality", ...) as used in payloads.
std::optional<Dimension> dimension_from_string(std::string_view s);

/// NotHelpful -> 0, SomewhatHelpful -> 0.5, Helpful -> 1.
double map_helpfulness(Helpfulness h);

// --- plan ---------------------------------------------------------------------

struct StudyPlan {
  std::vector<std::string> post_pool;
  std::size_t posts_per_rater = 0;
  std::vector<std::string> raters;
  std::uint64_t seed = 0;
  std::map<std::string, std::vector<std::string>> assignments;
  std::map<std::pair<std::string, std::string>, PairOrder> pair_order;  // (rater, post)

  std::size_t ratings_per_post() const;
  bool operator==(const StudyPlan&) const = default;
};

/// Balanced assignment: every post goes to |raters|*posts_per_rater/|pool|
/// raters, each rater sees distinct posts, and CommenoteFirst/HumanFirst
/// counts per rater differ by at most one. Deterministic under `seed`.
/// Throws std::invalid_argument when the counts are not divisible, the
/// request exceeds the pool, or ids repeat.
StudyPlan plan_study(std::vector<std::string> post_pool, std::size_t posts_per_rater,
                     std::vector<std::string> raters, std::uint64_t seed);

struct BalanceReport {
  bool ok = true;
  std::vector<std::string> problems;
  std::map<std::string, std::size_t> per_post;  // assignment counts
};

/// Recounts a plan from scratch and lists every violated invariant.
BalanceReport check_balance(const StudyPlan& plan);

/// Missing ratings per post for a subset of raters (e.g. completed sessions).
std::map<std::string, std::size_t> assignment_deficits(const StudyPlan& plan,
                                                       const std::set<std::string>& included_raters);

json to_json(const StudyPlan& plan);
/// Throws std::invalid_argument on a malformed document.
StudyPlan plan_from_json(const json& j);

// --- records ------------------------------------------------------------------

struct RatingRecord {
  std::string rater_id;
  std::string post_id;
  NoteSource note_source = NoteSource::Commenote;
  Helpfulness helpfulness = Helpfulness::NotHelpful;
  std::array<int, 5> characteristics{};  // order of kCharacteristics, each 1..5
  Instant submitted_at{};
  std::string group;  // model that produced the commenote

  int characteristic(Dimension d) const;
  bool operator==(const RatingRecord&) const = default;
};

struct WinChoice {
  std::string rater_id;
  std::string post_id;
  NoteSource choice = NoteSource::Commenote;
  Instant submitted_at{};
  std::string group;

  bool operator==(const WinChoice&) const = default;
};

struct Demographics {
  std::string rater_id;
  int ideology = 4;  // 1..7
  double ft_view1 = 0.0;
  double ft_view2 = 0.0;

  double ap() const;
  bool operator==(const Demographics&) const = default;
};

/// 1-3 Left, 4 Neutral, 5-7 Right. Throws std::invalid_argument outside 1..7.
Stance stance_of(int ideology);

/// Median split over the given raters: ap above the median is High.
std::map<std::string, Polarization> polarization_buckets(std::span<const Demographics> demographics);

/// Empty when valid, otherwise the offending field name.
std::optional<std::string> validate(const RatingRecord& r);
std::optional<std::string> validate(const Demographics& d);

json to_json(const RatingRecord& r);
json to_json(const WinChoice& w);
json to_json(const Demographics& d);
/// Throw std::invalid_argument on malformed rows.
RatingRecord rating_from_json(const json& j);
WinChoice win_choice_from_json(const json& j);
Demographics demographics_from_json(const json& j);

/// Both ratings and the win choice for one (rater, post).
struct PairedRating {
  std::string rater_id;
  std::string post_id;
  std::string group;
  RatingRecord commenote;
  RatingRecord human;
  NoteSource win = NoteSource::Commenote;
};

/// Immutable snapshot of captured records.
class RatingStore {
 public:
  void add(RatingRecord r);
  void add(WinChoice w);
  void add(Demographics d);

  std::span<const RatingRecord> ratings() const { return ratings_; }
  std::span<const WinChoice> win_choices() const { return wins_; }
  const std::map<std::string, Demographics>& demographics() const { return demographics_; }

  /// Groups present in the records, sorted.
  std::vector<std::string> groups() const;

  /// Pairs sorted by (rater, post), restricted to `group` when given. Throws
  /// std::invalid_argument unless every (rater, post) has exactly one rating
  /// per source and exactly one win choice.
  std::vector<PairedRating> pairs(const std::optional<std::string>& group = std::nullopt) const;

  /// Keeps only records of the listed raters.
  RatingStore restricted_to(const std::set<std::string>& raters) const;

 private:
  std::vector<RatingRecord> ratings_;
  std::vector<WinChoice> wins_;
  std::map<std::string, Demographics> demographics_;
};

// --- analyses -----------------------------------------------------------------

struct WinRate {
  std::uint64_t commenote_wins = 0;
  std::uint64_t pairs = 0;
  stats::ProportionCI ci;
  stats::TestResult test;  // exact binomial against 0.5
};

json to_json(const WinRate& w);

/// Throws std::invalid_argument for zero pairs.
WinRate win_rate(std::span<const PairedRating> pairs, double level = 0.95,
                 stats::IntervalMethod method = stats::IntervalMethod::Wilson);
WinRate win_rate(const RatingStore& store, const std::string& group, double level = 0.95,
                 stats::IntervalMethod method = stats::IntervalMethod::Wilson);

/// Pairs where the same rater rated both notes Helpful.
std::vector<PairedRating> both_helpful(std::span<const PairedRating> pairs);

double value_of(const RatingRecord& r, Dimension d);

struct SourceComparison {
  Dimension dimension = Dimension::Helpfulness;
  std::size_t pairs = 0;
  double mean_commenote = 0.0;
  double mean_human = 0.0;
  std::optional<stats::TestResult> test;  // absent when the input is degenerate
  std::string direction;                  // "Commenote", "HumanNote" or "none"
  std::optional<std::string> notice;
};

json to_json(const SourceComparison& c);

/// Wilcoxon signed-rank on (commenote, human) values per pair. Throws
/// std::invalid_argument for zero pairs.
SourceComparison compare_sources(std::span<const PairedRating> pairs, Dimension dimension);

struct SubgroupRow {
  std::string bucket;
  std::size_t raters = 0;
  std::size_t pairs = 0;
  double mean_difference = 0.0;  // commenote - human helpfulness
  std::optional<stats::TestResult> paired_t;
  std::optional<std::string> notice;
};

struct SubgroupTable {
  Grouping grouping = Grouping::Stance;
  std::vector<SubgroupRow> rows;
  std::optional<stats::TestResult> across;  // Kruskal-Wallis on per-rater mean differences
  std::vector<std::string> notices;
};

json to_json(const SubgroupTable& t);

/// Throws std::invalid_argument when a rater has no demographics or there
/// are no pairs. Buckets without raters are omitted with a notice.
SubgroupTable subgroup_analysis(std::span<const PairedRating> pairs,
                                const std::map<std::string, Demographics>& demographics,
                                Grouping grouping);

struct SourceSummary {
  double mean_helpfulness = 0.0;
  std::array<std::size_t, 3> distribution{};  // NotHelpful, SomewhatHelpful, Helpful
};

struct GroupReport {
  std::string group;
  std::size_t raters = 0;
  std::size_t pairs = 0;
  SourceSummary commenote;
  SourceSummary human;
  WinRate win_rate;
  std::optional<WinRate> both_helpful_win_rate;
  std::vector<SourceComparison> comparisons;  // Helpfulness then the five characteristics
  std::optional<SubgroupTable> by_stance;
  std::optional<SubgroupTable> by_polarization;
  std::vector<std::string> notices;
};

struct StudyReport {
  std::string study_id;
  std::vector<GroupReport> groups;
  std::map<std::string, std::size_t> deficits;  // per post, from excluded sessions
  std::vector<std::string> excluded_raters;
};

/// One GroupReport per group in the store. Subgroup tables are computed when
/// every rater has demographics, otherwise skipped with a notice.
StudyReport build_report(std::string study_id, const RatingStore& store,
                         const StudyPlan* plan = nullptr,
                         const std::set<std::string>* excluded_raters = nullptr);

json to_json(const StudyReport& r);

/// report.json plus one CSV per table:
///   helpfulness.csv   group,source,mean_helpfulness,not_helpful,somewhat_helpful,helpful
///   win_rate.csv      group,subset,commenote_wins,pairs,p_hat,ci_lower,ci_upper,p_value
///   dimensions.csv    group,dimension,pairs,mean_commenote,mean_human,W,z,p_value,r,direction
///   subgroups.csv     group,grouping,bucket,raters,pairs,mean_difference,t,df,p_value,cohens_d
void write_report(const std::filesystem::path& dir, const StudyReport& report);

}  // namespace commenotes::evaluation
