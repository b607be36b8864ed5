// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Commenotes Authors

#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "commenotes/corpus.hpp"
#include "commenotes/filter.hpp"
#include "commenotes/util/time.hpp"

namespace commenotes::analytics {

using corpus::Comment;
using corpus::Corpus;
using corpus::Post;

inline constexpr Duration kBinWidth{15 * 60};

struct TimeBin {
  std::size_t index = 0;
  Duration start_offset{0};
  std::size_t count = 0;
};

/// Bin i holds comments with offset in [15i, 15(i+1)) minutes; comments at or
/// past the horizon are not counted. Throws std::invalid_argument unless the
/// horizon is a positive multiple of 15 minutes.
std::vector<TimeBin> bin_fact_checks(const Post& post, std::span<const Comment> fact_check_comments,
                                     Duration horizon);

struct PostBins {
  std::string post_id;
  std::vector<TimeBin> bins;
};

enum class CurveKind { Count, Percentage };

/// offsets[i] is the end of bin i: the value is the cumulative total of bins 0..i.
struct CumulativeCurve {
  CurveKind kind = CurveKind::Count;
  std::vector<Duration> offsets;
  std::vector<double> mean_values;
  std::vector<double> median_values;
  std::size_t posts_used = 0;
};

/// Mean and median across posts of per-post cumulative counts, or of
/// cumulative fractions of each post's in-horizon total. Posts without fact
/// checks are skipped for Percentage curves.
CumulativeCurve cumulative_curve(std::span<const PostBins> posts, CurveKind kind);

struct PopularityScore {
  std::string post_id;
  std::size_t c = 0;  // comments inside the window
  double h = 0.0;     // window length in hours
  double s = 0.0;
};

struct PopularityExclusion {
  std::string post_id;
  std::string reason;
};

using PopularityResult = std::variant<PopularityScore, PopularityExclusion>;

struct PopularityOptions {
  double window_fraction = 0.8;
  /// Timeline end defaults to the last observed comment; set this to measure
  /// from a fixed horizon after the post instead.
  std::optional<Duration> fixed_timeline;
};

/// log2(c / h) + 1.
double popularity_score(double c, double h);

/// Counts comments with offset strictly inside the earliest fraction of the
/// post's timeline. Posts with no comments there are excluded, with a reason.
PopularityResult popularity(const Post& post, std::span<const Comment> comments,
                            const PopularityOptions& options = {});

/// comment_id -> label for one classifier.
class VerdictStore {
 public:
  VerdictStore() = default;
  explicit VerdictStore(std::span<const filter::ClassifierVerdict> verdicts);
  void insert(const filter::ClassifierVerdict& v);
  std::optional<filter::Label> find(const std::string& comment_id) const;
  /// Throws std::invalid_argument for a comment without a verdict.
  bool is_fact_check(const Comment& c) const;
  std::size_t size() const { return labels_.size(); }

 private:
  std::unordered_map<std::string, filter::Label> labels_;
};

std::vector<Comment> fact_checks_of(std::span<const Comment> comments, const VerdictStore& verdicts);

struct GroupRow {
  std::string group;
  std::size_t posts = 0;
  double mean_count = 0.0;
  /// Mean over posts that have at least one comment in scope.
  double mean_proportion = 0.0;
  std::vector<double> counts;       // per post, for downstream tests
  std::vector<double> proportions;  // per post with comments
};

struct BreakdownTable {
  std::vector<GroupRow> rows;
  std::vector<std::string> notices;  // e.g. groups with no posts
};

/// Verified vs Unverified over window_slice(post, window).
BreakdownTable author_breakdown(const Corpus& corpus, const VerdictStore& verdicts, Duration window);

/// Per topic; a post counts once for each topic it carries. Scope is the
/// window slice when given, otherwise the pre-note slice.
BreakdownTable topic_breakdown(const Corpus& corpus, const VerdictStore& verdicts,
                               std::optional<Duration> window = std::nullopt);

// CSV emitters. Columns:
//   bins:        post_id,bin_index,start_offset_minutes,count
//   curve:       offset_minutes,mean,median
//   popularity:  post_id,c,h,s,excluded_reason
//   breakdown:   group,posts,mean_count,mean_proportion
void write_bins_csv(const std::filesystem::path& path, std::span<const PostBins> bins);
void write_curve_csv(const std::filesystem::path& path, const CumulativeCurve& curve);
void write_popularity_csv(const std::filesystem::path& path, std::span<const PopularityResult> rows);
void write_breakdown_csv(const std::filesystem::path& path, const BreakdownTable& table);

/// Quotes a CSV field when it contains a comma, quote or newline.
std::string csv_field(std::string_view s);
/// Fixed "%.10g" formatting used by every emitter.
std::string csv_number(double v);

}  // namespace commenotes::analytics
