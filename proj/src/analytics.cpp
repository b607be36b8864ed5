// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Commenotes Authors

#include "commenotes/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include <fmt/format.h>

#include "commenotes/stats.hpp"
#include "commenotes/util/jsonl.hpp"

namespace commenotes::analytics {
namespace {

GroupRow summarize(std::string group, const std::vector<double>& counts,
                   const std::vector<double>& proportions) {
  GroupRow row;
  row.group = std::move(group);
  row.posts = counts.size();
  row.counts = counts;
  row.proportions = proportions;
  row.mean_count = counts.empty() ? 0.0 : stats::mean(counts);
  row.mean_proportion = proportions.empty() ? 0.0 : stats::mean(proportions);
  return row;
}

struct Tally {
  std::vector<double> counts;
  std::vector<double> proportions;
  void add(std::size_t fact_checks, std::size_t total) {
    counts.push_back(static_cast<double>(fact_checks));
    if (total > 0) proportions.push_back(static_cast<double>(fact_checks) / static_cast<double>(total));
  }
};

}  // namespace

std::vector<TimeBin> bin_fact_checks(const Post& post, std::span<const Comment> fact_check_comments,
                                     Duration horizon) {
  if (horizon <= Duration::zero() || horizon.count() % kBinWidth.count() != 0) {
    throw std::invalid_argument("horizon must be a positive multiple of 15 minutes");
  }
  const auto n_bins = static_cast<std::size_t>(horizon / kBinWidth);
  std::vector<TimeBin> bins(n_bins);
  for (std::size_t i = 0; i < n_bins; ++i) {
    bins[i].index = i;
    bins[i].start_offset = kBinWidth * static_cast<long long>(i);
  }
  for (const auto& c : fact_check_comments) {
    if (c.post_id != post.post_id) throw std::invalid_argument("comment " + c.comment_id + " belongs to another post");
    const auto offset = c.created_at - post.created_at;
    if (offset < Duration::zero() || offset >= horizon) continue;
    ++bins[static_cast<std::size_t>(offset / kBinWidth)].count;
  }
  return bins;
}

CumulativeCurve cumulative_curve(std::span<const PostBins> posts, CurveKind kind) {
  if (posts.empty()) throw std::invalid_argument("cumulative_curve: no posts");
  const std::size_t n_bins = posts.front().bins.size();
  for (const auto& p : posts) {
    if (p.bins.size() != n_bins) throw std::invalid_argument("cumulative_curve: mismatched horizons");
  }
  std::vector<std::vector<double>> per_post;
  for (const auto& p : posts) {
    std::vector<double> cum(n_bins);
    double running = 0.0;
    for (std::size_t i = 0; i < n_bins; ++i) {
      running += static_cast<double>(p.bins[i].count);
      cum[i] = running;
    }
    if (kind == CurveKind::Percentage) {
      if (running == 0.0) continue;
      for (auto& v : cum) v /= running;
    }
    per_post.push_back(std::move(cum));
  }
  CumulativeCurve curve;
  curve.kind = kind;
  curve.posts_used = per_post.size();
  for (std::size_t i = 0; i < n_bins; ++i) {
    curve.offsets.push_back(kBinWidth * static_cast<long long>(i + 1));
    if (per_post.empty()) {
      curve.mean_values.push_back(0.0);
      curve.median_values.push_back(0.0);
      continue;
    }
    std::vector<double> column;
    column.reserve(per_post.size());
    for (const auto& cum : per_post) column.push_back(cum[i]);
    curve.mean_values.push_back(stats::mean(column));
    curve.median_values.push_back(stats::median(std::move(column)));
  }
  return curve;
}

double popularity_score(double c, double h) {
  if (!(c > 0.0) || !(h > 0.0)) throw std::invalid_argument("popularity_score needs c > 0 and h > 0");
  return std::log2(c / h) + 1.0;
}

PopularityResult popularity(const Post& post, std::span<const Comment> comments,
                            const PopularityOptions& options) {
  if (!(options.window_fraction > 0.0 && options.window_fraction <= 1.0)) {
    throw std::invalid_argument("window_fraction must be in (0, 1]");
  }
  Duration span{0};
  if (options.fixed_timeline) {
    span = *options.fixed_timeline;
  } else {
    if (comments.empty()) return PopularityExclusion{post.post_id, "no comments"};
    for (const auto& c : comments) span = std::max(span, c.created_at - post.created_at);
  }
  const double window_seconds = options.window_fraction * static_cast<double>(span.count());
  if (!(window_seconds > 0.0)) return PopularityExclusion{post.post_id, "zero-length timeline"};
  std::size_t c = 0;
  for (const auto& comment : comments) {
    const auto offset = static_cast<double>((comment.created_at - post.created_at).count());
    if (offset < window_seconds) ++c;
  }
  if (c == 0) return PopularityExclusion{post.post_id, "no comments inside the popularity window"};
  const double h = window_seconds / 3600.0;
  return PopularityScore{post.post_id, c, h, popularity_score(static_cast<double>(c), h)};
}

VerdictStore::VerdictStore(std::span<const filter::ClassifierVerdict> verdicts) {
  for (const auto& v : verdicts) insert(v);
}

void VerdictStore::insert(const filter::ClassifierVerdict& v) { labels_[v.comment_id] = v.label; }

std::optional<filter::Label> VerdictStore::find(const std::string& comment_id) const {
  const auto it = labels_.find(comment_id);
  if (it == labels_.end()) return std::nullopt;
  return it->second;
}

bool VerdictStore::is_fact_check(const Comment& c) const {
  const auto label = find(c.comment_id);
  if (!label) throw std::invalid_argument("no verdict for comment " + c.comment_id);
  return *label == filter::Label::FactCheck;
}

std::vector<Comment> fact_checks_of(std::span<const Comment> comments, const VerdictStore& verdicts) {
  std::vector<Comment> out;
  for (const auto& c : comments) {
    if (verdicts.is_fact_check(c)) out.push_back(c);
  }
  return out;
}

BreakdownTable author_breakdown(const Corpus& corpus, const VerdictStore& verdicts, Duration window) {
  Tally verified, unverified;
  for (const auto& post : corpus.posts()) {
    const auto scope = corpus::window_slice(corpus, post.post_id, window);
    const auto fc = fact_checks_of(scope, verdicts).size();
    (post.author_verified ? verified : unverified).add(fc, scope.size());
  }
  BreakdownTable table;
  for (const auto& [name, tally] : {std::pair{"Verified", &verified}, std::pair{"Unverified", &unverified}}) {
    if (tally->counts.empty()) {
      table.notices.push_back(fmt::format("group {} has no posts", name));
      continue;
    }
    table.rows.push_back(summarize(name, tally->counts, tally->proportions));
  }
  return table;
}

BreakdownTable topic_breakdown(const Corpus& corpus, const VerdictStore& verdicts,
                               std::optional<Duration> window) {
  std::map<corpus::Topic, Tally> tallies;
  for (const auto& post : corpus.posts()) {
    const auto scope = window ? corpus::window_slice(corpus, post.post_id, *window)
                              : corpus::pre_note_slice(corpus, post.post_id);
    const auto fc = fact_checks_of(scope, verdicts).size();
    for (const auto topic : post.topics) tallies[topic].add(fc, scope.size());
  }
  BreakdownTable table;
  for (const auto topic : {corpus::Topic::FinanceBusiness, corpus::Topic::Politics,
                           corpus::Topic::Entertainment, corpus::Topic::SciTech, corpus::Topic::Other}) {
    const auto it = tallies.find(topic);
    if (it == tallies.end()) {
      if (topic != corpus::Topic::Other) {
        table.notices.push_back(fmt::format("topic {} has no posts", corpus::to_string(topic)));
      }
      continue;
    }
    table.rows.push_back(summarize(std::string(corpus::to_string(topic)), it->second.counts,
                                   it->second.proportions));
  }
  return table;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string csv_number(double v) { return fmt::format("{:.10g}", v); }

void write_bins_csv(const std::filesystem::path& path, std::span<const PostBins> bins) {
  std::string out = "post_id,bin_index,start_offset_minutes,count\n";
  for (const auto& p : bins) {
    for (const auto& b : p.bins) {
      out += fmt::format("{},{},{},{}\n", csv_field(p.post_id), b.index, b.start_offset.count() / 60, b.count);
    }
  }
  write_file_atomic(path, out);
}

void write_curve_csv(const std::filesystem::path& path, const CumulativeCurve& curve) {
  std::string out = "offset_minutes,mean,median\n";
  for (std::size_t i = 0; i < curve.offsets.size(); ++i) {
    out += fmt::format("{},{},{}\n", curve.offsets[i].count() / 60, csv_number(curve.mean_values[i]),
                       csv_number(curve.median_values[i]));
  }
  write_file_atomic(path, out);
}

void write_popularity_csv(const std::filesystem::path& path, std::span<const PopularityResult> rows) {
  std::string out = "post_id,c,h,s,excluded_reason\n";
  for (const auto& row : rows) {
    if (const auto* s = std::get_if<PopularityScore>(&row)) {
      out += fmt::format("{},{},{},{},\n", csv_field(s->post_id), s->c, csv_number(s->h), csv_number(s->s));
    } else {
      const auto& e = std::get<PopularityExclusion>(row);
      out += fmt::format("{},,,,{}\n", csv_field(e.post_id), csv_field(e.reason));
    }
  }
  write_file_atomic(path, out);
}

void write_breakdown_csv(const std::filesystem::path& path, const BreakdownTable& table) {
  std::string out = "group,posts,mean_count,mean_proportion\n";
  for (const auto& r : table.rows) {
    out += fmt::format("{},{},{},{}\n", csv_field(r.group), r.posts, csv_number(r.mean_count),
                       csv_number(r.mean_proportion));
  }
  write_file_atomic(path, out);
}

}  // namespace commenotes::analytics
