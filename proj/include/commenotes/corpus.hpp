// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Commenotes Authors

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "commenotes/util/jsonl.hpp"
#include "commenotes/util/time.hpp"

namespace commenotes::corpus {

enum class Topic { FinanceBusiness, Politics, Entertainment, SciTech, Other };

std::string_view to_string(Topic t);
/// Unknown labels map to Topic::Other; `known` reports whether the label matched.
Topic topic_from_string(std::string_view s, bool* known = nullptr);

enum class NoteStatus { Displayed, WrittenNotDisplayed, NoNote };

std::string_view to_string(NoteStatus s);
std::optional<NoteStatus> note_status_from_string(std::string_view s);

struct Post {
  std::string post_id;
  std::string author_id;
  bool author_verified = false;
  Instant created_at{};
  std::string text;
  std::set<Topic> topics;
  std::optional<std::uint64_t> comment_count_snapshot;

  bool operator==(const Post&) const = default;
};

struct Comment {
  std::string comment_id;
  std::string post_id;
  Instant created_at{};
  std::string text;

  bool operator==(const Comment&) const = default;
};

struct CommunityNoteRecord {
  std::string post_id;
  NoteStatus status = NoteStatus::NoNote;
  std::optional<std::string> note_text;
  std::optional<Instant> created_at;
  std::optional<Instant> displayed_at;

  bool operator==(const CommunityNoteRecord&) const = default;
};

/// Raised for unknown post ids in slicing and lookup.
class UnknownPostError : public std::out_of_range {
 public:
  explicit UnknownPostError(const std::string& post_id)
      : std::out_of_range("unknown post_id: " + post_id), post_id_(post_id) {}
  const std::string& post_id() const { return post_id_; }

 private:
  std::string post_id_;
};

/// Raised when a corpus file cannot be read, or on the first reject in strict mode.
class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Immutable after construction. Comments of each post are kept sorted by
/// (created_at, comment_id).
class Corpus {
 public:
  Corpus() = default;

  /// Validates referential integrity and ordering; throws CorpusError on
  /// violation. Loaders reject bad rows before they reach this point.
  Corpus(std::vector<Post> posts, std::vector<Comment> comments,
         std::vector<CommunityNoteRecord> notes);

  std::span<const Post> posts() const { return posts_; }
  std::span<const CommunityNoteRecord> notes() const { return notes_; }
  std::size_t comment_count() const { return comment_total_; }

  bool has_post(std::string_view post_id) const;
  const Post& post(std::string_view post_id) const;

  /// Every comment of a post in ascending (created_at, comment_id) order.
  std::span<const Comment> comments_of(std::string_view post_id) const;

  /// The loaded note record, or a NoNote record when the post has none.
  CommunityNoteRecord note_for(std::string_view post_id) const;

  bool operator==(const Corpus& other) const;

 private:
  std::size_t index_of(std::string_view post_id) const;

  std::vector<Post> posts_;
  std::vector<std::vector<Comment>> comments_by_post_;  // parallel to posts_
  std::vector<CommunityNoteRecord> notes_;
  std::unordered_map<std::string, std::size_t> post_index_;
  std::unordered_map<std::string, std::size_t> note_index_;
  std::size_t comment_total_ = 0;
};

struct Reject {
  std::string file;
  std::size_t line_no = 0;
  std::string reason;
  std::string raw;
};

struct LoadOptions {
  bool strict = false;  // abort on the first reject instead of reporting it
};

struct LoadResult {
  Corpus corpus;
  std::vector<Reject> rejects;
  std::vector<std::string> warnings;
};

/// Ingests posts/comments/notes JSONL. Malformed or invariant-violating lines
/// land in `rejects`; in strict mode the first one throws CorpusError.
LoadResult load_corpus(const std::filesystem::path& posts_path,
                       const std::filesystem::path& comments_path,
                       const std::optional<std::filesystem::path>& notes_path,
                       const LoadOptions& options = {});

json to_json(const Post& p);
json to_json(const Comment& c);
json to_json(const CommunityNoteRecord& n);
json to_json(const Reject& r);

void write_rejects(const std::filesystem::path& path, const std::vector<Reject>& rejects);

struct CorpusPaths {
  std::filesystem::path posts;
  std::filesystem::path comments;
  std::filesystem::path notes;
};

CorpusPaths corpus_paths_in(const std::filesystem::path& dir);

/// Writes the three JSONL files; posts in load order, comments grouped by post
/// in ascending order.
void write_corpus(const Corpus& corpus, const CorpusPaths& paths);

// Slicing. All results are prefixes of comments_of(post_id), so they stay
// valid for the lifetime of the corpus.

/// Comments strictly before the note's displayed_at; all comments unless the
/// note status is Displayed.
std::span<const Comment> pre_note_slice(const Corpus& corpus, std::string_view post_id);

/// Comments with created_at - post.created_at < window. Throws
/// std::invalid_argument for a nonpositive window.
std::span<const Comment> window_slice(const Corpus& corpus, std::string_view post_id,
                                      Duration window);

/// The n earliest comments. Throws std::invalid_argument for n == 0.
std::span<const Comment> first_n_slice(const Corpus& corpus, std::string_view post_id,
                                       std::size_t n);

}  // namespace commenotes::corpus
