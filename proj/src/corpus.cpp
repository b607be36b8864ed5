// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Commenotes Authors

#include "commenotes/corpus.hpp"

#include <algorithm>
#include <array>
#include <unordered_set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "commenotes/util/text.hpp"

namespace commenotes::corpus {
namespace {

constexpr std::array kTopicNames{std::pair{Topic::FinanceBusiness, "FinanceBusiness"},
                                 std::pair{Topic::Politics, "Politics"},
                                 std::pair{Topic::Entertainment, "Entertainment"},
                                 std::pair{Topic::SciTech, "SciTech"},
                                 std::pair{Topic::Other, "Other"}};

constexpr std::array kStatusNames{std::pair{NoteStatus::Displayed, "Displayed"},
                                  std::pair{NoteStatus::WrittenNotDisplayed, "WrittenNotDisplayed"},
                                  std::pair{NoteStatus::NoNote, "NoNote"}};

bool comment_before(const Comment& a, const Comment& b) {
  if (a.created_at != b.created_at) return a.created_at < b.created_at;
  return a.comment_id < b.comment_id;
}

// Thrown while decoding one line; becomes a Reject.
struct LineError {
  std::string reason;
};

std::string require_string(const json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) throw LineError{fmt::format("missing or non-string \"{}\"", key)};
  return it->get<std::string>();
}

std::string require_id(const json& obj, const char* key) {
  auto value = require_string(obj, key);
  if (text::trim(value).empty()) throw LineError{fmt::format("empty \"{}\"", key)};
  return value;
}

Instant require_time(const json& obj, const char* key) {
  const auto raw = require_string(obj, key);
  const auto t = parse_iso8601(raw);
  if (!t) throw LineError{fmt::format("\"{}\" is not an ISO-8601 timestamp: {}", key, raw)};
  return *t;
}

std::optional<Instant> optional_time(const json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  return require_time(obj, key);
}

json parse_object(const std::string& line) {
  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::parse_error& e) {
    throw LineError{fmt::format("malformed JSON: {}", e.what())};
  }
  if (!obj.is_object()) throw LineError{"line is not a JSON object"};
  return obj;
}

class RejectSink {
 public:
  RejectSink(const LoadOptions& options, std::vector<Reject>& out) : options_(options), out_(out) {}

  void add(const std::filesystem::path& file, const NumberedLine& line, std::string reason) {
    Reject r{file.filename().string(), line.line_no, std::move(reason), line.text};
    if (options_.strict) {
      throw CorpusError(fmt::format("{}:{}: {}", r.file, r.line_no, r.reason));
    }
    out_.push_back(std::move(r));
  }

 private:
  const LoadOptions& options_;
  std::vector<Reject>& out_;
};

}  // namespace

std::string_view to_string(Topic t) {
  for (const auto& [topic, name] : kTopicNames) {
    if (topic == t) return name;
  }
  return "Other";
}

Topic topic_from_string(std::string_view s, bool* known) {
  for (const auto& [topic, name] : kTopicNames) {
    if (s == name) {
      if (known) *known = true;
      return topic;
    }
  }
  if (known) *known = false;
  return Topic::Other;
}

std::string_view to_string(NoteStatus s) {
  for (const auto& [status, name] : kStatusNames) {
    if (status == s) return name;
  }
  return "NoNote";
}

std::optional<NoteStatus> note_status_from_string(std::string_view s) {
  for (const auto& [status, name] : kStatusNames) {
    if (s == name) return status;
  }
  return std::nullopt;
}

Corpus::Corpus(std::vector<Post> posts, std::vector<Comment> comments,
               std::vector<CommunityNoteRecord> notes)
    : posts_(std::move(posts)), notes_(std::move(notes)) {
  post_index_.reserve(posts_.size());
  for (std::size_t i = 0; i < posts_.size(); ++i) {
    if (!post_index_.emplace(posts_[i].post_id, i).second) {
      throw CorpusError("duplicate post_id: " + posts_[i].post_id);
    }
  }
  comments_by_post_.resize(posts_.size());
  for (auto& c : comments) {
    const auto it = post_index_.find(c.post_id);
    if (it == post_index_.end()) throw CorpusError("comment " + c.comment_id + " references unknown post");
    if (c.created_at < posts_[it->second].created_at) {
      throw CorpusError("comment " + c.comment_id + " predates its post");
    }
    comments_by_post_[it->second].push_back(std::move(c));
  }
  for (auto& list : comments_by_post_) {
    std::sort(list.begin(), list.end(), comment_before);
    comment_total_ += list.size();
  }
  for (std::size_t i = 0; i < notes_.size(); ++i) {
    if (!post_index_.count(notes_[i].post_id)) {
      throw CorpusError("note references unknown post " + notes_[i].post_id);
    }
    if (!note_index_.emplace(notes_[i].post_id, i).second) {
      throw CorpusError("duplicate note for post " + notes_[i].post_id);
    }
  }
}

std::size_t Corpus::index_of(std::string_view post_id) const {
  const auto it = post_index_.find(std::string(post_id));
  if (it == post_index_.end()) throw UnknownPostError(std::string(post_id));
  return it->second;
}

bool Corpus::has_post(std::string_view post_id) const {
  return post_index_.count(std::string(post_id)) != 0;
}

const Post& Corpus::post(std::string_view post_id) const { return posts_[index_of(post_id)]; }

std::span<const Comment> Corpus::comments_of(std::string_view post_id) const {
  return comments_by_post_[index_of(post_id)];
}

CommunityNoteRecord Corpus::note_for(std::string_view post_id) const {
  index_of(post_id);
  const auto it = note_index_.find(std::string(post_id));
  if (it == note_index_.end()) {
    CommunityNoteRecord none;
    none.post_id = std::string(post_id);
    return none;
  }
  return notes_[it->second];
}

bool Corpus::operator==(const Corpus& other) const {
  return posts_ == other.posts_ && comments_by_post_ == other.comments_by_post_ &&
         notes_ == other.notes_;
}

LoadResult load_corpus(const std::filesystem::path& posts_path,
                       const std::filesystem::path& comments_path,
                       const std::optional<std::filesystem::path>& notes_path,
                       const LoadOptions& options) {
  LoadResult result;
  RejectSink sink(options, result.rejects);

  auto read = [](const std::filesystem::path& p) {
    try {
      return read_lines(p);
    } catch (const std::exception& e) {
      throw CorpusError(e.what());
    }
  };

  std::vector<Post> posts;
  std::unordered_map<std::string, Instant> post_created;
  for (const auto& line : read(posts_path)) {
    try {
      const auto obj = parse_object(line.text);
      Post p;
      p.post_id = require_id(obj, "post_id");
      p.author_id = require_id(obj, "author_id");
      const auto verified = obj.find("author_verified");
      if (verified == obj.end() || !verified->is_boolean()) {
        throw LineError{"missing or non-boolean \"author_verified\""};
      }
      p.author_verified = verified->get<bool>();
      p.created_at = require_time(obj, "created_at");
      p.text = require_string(obj, "text");
      if (const auto topics = obj.find("topics"); topics != obj.end() && !topics->is_null()) {
        if (!topics->is_array()) throw LineError{"\"topics\" is not an array"};
        for (const auto& t : *topics) {
          if (!t.is_string()) throw LineError{"non-string topic label"};
          bool known = false;
          p.topics.insert(topic_from_string(t.get<std::string>(), &known));
          if (!known) {
            auto msg = fmt::format("{}:{}: unknown topic \"{}\" mapped to Other",
                                   posts_path.string(), line.line_no, t.get<std::string>());
            spdlog::warn("{}", msg);
            result.warnings.push_back(std::move(msg));
          }
        }
      }
      if (const auto snap = obj.find("comment_count_snapshot"); snap != obj.end() && !snap->is_null()) {
        if (!snap->is_number_unsigned() && !(snap->is_number_integer() && snap->get<long long>() >= 0)) {
          throw LineError{"\"comment_count_snapshot\" must be a nonnegative integer"};
        }
        p.comment_count_snapshot = snap->get<std::uint64_t>();
      }
      if (post_created.count(p.post_id)) throw LineError{"duplicate post_id " + p.post_id};
      post_created.emplace(p.post_id, p.created_at);
      posts.push_back(std::move(p));
    } catch (const LineError& e) {
      sink.add(posts_path, line, e.reason);
    }
  }

  std::vector<Comment> comments;
  std::unordered_set<std::string> comment_ids;
  for (const auto& line : read(comments_path)) {
    try {
      const auto obj = parse_object(line.text);
      Comment c;
      c.comment_id = require_id(obj, "comment_id");
      c.post_id = require_id(obj, "post_id");
      c.created_at = require_time(obj, "created_at");
      c.text = require_string(obj, "text");
      const auto post = post_created.find(c.post_id);
      if (post == post_created.end()) throw LineError{"comment references unknown post " + c.post_id};
      if (c.created_at < post->second) throw LineError{"comment created before its post"};
      if (text::trim(c.text).empty()) throw LineError{"comment text is empty"};
      if (!comment_ids.insert(c.comment_id).second) throw LineError{"duplicate comment_id " + c.comment_id};
      comments.push_back(std::move(c));
    } catch (const LineError& e) {
      sink.add(comments_path, line, e.reason);
    }
  }

  std::vector<CommunityNoteRecord> notes;
  if (notes_path) {
    std::unordered_set<std::string> noted;
    for (const auto& line : read(*notes_path)) {
      try {
        const auto obj = parse_object(line.text);
        CommunityNoteRecord n;
        n.post_id = require_id(obj, "post_id");
        const auto status_raw = require_string(obj, "status");
        const auto status = note_status_from_string(status_raw);
        if (!status) throw LineError{"unknown note status " + status_raw};
        n.status = *status;
        if (const auto t = obj.find("note_text"); t != obj.end() && !t->is_null()) {
          if (!t->is_string()) throw LineError{"\"note_text\" is not a string"};
          n.note_text = t->get<std::string>();
        }
        n.created_at = optional_time(obj, "created_at");
        n.displayed_at = optional_time(obj, "displayed_at");
        if (!post_created.count(n.post_id)) throw LineError{"note references unknown post " + n.post_id};
        if (n.status == NoteStatus::Displayed && !n.displayed_at) {
          throw LineError{"Displayed note without displayed_at"};
        }
        if (n.created_at && n.displayed_at && *n.displayed_at < *n.created_at) {
          throw LineError{"displayed_at precedes created_at"};
        }
        if (n.status == NoteStatus::NoNote && n.note_text) throw LineError{"NoNote record carries note_text"};
        if (!noted.insert(n.post_id).second) throw LineError{"duplicate note for post " + n.post_id};
        notes.push_back(std::move(n));
      } catch (const LineError& e) {
        sink.add(*notes_path, line, e.reason);
      }
    }
  }

  result.corpus = Corpus(std::move(posts), std::move(comments), std::move(notes));
  return result;
}

json to_json(const Post& p) {
  json topics = json::array();
  for (const auto t : p.topics) topics.push_back(std::string(to_string(t)));
  json obj{{"post_id", p.post_id},       {"author_id", p.author_id},
           {"author_verified", p.author_verified},
           {"created_at", format_iso8601(p.created_at)},
           {"text", p.text},             {"topics", std::move(topics)}};
  if (p.comment_count_snapshot) obj["comment_count_snapshot"] = *p.comment_count_snapshot;
  return obj;
}

json to_json(const Comment& c) {
  return json{{"comment_id", c.comment_id},
              {"post_id", c.post_id},
              {"created_at", format_iso8601(c.created_at)},
              {"text", c.text}};
}

json to_json(const CommunityNoteRecord& n) {
  json obj{{"post_id", n.post_id}, {"status", std::string(to_string(n.status))}};
  if (n.note_text) obj["note_text"] = *n.note_text;
  if (n.created_at) obj["created_at"] = format_iso8601(*n.created_at);
  if (n.displayed_at) obj["displayed_at"] = format_iso8601(*n.displayed_at);
  return obj;
}

json to_json(const Reject& r) {
  return json{{"file", r.file}, {"line_no", r.line_no}, {"reason", r.reason}, {"raw", r.raw}};
}

void write_rejects(const std::filesystem::path& path, const std::vector<Reject>& rejects) {
  std::vector<json> rows;
  rows.reserve(rejects.size());
  for (const auto& r : rejects) rows.push_back(to_json(r));
  write_jsonl(path, rows);
}

CorpusPaths corpus_paths_in(const std::filesystem::path& dir) {
  return {dir / "posts.jsonl", dir / "comments.jsonl", dir / "notes.jsonl"};
}

void write_corpus(const Corpus& corpus, const CorpusPaths& paths) {
  std::vector<json> posts, comments, notes;
  for (const auto& p : corpus.posts()) {
    posts.push_back(to_json(p));
    for (const auto& c : corpus.comments_of(p.post_id)) comments.push_back(to_json(c));
  }
  for (const auto& n : corpus.notes()) notes.push_back(to_json(n));
  write_jsonl(paths.posts, posts);
  write_jsonl(paths.comments, comments);
  write_jsonl(paths.notes, notes);
}

std::span<const Comment> pre_note_slice(const Corpus& corpus, std::string_view post_id) {
  const auto all = corpus.comments_of(post_id);
  const auto note = corpus.note_for(post_id);
  if (note.status != NoteStatus::Displayed || !note.displayed_at) return all;
  const auto cut = std::partition_point(all.begin(), all.end(), [&](const Comment& c) {
    return c.created_at < *note.displayed_at;
  });
  return all.first(static_cast<std::size_t>(cut - all.begin()));
}

std::span<const Comment> window_slice(const Corpus& corpus, std::string_view post_id,
                                      Duration window) {
  if (window <= Duration::zero()) throw std::invalid_argument("window must be positive");
  const auto& post = corpus.post(post_id);
  const auto all = corpus.comments_of(post_id);
  const auto cut = std::partition_point(all.begin(), all.end(), [&](const Comment& c) {
    return c.created_at - post.created_at < window;
  });
  return all.first(static_cast<std::size_t>(cut - all.begin()));
}

std::span<const Comment> first_n_slice(const Corpus& corpus, std::string_view post_id,
                                       std::size_t n) {
  if (n == 0) throw std::invalid_argument("n must be at least 1");
  const auto all = corpus.comments_of(post_id);
  return all.first(std::min(n, all.size()));
}

}  // namespace commenotes::corpus
