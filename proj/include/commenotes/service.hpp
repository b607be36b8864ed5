// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Commenotes Authors

#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "commenotes/evaluation.hpp"
#include "commenotes/util/jsonl.hpp"
#include "commenotes/util/time.hpp"

namespace commenotes::service {

/// The two notes shown for one post.
struct NotePair {
  std::string post_id;
  std::string post_text;
  std::string commenote;
  std::string human_note;
  std::string group;  // commenote model id

  bool operator==(const NotePair&) const = default;
};

json to_json(const NotePair& p);
NotePair pair_from_json(const json& j);
std::vector<NotePair> load_pairs(const std::filesystem::path& path);
void write_pairs(const std::filesystem::path& path, const std::vector<NotePair>& pairs);

struct StorePaths {
  std::filesystem::path plan;          // plan.json
  std::filesystem::path pairs;         // pairs.json
  std::filesystem::path sessions;      // sessions.jsonl
  std::filesystem::path ratings;       // ratings.jsonl
  std::filesystem::path demographics;  // demographics.jsonl
  std::filesystem::path secret;        // order-token key
};

StorePaths store_paths_in(const std::filesystem::path& data_dir);

/// A log line that is malformed before the tail, or a submission group that
/// is interrupted by another one. The message carries a recovery hint.
class StoreCorruptError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Committed entries of an append-only log. A torn final write (missing
/// newline, unparsable last line, unfinished final group) is dropped; with
/// `repair` the file is truncated back to the last committed byte.
struct LogReplay {
  std::vector<json> entries;   // grouped logs: all lines of committed groups
  std::size_t committed_bytes = 0;
  bool torn_tail = false;
};

/// Grouped logs carry "submission_key", "part" (1-based) and "of" on every
/// line; a group counts only when all of its parts are present.
LogReplay replay_log(const std::filesystem::path& path, bool grouped, bool repair);

enum class SessionState { Active, Complete, Abandoned };
std::string_view to_string(SessionState s);

struct Session {
  std::string session_id;
  std::string rater_id;
  std::size_t cursor = 0;
  SessionState state = SessionState::Active;
  Instant created_at{};
  Instant last_activity{};

  bool operator==(const Session&) const = default;
};

struct Response {
  int status = 200;
  json body;
};

/// Error body {code, message, field?}.
json error_body(std::string_view code, std::string_view message,
                std::optional<std::string_view> field = std::nullopt);

/// Everything recovered from the data directory without writing to it.
struct StudyState {
  evaluation::StudyPlan plan;
  std::map<std::string, NotePair> pairs;
  std::map<std::string, Session> sessions;                  // by session id
  std::map<std::string, std::string> submission_digests;   // submission_key -> payload digest
  evaluation::RatingStore store;
  bool torn_tail = false;
};

/// Throws StoreCorruptError or std::runtime_error for unreadable inputs.
StudyState load_study_state(const std::filesystem::path& data_dir, bool repair);

/// Report over Complete sessions; every other planned rater is excluded and
/// shows up in the per-post deficits.
evaluation::StudyReport study_report(const StudyState& state, const std::string& study_id);

/// Transport-independent study logic. Every mutation is appended and
/// fsynced before the response is produced.
class StudyService {
 public:
  using Clock = std::function<Instant()>;

  struct Options {
    std::string study_id = "study";
    /// Active sessions idle longer than this become Abandoned.
    std::optional<Duration> idle_timeout;
    Clock clock;  // defaults to the system clock
  };

  /// Loads plan.json and pairs.json and replays the logs. Throws
  /// StoreCorruptError when a log cannot be replayed.
  StudyService(std::filesystem::path data_dir, Options options);

  Response create_session(const json& body);
  Response session_status(const std::string& session_id);
  Response next_pair(const std::string& session_id);
  Response submit(const std::string& session_id, const json& body);
  Response report(const std::string& study_id);

  std::vector<Session> sessions() const;
  const std::string& study_id() const { return options_.study_id; }

 private:
  Instant now() const;
  void sweep_idle(Instant now);
  std::string order_token(const std::string& session_id, const std::string& post_id) const;
  const std::string* current_post(const Session& s) const;

  std::filesystem::path data_dir_;
  Options options_;
  StorePaths paths_;
  StudyState state_;
  std::string secret_;
  std::map<std::string, std::string> session_of_rater_;
  std::unique_ptr<DurableAppender> sessions_log_;
  std::unique_ptr<DurableAppender> ratings_log_;
  std::unique_ptr<DurableAppender> demographics_log_;
  mutable std::mutex mu_;
};

struct ServerConfig {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::optional<std::filesystem::path> static_dir;  // served under /app
};

/// httplib front end. Routes:
///   GET  /health
///   POST /sessions                 {"rater_id"}
///   GET  /sessions/{id}
///   GET  /sessions/{id}/next
///   POST /sessions/{id}/ratings
///   GET  /reports/{study_id}
///   GET  /app/*
class HttpServer {
 public:
  HttpServer(StudyService& service, ServerConfig config);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds and returns the port. Throws std::runtime_error on bind failure.
  int bind();
  /// Blocks until stop().
  void listen();
  void stop();
  int port() const { return port_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  ServerConfig config_;
  int port_ = 0;
};

}  // namespace commenotes::service
