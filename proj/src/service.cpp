// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Commenotes Authors

#include "commenotes/service.hpp"

#include <unistd.h>

#include <algorithm>
#include <fstream>

#include <fmt/format.h>
#include <httplib.h>
#include <spdlog/spdlog.h>

#include "commenotes/util/digest.hpp"

namespace commenotes::service {
namespace {

using evaluation::Demographics;
using evaluation::Helpfulness;
using evaluation::NoteSource;
using evaluation::PairOrder;
using evaluation::RatingRecord;
using evaluation::WinChoice;

std::string corrupt_hint(const std::filesystem::path& path, std::size_t line_no, std::string_view what) {
  return fmt::format(
      "{} line {}: {}. The log is damaged before its tail; restore it from a backup or truncate it "
      "before line {} and restart",
      path.string(), line_no, what, line_no);
}

// Translates the blinded "note_a"/"note_b" labels into sources.
NoteSource source_of(std::string_view label, PairOrder order) {
  const bool a = label == "note_a";
  if (order == PairOrder::CommenoteFirst) return a ? NoteSource::Commenote : NoteSource::HumanNote;
  return a ? NoteSource::HumanNote : NoteSource::Commenote;
}

struct FieldError {
  std::string field;
  std::string message;
};

// Parses one blinded rating object; returns the offending field on failure.
std::optional<FieldError> parse_note_rating(const json& j, const std::string& prefix, Helpfulness& helpfulness,
                                            std::array<int, 5>& characteristics) {
  if (!j.is_object()) return FieldError{prefix, "expected an object"};
  if (!j.contains("helpfulness") || !j["helpfulness"].is_string()) {
    return FieldError{prefix + ".helpfulness", "helpfulness is required"};
  }
  const auto h = evaluation::helpfulness_from_string(j["helpfulness"].get<std::string>());
  if (!h) return FieldError{prefix + ".helpfulness", "must be NotHelpful, SomewhatHelpful or Helpful"};
  helpfulness = *h;
  if (!j.contains("characteristics") || !j["characteristics"].is_object()) {
    return FieldError{prefix + ".characteristics", "characteristics are required"};
  }
  const auto& ch = j["characteristics"];
  for (std::size_t i = 0; i < evaluation::kCharacteristics.size(); ++i) {
    const std::string name(evaluation::to_string(evaluation::kCharacteristics[i]));
    const std::string field = prefix + ".characteristics." + name;
    if (!ch.contains(name)) return FieldError{field, "value is required"};
    const auto& v = ch[name];
    if (!v.is_number_integer()) return FieldError{field, "must be an integer from 1 to 5"};
    const auto n = v.get<long long>();
    if (n < 1 || n > 5) return FieldError{field, "must be an integer from 1 to 5"};
    characteristics[i] = static_cast<int>(n);
  }
  return std::nullopt;
}

std::optional<FieldError> parse_demographics(const json& j, Demographics& d) {
  if (!j.is_object()) return FieldError{"demographics", "expected an object"};
  if (!j.contains("ideology") || !j["ideology"].is_number_integer()) {
    return FieldError{"demographics.ideology", "must be an integer from 1 to 7"};
  }
  d.ideology = static_cast<int>(j["ideology"].get<long long>());
  for (const char* key : {"ft_view1", "ft_view2"}) {
    if (!j.contains(key) || !j[key].is_number()) {
      return FieldError{std::string("demographics.") + key, "must be a number from 0 to 100"};
    }
  }
  d.ft_view1 = j["ft_view1"].get<double>();
  d.ft_view2 = j["ft_view2"].get<double>();
  if (const auto bad = evaluation::validate(d)) return FieldError{"demographics." + *bad, "out of range"};
  return std::nullopt;
}

Response error(int status, std::string_view code, std::string_view message,
               std::optional<std::string_view> field = std::nullopt) {
  return {status, error_body(code, message, field)};
}

}  // namespace

json to_json(const NotePair& p) {
  return json{{"post_id", p.post_id},
              {"post_text", p.post_text},
              {"commenote", p.commenote},
              {"human_note", p.human_note},
              {"group", p.group}};
}

NotePair pair_from_json(const json& j) {
  try {
    return NotePair{j.at("post_id").get<std::string>(), j.at("post_text").get<std::string>(),
                    j.at("commenote").get<std::string>(), j.at("human_note").get<std::string>(),
                    j.value("group", std::string())};
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed note pair: ") + e.what());
  }
}

std::vector<NotePair> load_pairs(const std::filesystem::path& path) {
  const auto doc = json::parse(read_file(path), nullptr, false);
  if (!doc.is_array()) throw std::runtime_error(path.string() + ": expected a JSON array of note pairs");
  std::vector<NotePair> out;
  for (const auto& row : doc) out.push_back(pair_from_json(row));
  return out;
}

void write_pairs(const std::filesystem::path& path, const std::vector<NotePair>& pairs) {
  json doc = json::array();
  for (const auto& p : pairs) doc.push_back(to_json(p));
  write_file_atomic(path, doc.dump(2) + "\n");
}

StorePaths store_paths_in(const std::filesystem::path& data_dir) {
  return {data_dir / "plan.json",          data_dir / "pairs.json",         data_dir / "sessions.jsonl",
          data_dir / "ratings.jsonl",      data_dir / "demographics.jsonl", data_dir / "service.key"};
}

LogReplay replay_log(const std::filesystem::path& path, bool grouped, bool repair) {
  LogReplay out;
  if (!std::filesystem::exists(path)) return out;
  const std::string bytes = read_file(path);

  std::vector<json> pending;
  std::string pending_key;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < bytes.size()) {
    ++line_no;
    const auto nl = bytes.find('\n', pos);
    const bool terminated = nl != std::string::npos;
    const auto end = terminated ? nl : bytes.size();
    const std::string_view line(bytes.data() + pos, end - pos);
    const bool last = !terminated || end + 1 >= bytes.size();
    auto parsed = json::parse(line, nullptr, false);
    if (!terminated || parsed.is_discarded() || !parsed.is_object()) {
      if (last) {
        out.torn_tail = true;
        break;
      }
      throw StoreCorruptError(corrupt_hint(path, line_no, "unparsable entry"));
    }
    if (!grouped) {
      out.entries.push_back(std::move(parsed));
      out.committed_bytes = end + 1;
    } else {
      const auto key = parsed.value("submission_key", std::string());
      const auto part = parsed.value("part", 0);
      const auto of = parsed.value("of", 0);
      if (key.empty() || part < 1 || of < part) {
        throw StoreCorruptError(corrupt_hint(path, line_no, "missing submission framing"));
      }
      if (part == 1) {
        if (!pending.empty()) throw StoreCorruptError(corrupt_hint(path, line_no, "interrupted submission"));
        pending_key = key;
      } else if (key != pending_key || static_cast<std::size_t>(part) != pending.size() + 1) {
        throw StoreCorruptError(corrupt_hint(path, line_no, "submission parts out of sequence"));
      }
      pending.push_back(std::move(parsed));
      if (part == of) {
        for (auto& e : pending) out.entries.push_back(std::move(e));
        pending.clear();
        out.committed_bytes = end + 1;
      }
    }
    pos = end + 1;
  }
  if (!pending.empty()) out.torn_tail = true;
  if (out.committed_bytes < bytes.size()) out.torn_tail = true;
  if (out.torn_tail && repair) {
    spdlog::warn("{}: dropping {} bytes of an interrupted write", path.string(),
                 bytes.size() - out.committed_bytes);
    std::filesystem::resize_file(path, out.committed_bytes);
  }
  return out;
}

std::string_view to_string(SessionState s) {
  switch (s) {
    case SessionState::Active: return "Active";
    case SessionState::Complete: return "Complete";
    case SessionState::Abandoned: return "Abandoned";
  }
  return "?";
}

json error_body(std::string_view code, std::string_view message, std::optional<std::string_view> field) {
  json body{{"code", code}, {"message", message}};
  if (field) body["field"] = *field;
  return body;
}

StudyState load_study_state(const std::filesystem::path& data_dir, bool repair) {
  const auto paths = store_paths_in(data_dir);
  StudyState state;
  if (!std::filesystem::exists(paths.plan)) throw std::runtime_error("missing " + paths.plan.string());
  if (!std::filesystem::exists(paths.pairs)) throw std::runtime_error("missing " + paths.pairs.string());
  state.plan = evaluation::plan_from_json(json::parse(read_file(paths.plan)));
  for (auto& p : load_pairs(paths.pairs)) {
    auto id = p.post_id;
    state.pairs.emplace(std::move(id), std::move(p));
  }
  for (const auto& post : state.plan.post_pool) {
    if (!state.pairs.count(post)) throw std::runtime_error("no note pair for planned post " + post);
  }

  std::set<std::string> abandoned;
  const auto sessions = replay_log(paths.sessions, false, repair);
  std::size_t line = 0;
  for (const auto& e : sessions.entries) {
    ++line;
    const auto event = e.value("event", std::string());
    const auto id = e.value("session_id", std::string());
    const auto at = parse_iso8601(e.value("server_time", std::string()));
    if (id.empty() || !at) throw StoreCorruptError(corrupt_hint(paths.sessions, line, "bad session event"));
    if (event == "created") {
      Session s;
      s.session_id = id;
      s.rater_id = e.value("rater_id", std::string());
      s.created_at = s.last_activity = *at;
      if (!state.plan.assignments.count(s.rater_id)) {
        throw StoreCorruptError(corrupt_hint(paths.sessions, line, "session for an unplanned rater"));
      }
      state.sessions[id] = s;
    } else if (event == "abandoned") {
      if (!state.sessions.count(id)) throw StoreCorruptError(corrupt_hint(paths.sessions, line, "unknown session"));
      abandoned.insert(id);
    } else {
      throw StoreCorruptError(corrupt_hint(paths.sessions, line, "unknown event"));
    }
  }

  const auto ratings = replay_log(paths.ratings, true, repair);
  for (const auto& e : ratings.entries) {
    const auto key = e.at("submission_key").get<std::string>();
    const auto session_id = e.value("session_id", std::string());
    const auto it = state.sessions.find(session_id);
    if (it == state.sessions.end()) {
      throw StoreCorruptError(fmt::format("{}: submission {} references an unknown session; restore the "
                                          "sessions log from a backup",
                                          paths.ratings.string(), key));
    }
    const auto kind = e.value("kind", std::string());
    try {
      if (kind == "rating") {
        state.store.add(evaluation::rating_from_json(e.at("record")));
      } else if (kind == "win_choice") {
        state.store.add(evaluation::win_choice_from_json(e.at("record")));
      } else {
        throw std::invalid_argument("unknown entry kind " + kind);
      }
    } catch (const std::exception& ex) {
      throw StoreCorruptError(fmt::format("{}: submission {}: {}", paths.ratings.string(), key, ex.what()));
    }
    if (e.at("part").get<int>() == e.at("of").get<int>()) {
      auto& s = it->second;
      const auto& posts = state.plan.assignments.at(s.rater_id);
      const auto post = e.at("record").at("post_id").get<std::string>();
      if (s.cursor >= posts.size() || posts[s.cursor] != post) {
        throw StoreCorruptError(fmt::format("{}: submission {} does not match the plan cursor",
                                            paths.ratings.string(), key));
      }
      ++s.cursor;
      if (const auto at = parse_iso8601(e.value("server_time", std::string()))) s.last_activity = *at;
      state.submission_digests[key] = e.value("payload_digest", std::string());
    }
  }

  const auto demo = replay_log(paths.demographics, false, repair);
  for (const auto& e : demo.entries) {
    try {
      auto d = evaluation::demographics_from_json(e);
      if (!state.store.demographics().count(d.rater_id)) state.store.add(std::move(d));
    } catch (const std::exception& ex) {
      throw StoreCorruptError(fmt::format("{}: {}", paths.demographics.string(), ex.what()));
    }
  }

  for (auto& [id, s] : state.sessions) {
    const auto total = state.plan.assignments.at(s.rater_id).size();
    if (s.cursor == total) {
      s.state = SessionState::Complete;
    } else if (abandoned.count(id)) {
      s.state = SessionState::Abandoned;
    }
  }
  state.torn_tail = sessions.torn_tail || ratings.torn_tail || demo.torn_tail;
  return state;
}

evaluation::StudyReport study_report(const StudyState& state, const std::string& study_id) {
  std::set<std::string> complete;
  for (const auto& [_, s] : state.sessions) {
    if (s.state == SessionState::Complete) complete.insert(s.rater_id);
  }
  std::set<std::string> excluded;
  for (const auto& r : state.plan.raters) {
    if (!complete.count(r)) excluded.insert(r);
  }
  return evaluation::build_report(study_id, state.store.restricted_to(complete), &state.plan, &excluded);
}

// --- StudyService -------------------------------------------------------------

StudyService::StudyService(std::filesystem::path data_dir, Options options)
    : data_dir_(std::move(data_dir)), options_(std::move(options)), paths_(store_paths_in(data_dir_)) {
  state_ = load_study_state(data_dir_, true);
  for (const auto& [id, s] : state_.sessions) session_of_rater_[s.rater_id] = id;

  if (std::filesystem::exists(paths_.secret)) {
    secret_ = read_file(paths_.secret);
  } else {
    secret_ = random_token_hex() + random_token_hex();
    write_file_atomic(paths_.secret, secret_);
  }
  sessions_log_ = std::make_unique<DurableAppender>(paths_.sessions);
  ratings_log_ = std::make_unique<DurableAppender>(paths_.ratings);
  demographics_log_ = std::make_unique<DurableAppender>(paths_.demographics);
}

Instant StudyService::now() const {
  if (options_.clock) return options_.clock();
  return std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
}

void StudyService::sweep_idle(Instant now) {
  if (!options_.idle_timeout) return;
  for (auto& [id, s] : state_.sessions) {
    if (s.state != SessionState::Active || now - s.last_activity <= *options_.idle_timeout) continue;
    const json event{{"event", "abandoned"}, {"session_id", id}, {"server_time", format_iso8601(now)}};
    sessions_log_->append(event.dump() + "\n");
    s.state = SessionState::Abandoned;
  }
}

std::string StudyService::order_token(const std::string& session_id, const std::string& post_id) const {
  return sha256_hex(secret_ + "\n" + session_id + "\n" + post_id).substr(0, 32);
}

const std::string* StudyService::current_post(const Session& s) const {
  const auto& posts = state_.plan.assignments.at(s.rater_id);
  return s.cursor < posts.size() ? &posts[s.cursor] : nullptr;
}

std::vector<Session> StudyService::sessions() const {
  std::lock_guard lock(mu_);
  std::vector<Session> out;
  for (const auto& [_, s] : state_.sessions) out.push_back(s);
  return out;
}

Response StudyService::create_session(const json& body) {
  std::lock_guard lock(mu_);
  const auto t = now();
  sweep_idle(t);
  if (!body.is_object() || !body.contains("rater_id") || !body["rater_id"].is_string()) {
    return error(422, "validation_error", "rater_id is required", "rater_id");
  }
  const auto rater = body["rater_id"].get<std::string>();
  if (!state_.plan.assignments.count(rater)) return error(404, "unknown_rater", "rater is not part of the study");

  if (const auto it = session_of_rater_.find(rater); it != session_of_rater_.end()) {
    const auto& s = state_.sessions.at(it->second);
    if (s.state != SessionState::Active) {
      return error(409, "session_closed", fmt::format("session for this rater is {}", to_string(s.state)));
    }
    return {200, json{{"session_id", s.session_id},
                      {"state", to_string(s.state)},
                      {"position", s.cursor},
                      {"total", state_.plan.posts_per_rater}}};
  }
  Session s;
  s.session_id = random_token_hex();
  s.rater_id = rater;
  s.created_at = s.last_activity = t;
  const json event{{"event", "created"},
                   {"session_id", s.session_id},
                   {"rater_id", rater},
                   {"server_time", format_iso8601(t)}};
  sessions_log_->append(event.dump() + "\n");
  state_.sessions[s.session_id] = s;
  session_of_rater_[rater] = s.session_id;
  return {201, json{{"session_id", s.session_id},
                    {"state", to_string(s.state)},
                    {"position", 0},
                    {"total", state_.plan.posts_per_rater}}};
}

Response StudyService::session_status(const std::string& session_id) {
  std::lock_guard lock(mu_);
  sweep_idle(now());
  const auto it = state_.sessions.find(session_id);
  if (it == state_.sessions.end()) return error(404, "unknown_session", "no such session");
  const auto& s = it->second;
  return {200, json{{"session_id", s.session_id},
                    {"state", to_string(s.state)},
                    {"position", s.cursor},
                    {"total", state_.plan.assignments.at(s.rater_id).size()}}};
}

Response StudyService::next_pair(const std::string& session_id) {
  std::lock_guard lock(mu_);
  sweep_idle(now());
  const auto it = state_.sessions.find(session_id);
  if (it == state_.sessions.end()) return error(404, "unknown_session", "no such session");
  const auto& s = it->second;
  if (s.state == SessionState::Complete) return error(409, "session_complete", "all pairs have been rated");
  if (s.state == SessionState::Abandoned) return error(409, "session_abandoned", "session expired");
  const auto& post_id = *current_post(s);
  const auto& pair = state_.pairs.at(post_id);
  const auto order = state_.plan.pair_order.at({s.rater_id, post_id});
  const auto& first = order == PairOrder::CommenoteFirst ? pair.commenote : pair.human_note;
  const auto& second = order == PairOrder::CommenoteFirst ? pair.human_note : pair.commenote;
  return {200, json{{"session_id", s.session_id},
                    {"position", s.cursor + 1},
                    {"total", state_.plan.assignments.at(s.rater_id).size()},
                    {"post", {{"post_id", post_id}, {"text", pair.post_text}}},
                    {"note_a", {{"text", first}}},
                    {"note_b", {{"text", second}}},
                    {"order_token", order_token(s.session_id, post_id)},
                    {"demographics_required", !state_.store.demographics().count(s.rater_id)}}};
}

Response StudyService::submit(const std::string& session_id, const json& body) {
  std::lock_guard lock(mu_);
  const auto t = now();
  sweep_idle(t);
  const auto it = state_.sessions.find(session_id);
  if (it == state_.sessions.end()) return error(404, "unknown_session", "no such session");
  auto& s = it->second;

  if (!body.is_object()) return error(422, "validation_error", "body must be an object");
  if (!body.contains("post_id") || !body["post_id"].is_string()) {
    return error(422, "validation_error", "post_id is required", "post_id");
  }
  const auto post_id = body["post_id"].get<std::string>();
  const auto key = session_id + ":" + post_id;
  const json material{{"post_id", post_id},
                      {"ratings", body.value("ratings", json())},
                      {"win_choice", body.value("win_choice", json())}};
  const auto digest = sha256_hex(material.dump());
  if (const auto seen = state_.submission_digests.find(key); seen != state_.submission_digests.end()) {
    if (seen->second == digest) {
      return {200, json{{"status", "duplicate"}, {"state", to_string(s.state)}, {"position", s.cursor}}};
    }
    return error(409, "already_submitted", "a different rating for this post was already recorded", "post_id");
  }
  if (s.state == SessionState::Complete) return error(409, "session_complete", "all pairs have been rated");
  if (s.state == SessionState::Abandoned) return error(409, "session_abandoned", "session expired");
  if (post_id != *current_post(s)) return error(409, "out_of_order", "post is not the pair currently served", "post_id");
  if (body.value("order_token", std::string()) != order_token(session_id, post_id)) {
    return error(422, "validation_error", "order_token does not match the served pair", "order_token");
  }

  const auto order = state_.plan.pair_order.at({s.rater_id, post_id});
  const auto& pair = state_.pairs.at(post_id);
  if (!body.contains("ratings") || !body["ratings"].is_object()) {
    return error(422, "validation_error", "ratings for note_a and note_b are required", "ratings");
  }
  std::vector<RatingRecord> records;
  for (const char* label : {"note_a", "note_b"}) {
    const std::string prefix = std::string("ratings.") + label;
    if (!body["ratings"].contains(label)) return error(422, "validation_error", "rating is required", prefix);
    RatingRecord r;
    if (const auto bad = parse_note_rating(body["ratings"][label], prefix, r.helpfulness, r.characteristics)) {
      return error(422, "validation_error", bad->message, bad->field);
    }
    r.rater_id = s.rater_id;
    r.post_id = post_id;
    r.note_source = source_of(label, order);
    r.submitted_at = t;
    r.group = pair.group;
    records.push_back(std::move(r));
  }
  const auto& choice = body.value("win_choice", json());
  if (!choice.is_string() || (choice != "note_a" && choice != "note_b")) {
    return error(422, "validation_error", "win_choice must be note_a or note_b", "win_choice");
  }
  WinChoice win{s.rater_id, post_id, source_of(choice.get<std::string>(), order), t, pair.group};

  const bool need_demographics = !state_.store.demographics().count(s.rater_id);
  std::optional<Demographics> demo;
  if (need_demographics) {
    if (!body.contains("demographics")) {
      return error(422, "validation_error", "demographics are required with the first rating", "demographics");
    }
    Demographics d;
    if (const auto bad = parse_demographics(body["demographics"], d)) {
      return error(422, "validation_error", bad->message, bad->field);
    }
    d.rater_id = s.rater_id;
    demo = d;
  }

  if (demo) {
    auto row = evaluation::to_json(*demo);
    row["session_id"] = session_id;
    row["server_time"] = format_iso8601(t);
    demographics_log_->append(row.dump() + "\n");
  }
  std::string group;
  const int parts = 3;
  int part = 0;
  auto frame = [&](const char* kind, json record) {
    json line{{"submission_key", key},      {"part", ++part},          {"of", parts},
              {"session_id", session_id},   {"kind", kind},            {"record", std::move(record)},
              {"payload_digest", digest},   {"server_time", format_iso8601(t)}};
    group += line.dump() + "\n";
  };
  frame("rating", evaluation::to_json(records[0]));
  frame("rating", evaluation::to_json(records[1]));
  frame("win_choice", evaluation::to_json(win));
  ratings_log_->append(group);

  if (demo) state_.store.add(*demo);
  for (auto& r : records) state_.store.add(std::move(r));
  state_.store.add(win);
  state_.submission_digests[key] = digest;
  ++s.cursor;
  s.last_activity = t;
  if (s.cursor == state_.plan.assignments.at(s.rater_id).size()) s.state = SessionState::Complete;
  return {200, json{{"status", "recorded"}, {"state", to_string(s.state)}, {"position", s.cursor}}};
}

Response StudyService::report(const std::string& study_id) {
  std::lock_guard lock(mu_);
  sweep_idle(now());
  if (study_id != options_.study_id) return error(404, "unknown_study", "no such study");
  try {
    return {200, evaluation::to_json(study_report(state_, study_id))};
  } catch (const std::exception& e) {
    return error(500, "report_failed", e.what());
  }
}

// --- HTTP ---------------------------------------------------------------------

struct HttpServer::Impl {
  httplib::Server server;
};

namespace {

void reply(httplib::Response& res, const Response& r) {
  res.status = r.status;
  res.set_content(r.body.dump(), "application/json");
}

std::optional<json> parse_body(const httplib::Request& req, httplib::Response& res) {
  auto body = json::parse(req.body, nullptr, false);
  if (body.is_discarded()) {
    reply(res, {400, error_body("bad_json", "request body is not valid JSON")});
    return std::nullopt;
  }
  return body;
}

}  // namespace

HttpServer::HttpServer(StudyService& service, ServerConfig config)
    : impl_(std::make_unique<Impl>()), config_(std::move(config)) {
  auto& svr = impl_->server;
  StudyService* svc = &service;
  svr.Get("/health", [](const httplib::Request&, httplib::Response& res) {
    reply(res, {200, json{{"status", "ok"}}});
  });
  svr.Post("/sessions", [svc](const httplib::Request& req, httplib::Response& res) {
    if (auto body = parse_body(req, res)) reply(res, svc->create_session(*body));
  });
  svr.Get(R"(/sessions/([0-9a-f]+))", [svc](const httplib::Request& req, httplib::Response& res) {
    reply(res, svc->session_status(req.matches[1]));
  });
  svr.Get(R"(/sessions/([0-9a-f]+)/next)", [svc](const httplib::Request& req, httplib::Response& res) {
    reply(res, svc->next_pair(req.matches[1]));
  });
  svr.Post(R"(/sessions/([0-9a-f]+)/ratings)", [svc](const httplib::Request& req, httplib::Response& res) {
    if (auto body = parse_body(req, res)) reply(res, svc->submit(req.matches[1], *body));
  });
  svr.Get(R"(/reports/([A-Za-z0-9_.-]+))", [svc](const httplib::Request& req, httplib::Response& res) {
    reply(res, svc->report(req.matches[1]));
  });
  if (config_.static_dir && std::filesystem::is_directory(*config_.static_dir)) {
    svr.set_mount_point("/app", config_.static_dir->string());
  }
  svr.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string what = "internal error";
    try {
      if (ep) std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    spdlog::error("request failed: {}", what);
    reply(res, {500, error_body("internal_error", what)});
  });
  svr.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) res.set_content(error_body("not_found", "no such route").dump(), "application/json");
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind() {
  auto& svr = impl_->server;
  if (config_.port == 0) {
    port_ = svr.bind_to_any_port(config_.host);
  } else {
    port_ = svr.bind_to_port(config_.host, config_.port) ? config_.port : -1;
  }
  if (port_ <= 0) throw std::runtime_error(fmt::format("cannot bind {}:{}", config_.host, config_.port));
  return port_;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace commenotes::service
