// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Commenotes Authors

#include "commenotes/synthesis.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <numeric>
#include <random>
#include <stdexcept>

#include "commenotes/prompts.hpp"
#include "commenotes/util/digest.hpp"
#include "commenotes/util/random.hpp"
#include "commenotes/util/text.hpp"

namespace commenotes::synthesis {
namespace {

struct Prepared {
  std::size_t source_index;
  std::string text;
};

std::vector<Prepared> prepare(std::span<const Comment> comments) {
  std::vector<Prepared> out;
  out.reserve(comments.size());
  for (std::size_t i = 0; i < comments.size(); ++i) {
    auto cleaned = text::strip_mentions(comments[i].text);
    if (!cleaned.empty()) out.push_back({i, std::move(cleaned)});
  }
  return out;
}

// Truncates to at most `limit` scalar values, backing off to a word boundary.
std::string fit_to_limit(std::string s, std::size_t limit) {
  if (text::count_scalar_values(s) <= limit) return s;
  std::string out;
  std::size_t last_space = std::string::npos;
  for (std::size_t i = 0; i < s.size();) {
    std::size_t len = 1;
    const auto b = static_cast<unsigned char>(s[i]);
    if (b >= 0xF0) len = 4;
    else if (b >= 0xE0) len = 3;
    else if (b >= 0xC0) len = 2;
    len = std::min(len, s.size() - i);
    if (text::count_scalar_values(out) + 1 > limit) break;
    if (s[i] == ' ') last_space = out.size();
    out.append(s, i, len);
    i += len;
  }
  if (last_space != std::string::npos && last_space > 0) out.resize(last_space);
  return std::string(text::trim(out));
}

std::size_t stated_limit(std::string_view prompt, std::size_t fallback) {
  const auto pos = prompt.find("within ");
  if (pos == std::string_view::npos) return fallback;
  std::size_t value = 0;
  const auto* first = prompt.data() + pos + 7;
  const auto [ptr, ec] = std::from_chars(first, prompt.data() + prompt.size(), value);
  if (ec != std::errc{} || ptr == first) return fallback;
  return value;
}

bool is_word(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_'; }

std::string replace_forbidden(std::string s) {
  std::string out;
  const auto lower = text::to_lower_ascii(s);
  std::size_t i = 0;
  while (i < s.size()) {
    const bool left = i == 0 || !is_word(s[i - 1]);
    const bool right = i + 8 >= s.size() || !is_word(s[i + 8]);
    if (left && right && lower.compare(i, 8, "comments") == 0) {
      out += "replies";
      i += 8;
    } else {
      out.push_back(s[i++]);
    }
  }
  return out;
}

}  // namespace

void SynthesisConfig::validate() const {
  if (max_comments == 0) throw std::invalid_argument("max_comments must be >= 1");
  if (char_limit == 0) throw std::invalid_argument("char_limit must be >= 1");
  if (max_regenerations == 0) throw std::invalid_argument("max_regenerations must be >= 1");
  if (!(tokens_per_comment > 0.0)) throw std::invalid_argument("tokens_per_comment must be positive");
}

json to_json(const SynthesisConfig& c) {
  return json{{"max_comments", c.max_comments},
              {"char_limit", c.char_limit},
              {"min_factcheck_comments", c.min_factcheck_comments},
              {"max_regenerations", c.max_regenerations},
              {"seed", c.seed},
              {"model_id", c.model_id},
              {"cap_stage", c.cap_stage == CapStage::AfterFilter ? "after_filter" : "before_filter"},
              {"template_hash", sha256_hex(prompts::synthesize_template())}};
}

std::string_view to_string(DeclineReason r) {
  switch (r) {
    case DeclineReason::InsufficientFactChecks: return "InsufficientFactChecks";
    case DeclineReason::ModelRefusal: return "ModelRefusal";
    case DeclineReason::LimitExceededAfterRetries: return "LimitExceededAfterRetries";
    case DeclineReason::TransportFailure: return "TransportFailure";
  }
  return "TransportFailure";
}

json to_json(const SynthesisOutcome& outcome, const SynthesisConfig& config) {
  json row{{"post_id", outcome.post_id}, {"config", to_json(config)}};
  if (outcome.generated()) {
    const auto& n = outcome.note();
    row["outcome"] = "Generated";
    row["note"] = json{{"text", n.text},
                       {"model_id", n.model_id},
                       {"source_comment_ids", n.source_comment_ids},
                       {"prompt_hash", n.prompt_hash},
                       {"generated_at", format_iso8601(n.generated_at)},
                       {"attempts", n.attempts}};
    row["decline"] = nullptr;
  } else {
    const auto& d = outcome.declined();
    row["outcome"] = "Declined";
    row["note"] = nullptr;
    row["decline"] = json{{"reason", std::string(to_string(d.reason))},
                          {"detail", d.detail},
                          {"attempts", d.attempts}};
  }
  return row;
}

GenerateResult StubGenerator::generate(const GenerationRequest& request) {
  const std::string_view prompt = request.prompt;
  const std::size_t limit = stated_limit(prompt, 280);
  std::string body;
  const auto start = prompt.find("COMMENTS:\n");
  if (start != std::string_view::npos) {
    auto rest = prompt.substr(start + 10);
    const auto end = rest.find("\n\n");
    rest = rest.substr(0, end);
    std::size_t pos = 0;
    while (pos < rest.size()) {
      auto nl = rest.find('\n', pos);
      if (nl == std::string_view::npos) nl = rest.size();
      const auto line = text::trim(rest.substr(pos, nl - pos));
      pos = nl + 1;
      if (line.empty()) continue;
      std::string candidate = body.empty() ? std::string(line) : body + " " + std::string(line);
      if (!body.empty() && text::count_scalar_values(candidate) > limit) break;
      body = std::move(candidate);
    }
  }
  if (body.empty()) return std::string(kRefusalSentinel);
  return fit_to_limit(replace_forbidden(std::move(body)), limit);
}

ScriptedGenerator::ScriptedGenerator(std::vector<GenerateResult> replies, std::string id)
    : replies_(std::move(replies)), id_(std::move(id)) {
  if (replies_.empty()) throw std::invalid_argument("ScriptedGenerator needs at least one reply");
}

GenerateResult ScriptedGenerator::generate(const GenerationRequest& request) {
  std::lock_guard lock(mu_);
  const std::size_t i = std::min(seen_.size(), replies_.size() - 1);
  seen_.push_back(request);
  return replies_[i];
}

std::size_t ScriptedGenerator::calls() const {
  std::lock_guard lock(mu_);
  return seen_.size();
}

std::vector<GenerationRequest> ScriptedGenerator::requests() const {
  std::lock_guard lock(mu_);
  return seen_;
}

RemoteGenerator::RemoteGenerator(std::shared_ptr<llm::ChatTransport> transport, std::string model,
                                 llm::RetryPolicy retry)
    : transport_(std::move(transport)), model_(std::move(model)), retry_(retry) {}

GenerateResult RemoteGenerator::generate(const GenerationRequest& request) {
  const llm::ChatRequest chat{model_, request.prompt, std::nullopt, std::nullopt};
  auto reply = llm::complete_with_retry(*transport_, chat, retry_);
  if (auto* err = std::get_if<llm::TransportError>(&reply)) return *err;
  return std::get<std::string>(std::move(reply));
}

std::vector<std::string> preprocess(std::span<const Comment> comments) {
  std::vector<std::string> out;
  for (auto& p : prepare(comments)) out.push_back(std::move(p.text));
  return out;
}

std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  if (k >= n) return idx;
  std::mt19937_64 engine(seed);
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::size_t>(uniform_below(engine, n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::vector<Comment> sample_cap(std::span<const Comment> comments, const SynthesisConfig& config) {
  config.validate();
  std::vector<Comment> out;
  for (const auto i : sample_indices(comments.size(), config.max_comments, config.seed)) {
    out.push_back(comments[i]);
  }
  return out;
}

std::string build_prompt(std::string_view post_text, std::span<const std::string> filtered_texts,
                         std::size_t char_limit) {
  if (filtered_texts.empty()) throw std::invalid_argument("build_prompt: no comment texts");
  std::string joined;
  for (std::size_t i = 0; i < filtered_texts.size(); ++i) {
    if (i > 0) joined.push_back('\n');
    joined += filtered_texts[i];
  }
  const auto limit = std::to_string(char_limit);
  return text::fill_template(prompts::synthesize_template(),
                             {{"char_limit", limit}, {"post_text", post_text}, {"comments", joined}});
}

double estimate_prompt_tokens(std::size_t comment_count, double tokens_per_comment) {
  return static_cast<double>(comment_count) * tokens_per_comment;
}

bool is_refusal(std::string_view reply) { return text::contains_ci(reply, kRefusalSentinel); }

bool contains_forbidden_word(std::string_view note) { return text::contains_word_ci(note, "comments"); }

std::vector<Comment> candidate_comments(std::span<const Comment> slice,
                                        const std::function<bool(const Comment&)>& is_fact_check,
                                        const SynthesisConfig& config) {
  std::vector<Comment> pool;
  if (config.cap_stage == CapStage::BeforeFilter) {
    pool = sample_cap(slice, config);
  } else {
    pool.assign(slice.begin(), slice.end());
  }
  std::vector<Comment> out;
  for (auto& c : pool) {
    if (is_fact_check(c)) out.push_back(std::move(c));
  }
  return out;
}

SynthesisOutcome synthesize(const Post& post, std::span<const Comment> filtered,
                            const SynthesisConfig& config, Generator& generator, const Clock& clock) {
  config.validate();
  SynthesisOutcome outcome{post.post_id, Declined{}};
  if (filtered.size() < config.min_factcheck_comments) {
    outcome.result = Declined{DeclineReason::InsufficientFactChecks,
                              std::to_string(filtered.size()) + " fact-check comments, need " +
                                  std::to_string(config.min_factcheck_comments),
                              0};
    return outcome;
  }
  const auto prepared = prepare(filtered);
  if (prepared.empty()) {
    outcome.result = Declined{DeclineReason::InsufficientFactChecks,
                              "no usable text after preprocessing", 0};
    return outcome;
  }

  std::vector<std::string> texts;
  std::vector<std::string> source_ids;
  Instant latest = post.created_at;
  for (const auto i : sample_indices(prepared.size(), config.max_comments, config.seed)) {
    const auto& c = filtered[prepared[i].source_index];
    texts.push_back(prepared[i].text);
    source_ids.push_back(c.comment_id);
    latest = std::max(latest, c.created_at);
  }

  const auto prompt = build_prompt(post.text, texts, config.char_limit);
  const auto prompt_hash = sha256_hex(prompt);
  std::string violation;
  for (std::size_t attempt = 1; attempt <= config.max_regenerations; ++attempt) {
    auto reply = generator.generate({prompt, config.model_id, attempt});
    if (const auto* err = std::get_if<llm::TransportError>(&reply)) {
      outcome.result = Declined{DeclineReason::TransportFailure, err->message, attempt};
      return outcome;
    }
    const auto note_text = std::string(text::trim(std::get<std::string>(reply)));
    if (is_refusal(note_text)) {
      outcome.result = Declined{DeclineReason::ModelRefusal, note_text, attempt};
      return outcome;
    }
    const auto length = text::count_scalar_values(note_text);
    if (note_text.empty()) {
      violation = "empty note";
    } else if (length > config.char_limit) {
      violation = std::to_string(length) + " characters exceeds limit of " + std::to_string(config.char_limit);
    } else if (contains_forbidden_word(note_text)) {
      violation = "note uses the word \"comments\"";
    } else {
      Instant at = latest;
      if (clock) {
        at = clock();
      } else if (!generator.deterministic()) {
        at = std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
      }
      outcome.result = Commenote{post.post_id, note_text, config.model_id, source_ids, prompt_hash, at, attempt};
      return outcome;
    }
  }
  outcome.result = Declined{DeclineReason::LimitExceededAfterRetries, violation, config.max_regenerations};
  return outcome;
}

}  // namespace commenotes::synthesis
