// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Commenotes Authors

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "commenotes/corpus.hpp"
#include "commenotes/llm.hpp"
#include "commenotes/util/jsonl.hpp"
#include "commenotes/util/time.hpp"

namespace commenotes::synthesis {

using corpus::Comment;
using corpus::Post;

/// Where the comment cap is applied relative to the fact-check filter.
enum class CapStage { AfterFilter, BeforeFilter };

struct SynthesisConfig {
  std::size_t max_comments = 300;
  std::size_t char_limit = 280;
  std::size_t min_factcheck_comments = 25;
  /// Total generation calls allowed, counting the first one.
  std::size_t max_regenerations = 3;
  std::uint64_t seed = 0;
  std::string model_id = "stub";
  CapStage cap_stage = CapStage::AfterFilter;
  double tokens_per_comment = 32.2;

  /// Throws std::invalid_argument when a bound is zero.
  void validate() const;
};

json to_json(const SynthesisConfig& c);

struct Commenote {
  std::string post_id;
  std::string text;
  std::string model_id;
  std::vector<std::string> source_comment_ids;
  std::string prompt_hash;  // SHA-256 of the rendered prompt
  Instant generated_at{};
  std::size_t attempts = 1;
};

enum class DeclineReason {
  InsufficientFactChecks,
  ModelRefusal,
  LimitExceededAfterRetries,
  TransportFailure
};

std::string_view to_string(DeclineReason r);

struct Declined {
  DeclineReason reason = DeclineReason::InsufficientFactChecks;
  std::string detail;
  std::size_t attempts = 0;  // generator calls made
};

struct SynthesisOutcome {
  std::string post_id;
  std::variant<Commenote, Declined> result;

  bool generated() const { return std::holds_alternative<Commenote>(result); }
  const Commenote& note() const { return std::get<Commenote>(result); }
  const Declined& declined() const { return std::get<Declined>(result); }
};

/// One commenotes.jsonl row, including the config snapshot.
json to_json(const SynthesisOutcome& outcome, const SynthesisConfig& config);

// --- generators ---------------------------------------------------------------

struct GenerationRequest {
  std::string prompt;
  std::string model;
  std::size_t attempt = 1;
};

using GenerateResult = std::variant<std::string, llm::TransportError>;

class Generator {
 public:
  virtual ~Generator() = default;
  virtual const std::string& id() const = 0;
  /// Deterministic generators get reproducible provenance timestamps.
  virtual bool deterministic() const = 0;
  virtual GenerateResult generate(const GenerationRequest& request) = 0;
};

/// Offline extractive stand-in: joins the first comment lines of the prompt
/// into a note that fits the limit stated in the prompt.
class StubGenerator final : public Generator {
 public:
  const std::string& id() const override { return id_; }
  bool deterministic() const override { return true; }
  GenerateResult generate(const GenerationRequest& request) override;

 private:
  std::string id_ = "stub";
};

/// Replays a fixed list of replies (the last one repeats) and counts calls.
class ScriptedGenerator final : public Generator {
 public:
  explicit ScriptedGenerator(std::vector<GenerateResult> replies, std::string id = "scripted");
  const std::string& id() const override { return id_; }
  bool deterministic() const override { return true; }
  GenerateResult generate(const GenerationRequest& request) override;

  std::size_t calls() const;
  std::vector<GenerationRequest> requests() const;

 private:
  std::vector<GenerateResult> replies_;
  std::string id_;
  mutable std::mutex mu_;
  std::vector<GenerationRequest> seen_;
};

/// Chat-completions generator with default sampling parameters.
class RemoteGenerator final : public Generator {
 public:
  RemoteGenerator(std::shared_ptr<llm::ChatTransport> transport, std::string model,
                  llm::RetryPolicy retry = {});
  const std::string& id() const override { return model_; }
  bool deterministic() const override { return false; }
  GenerateResult generate(const GenerationRequest& request) override;

 private:
  std::shared_ptr<llm::ChatTransport> transport_;
  std::string model_;
  llm::RetryPolicy retry_;
};

// --- stages -------------------------------------------------------------------

/// Mention-stripped, whitespace-collapsed texts; empty results are dropped.
std::vector<std::string> preprocess(std::span<const Comment> comments);

/// Seeded uniform k-subset of [0, n), ascending. Partial Fisher-Yates over a
/// mt19937_64 stream with rejection-sampled bounds, so the draw is identical
/// on every platform.
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, std::uint64_t seed);

/// Identity when there are at most max_comments; otherwise a chronological
/// uniform subset of exactly max_comments.
std::vector<Comment> sample_cap(std::span<const Comment> comments, const SynthesisConfig& config);

/// Throws std::invalid_argument for an empty list.
std::string build_prompt(std::string_view post_text, std::span<const std::string> filtered_texts,
                         std::size_t char_limit = 280);

double estimate_prompt_tokens(std::size_t comment_count, double tokens_per_comment = 32.2);

inline constexpr std::string_view kRefusalSentinel = "could not synthesize";

bool is_refusal(std::string_view reply);
/// The standalone word "comments", any case.
bool contains_forbidden_word(std::string_view note);

/// Comments handed to synthesize(): the fact-check subset of `slice`. With
/// CapStage::BeforeFilter the raw slice is capped first.
std::vector<Comment> candidate_comments(std::span<const Comment> slice,
                                        const std::function<bool(const Comment&)>& is_fact_check,
                                        const SynthesisConfig& config);

using Clock = std::function<Instant()>;

/// Eligibility gate, preprocess, cap, prompt, generate with bounded
/// regeneration. Never calls the generator when the gate fails.
SynthesisOutcome synthesize(const Post& post, std::span<const Comment> filtered,
                            const SynthesisConfig& config, Generator& generator,
                            const Clock& clock = {});

}  // namespace commenotes::synthesis
