// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Commenotes Authors

#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "commenotes/corpus.hpp"
#include "commenotes/llm.hpp"
#include "commenotes/util/jsonl.hpp"

namespace commenotes::filter {

using corpus::Comment;
using corpus::Post;

enum class Label { FactCheck, NotFactCheck };
std::string_view to_string(Label l);
std::optional<Label> label_from_string(std::string_view s);

struct ClassifierVerdict {
  std::string comment_id;
  Label label = Label::NotFactCheck;
  std::optional<double> confidence;  // in [0, 1] when present
  std::string classifier_id;

  bool operator==(const ClassifierVerdict&) const = default;
};

json to_json(const ClassifierVerdict& v);
/// Throws std::invalid_argument on a malformed row.
ClassifierVerdict verdict_from_json(const json& j);

enum class ClassifyErrorKind { Transport, Protocol };

/// Transport errors are retryable; protocol errors carry the raw reply.
struct ClassifyError {
  ClassifyErrorKind kind = ClassifyErrorKind::Transport;
  std::string message;
  std::string raw;
};

using ClassifyResult = std::variant<ClassifierVerdict, ClassifyError>;

class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual const std::string& id() const = 0;
  virtual ClassifyResult classify(const Post& post, const Comment& comment) = 0;
};

/// Validates preconditions (non-empty texts) and dispatches. Throws
/// std::invalid_argument when a text is empty after trimming.
ClassifyResult classify(const Post& post, const Comment& comment, Classifier& classifier);

// --- heuristic ----------------------------------------------------------------

/// Phrase cues, plus structural evidence detectors.
struct CueConfig {
  std::vector<std::string> contradiction;
  std::vector<std::string> evidence;
  bool evidence_url = false;
  bool evidence_year = false;
  bool evidence_number = false;
  /// When > 0, the comment must also share this many content words (four or
  /// more letters) with the post; zero disables the relevance check.
  std::size_t min_shared_words = 0;

  /// Parses the sectioned lexicon format ([contradiction] / [evidence], one
  /// cue per line, '#' comments, <url>/<year>/<number> detectors,
  /// "min_shared_words = N" under [relevance]). Throws std::invalid_argument.
  static CueConfig parse(std::string_view lexicon);
  static CueConfig load(const std::filesystem::path& path);
  static CueConfig defaults();
};

struct CueMatch {
  std::vector<std::string> contradiction;
  std::vector<std::string> evidence;
  std::size_t shared_words = 0;
};

CueMatch match_cues(const Post& post, const Comment& comment, const CueConfig& cues);

/// FactCheck iff a contradiction cue and an evidence cue both match (and the
/// optional relevance threshold holds). Pure function of its inputs.
/// Throws std::invalid_argument when either text is empty after trimming.
ClassifierVerdict heuristic_classify(const Post& post, const Comment& comment,
                                     const CueConfig& cues = CueConfig::defaults());

class HeuristicClassifier final : public Classifier {
 public:
  explicit HeuristicClassifier(CueConfig cues = CueConfig::defaults(),
                               std::string id = "heuristic-v1");
  const std::string& id() const override { return id_; }
  ClassifyResult classify(const Post& post, const Comment& comment) override;

 private:
  CueConfig cues_;
  std::string id_;
};

// --- remote -------------------------------------------------------------------

inline constexpr double kClassifyTemperature = 0.6;
inline constexpr double kClassifyTopP = 1.0;

struct ClassifyPrompt {
  std::string text;
  double temperature = kClassifyTemperature;
  double top_p = kClassifyTopP;
};

/// Fills the classification template verbatim (no escaping).
ClassifyPrompt llm_classify_prompt(std::string_view post_text, std::string_view comment_text);

/// Accepts exactly "1" or "0" after trimming whitespace.
std::variant<Label, ClassifyError> parse_binary_verdict(std::string_view reply);

class RemoteClassifier final : public Classifier {
 public:
  RemoteClassifier(std::shared_ptr<llm::ChatTransport> transport, std::string model,
                   llm::RetryPolicy retry = {});
  const std::string& id() const override { return id_; }
  ClassifyResult classify(const Post& post, const Comment& comment) override;

 private:
  std::shared_ptr<llm::ChatTransport> transport_;
  std::string model_;
  std::string id_;
  llm::RetryPolicy retry_;
};

// --- cache & batch --------------------------------------------------------------

/// Verdicts keyed by (classifier_id, comment_id). Thread-safe; inserts are
/// serialized and, when a log path is attached, appended to it.
class VerdictCache {
 public:
  VerdictCache() = default;
  /// Loads existing rows from `path` (if present) and appends new ones to it.
  explicit VerdictCache(std::filesystem::path path);

  std::optional<ClassifierVerdict> find(std::string_view classifier_id,
                                        std::string_view comment_id) const;
  void insert(const ClassifierVerdict& v);
  std::size_t size() const;
  std::vector<ClassifierVerdict> all() const;

 private:
  mutable std::mutex mu_;
  std::map<std::pair<std::string, std::string>, ClassifierVerdict> rows_;
  std::optional<std::filesystem::path> log_;
};

struct CommentFailure {
  std::string comment_id;
  ClassifyError error;
};

struct FilterResult {
  std::vector<Comment> kept;                 // FactCheck, input order
  std::vector<ClassifierVerdict> verdicts;   // one per classified comment, input order
  std::vector<CommentFailure> failures;
  bool ok() const { return failures.empty(); }
};

struct FilterOptions {
  std::size_t max_in_flight = 1;
  VerdictCache* cache = nullptr;
};

/// Keeps FactCheck comments in order. Classifier errors are attributed per
/// comment; verdicts for the rest are still returned.
FilterResult filter_comments(const Post& post, std::span<const Comment> comments,
                             Classifier& classifier, const FilterOptions& options = {});

// --- evaluation -----------------------------------------------------------------

struct LabeledComment {
  std::string comment_id;
  Label gold_label = Label::NotFactCheck;
};

struct ConfusionMatrix {
  std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
  std::uint64_t total() const { return tp + fp + fn + tn; }
};

struct FilterMetrics {
  double accuracy = 0.0;
  double recall = 0.0;
  double precision = 0.0;
  double f1 = 0.0;
};

json to_json(const FilterMetrics& m);
json to_json(const ConfusionMatrix& m);

/// Harmonic mean; 0 when both are 0.
double f1_score(double precision, double recall);

/// FactCheck is the positive class. Throws std::invalid_argument on an empty matrix.
FilterMetrics metrics_from(const ConfusionMatrix& m);

/// Throws std::invalid_argument if inputs are empty or cover different ids.
ConfusionMatrix confusion_matrix(std::span<const ClassifierVerdict> verdicts,
                                 std::span<const LabeledComment> gold);

FilterMetrics evaluate_classifier(std::span<const ClassifierVerdict> verdicts,
                                  std::span<const LabeledComment> gold);

std::vector<LabeledComment> load_gold(const std::filesystem::path& path);

}  // namespace commenotes::filter
