// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Commenotes Authors

#include "commenotes/filter.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <exception>
#include <fstream>
#include <set>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "commenotes/prompts.hpp"
#include "commenotes/util/text.hpp"

namespace commenotes::filter {
namespace {

const std::unordered_set<std::string>& stopwords() {
  static const std::unordered_set<std::string> kWords{
      "that", "this", "with", "from", "have", "there", "what", "they", "their", "were",
      "will", "would", "about", "been", "just", "like", "your", "than", "then", "when",
      "which", "into", "only", "also", "some", "more", "very", "it's", "that's", "does"};
  return kWords;
}

bool contains_phrase(const std::vector<std::string>& tokens, const std::vector<std::string>& phrase) {
  if (phrase.empty() || phrase.size() > tokens.size()) return false;
  return std::search(tokens.begin(), tokens.end(), phrase.begin(), phrase.end()) != tokens.end();
}

bool has_url(std::string_view s) {
  return text::contains_ci(s, "http://") || text::contains_ci(s, "https://") ||
         text::contains_ci(s, "www.");
}

bool has_year(const std::vector<std::string>& tokens) {
  return std::any_of(tokens.begin(), tokens.end(), [](const std::string& t) {
    if (t.size() != 4 || !std::all_of(t.begin(), t.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      return false;
    }
    const int year = std::stoi(t);
    return year >= 1500 && year <= 2099;
  });
}

bool has_number(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

std::set<std::string> content_words(std::string_view s) {
  std::set<std::string> out;
  for (auto& w : text::word_tokens(s)) {
    if (w.size() >= 4 && !stopwords().count(w)) out.insert(std::move(w));
  }
  return out;
}

}  // namespace

std::string_view to_string(Label l) { return l == Label::FactCheck ? "FactCheck" : "NotFactCheck"; }

std::optional<Label> label_from_string(std::string_view s) {
  if (s == "FactCheck") return Label::FactCheck;
  if (s == "NotFactCheck") return Label::NotFactCheck;
  return std::nullopt;
}

json to_json(const ClassifierVerdict& v) {
  json obj{{"comment_id", v.comment_id},
           {"label", std::string(to_string(v.label))},
           {"classifier_id", v.classifier_id}};
  if (v.confidence) obj["confidence"] = *v.confidence;
  return obj;
}

ClassifierVerdict verdict_from_json(const json& j) {
  try {
    ClassifierVerdict v;
    v.comment_id = j.at("comment_id").get<std::string>();
    const auto label = label_from_string(j.at("label").get<std::string>());
    if (!label) throw std::invalid_argument("unknown label");
    v.label = *label;
    v.classifier_id = j.at("classifier_id").get<std::string>();
    if (const auto c = j.find("confidence"); c != j.end() && !c->is_null()) {
      v.confidence = c->get<double>();
      if (*v.confidence < 0.0 || *v.confidence > 1.0) throw std::invalid_argument("confidence outside [0,1]");
    }
    return v;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed verdict: ") + e.what());
  }
}

namespace {

void require_texts(const Post& post, const Comment& comment) {
  if (text::trim(post.text).empty()) throw std::invalid_argument("classify: post text is empty");
  if (text::trim(comment.text).empty()) {
    throw std::invalid_argument("classify: comment " + comment.comment_id + " has empty text");
  }
}

}  // namespace

ClassifyResult classify(const Post& post, const Comment& comment, Classifier& classifier) {
  require_texts(post, comment);
  return classifier.classify(post, comment);
}

CueConfig CueConfig::parse(std::string_view lexicon) {
  CueConfig cues;
  enum class Section { None, Contradiction, Evidence, Relevance } section = Section::None;
  std::size_t start = 0;
  std::size_t line_no = 0;
  while (start <= lexicon.size()) {
    auto end = lexicon.find('\n', start);
    if (end == std::string_view::npos) end = lexicon.size();
    ++line_no;
    const auto line = text::trim(lexicon.substr(start, end - start));
    start = end + 1;
    if (line.empty() || line.front() == '#') continue;
    if (line == "[contradiction]") {
      section = Section::Contradiction;
    } else if (line == "[evidence]") {
      section = Section::Evidence;
    } else if (line == "[relevance]") {
      section = Section::Relevance;
    } else if (line.front() == '[') {
      throw std::invalid_argument("cue lexicon line " + std::to_string(line_no) + ": unknown section");
    } else if (section == Section::None) {
      throw std::invalid_argument("cue lexicon line " + std::to_string(line_no) + ": cue outside a section");
    } else if (section == Section::Relevance) {
      const auto eq = line.find('=');
      if (eq == std::string_view::npos || text::trim(line.substr(0, eq)) != "min_shared_words") {
        throw std::invalid_argument("cue lexicon line " + std::to_string(line_no) + ": expected min_shared_words = N");
      }
      cues.min_shared_words = std::stoul(std::string(text::trim(line.substr(eq + 1))));
    } else if (section == Section::Evidence && line == "<url>") {
      cues.evidence_url = true;
    } else if (section == Section::Evidence && line == "<year>") {
      cues.evidence_year = true;
    } else if (section == Section::Evidence && line == "<number>") {
      cues.evidence_number = true;
    } else {
      auto& list = section == Section::Contradiction ? cues.contradiction : cues.evidence;
      list.emplace_back(text::to_lower_ascii(line));
    }
    if (end == lexicon.size()) break;
  }
  return cues;
}

CueConfig CueConfig::load(const std::filesystem::path& path) { return parse(read_file(path)); }

CueConfig CueConfig::defaults() {
  static const CueConfig kDefaults = parse(prompts::default_cue_lexicon());
  return kDefaults;
}

CueMatch match_cues(const Post& post, const Comment& comment, const CueConfig& cues) {
  const auto body = text::strip_mentions(comment.text);
  const auto tokens = text::word_tokens(body);
  CueMatch m;
  for (const auto& cue : cues.contradiction) {
    if (contains_phrase(tokens, text::word_tokens(cue))) m.contradiction.push_back(cue);
  }
  for (const auto& cue : cues.evidence) {
    if (contains_phrase(tokens, text::word_tokens(cue))) m.evidence.push_back(cue);
  }
  if (cues.evidence_url && has_url(body)) m.evidence.emplace_back("<url>");
  if (cues.evidence_year && has_year(tokens)) m.evidence.emplace_back("<year>");
  if (cues.evidence_number && has_number(body)) m.evidence.emplace_back("<number>");
  if (cues.min_shared_words > 0) {
    const auto post_words = content_words(post.text);
    for (const auto& w : content_words(body)) m.shared_words += post_words.count(w);
  }
  return m;
}

ClassifierVerdict heuristic_classify(const Post& post, const Comment& comment, const CueConfig& cues) {
  require_texts(post, comment);
  const auto m = match_cues(post, comment, cues);
  const bool relevant = cues.min_shared_words == 0 || m.shared_words >= cues.min_shared_words;
  const bool fact_check = !m.contradiction.empty() && !m.evidence.empty() && relevant;
  return ClassifierVerdict{comment.comment_id, fact_check ? Label::FactCheck : Label::NotFactCheck,
                           std::nullopt, "heuristic-v1"};
}

HeuristicClassifier::HeuristicClassifier(CueConfig cues, std::string id)
    : cues_(std::move(cues)), id_(std::move(id)) {}

ClassifyResult HeuristicClassifier::classify(const Post& post, const Comment& comment) {
  auto v = heuristic_classify(post, comment, cues_);
  v.classifier_id = id_;
  return v;
}

ClassifyPrompt llm_classify_prompt(std::string_view post_text, std::string_view comment_text) {
  ClassifyPrompt p;
  p.text = text::fill_template(prompts::classify_template(),
                               {{"post_text", post_text}, {"comment_text", comment_text}});
  return p;
}

std::variant<Label, ClassifyError> parse_binary_verdict(std::string_view reply) {
  const auto t = text::trim(reply);
  if (t == "1") return Label::FactCheck;
  if (t == "0") return Label::NotFactCheck;
  return ClassifyError{ClassifyErrorKind::Protocol, "expected \"1\" or \"0\"", std::string(reply)};
}

RemoteClassifier::RemoteClassifier(std::shared_ptr<llm::ChatTransport> transport, std::string model,
                                   llm::RetryPolicy retry)
    : transport_(std::move(transport)), model_(std::move(model)), id_("remote:" + model_),
      retry_(retry) {}

ClassifyResult RemoteClassifier::classify(const Post& post, const Comment& comment) {
  const auto prompt = llm_classify_prompt(post.text, comment.text);
  const llm::ChatRequest request{model_, prompt.text, prompt.temperature, prompt.top_p};
  const auto reply = llm::complete_with_retry(*transport_, request, retry_);
  if (const auto* err = std::get_if<llm::TransportError>(&reply)) {
    return ClassifyError{ClassifyErrorKind::Transport, err->message, {}};
  }
  const auto parsed = parse_binary_verdict(std::get<std::string>(reply));
  if (const auto* err = std::get_if<ClassifyError>(&parsed)) return *err;
  return ClassifierVerdict{comment.comment_id, std::get<Label>(parsed), std::nullopt, id_};
}

VerdictCache::VerdictCache(std::filesystem::path path) : log_(std::move(path)) {
  if (std::filesystem::exists(*log_)) {
    for (const auto& line : read_lines(*log_)) {
      // A torn final line from an interrupted run is ignored.
      if (!line.terminated) break;
      const auto v = verdict_from_json(json::parse(line.text));
      rows_.insert_or_assign({v.classifier_id, v.comment_id}, v);
    }
  }
}

std::optional<ClassifierVerdict> VerdictCache::find(std::string_view classifier_id,
                                                    std::string_view comment_id) const {
  std::lock_guard lock(mu_);
  const auto it = rows_.find({std::string(classifier_id), std::string(comment_id)});
  if (it == rows_.end()) return std::nullopt;
  return it->second;
}

void VerdictCache::insert(const ClassifierVerdict& v) {
  std::lock_guard lock(mu_);
  rows_.insert_or_assign({v.classifier_id, v.comment_id}, v);
  if (log_) {
    if (log_->has_parent_path()) std::filesystem::create_directories(log_->parent_path());
    std::ofstream out(*log_, std::ios::app | std::ios::binary);
    out << to_json(v).dump() << '\n';
    if (!out) throw std::runtime_error("cannot append to verdict cache " + log_->string());
  }
}

std::size_t VerdictCache::size() const {
  std::lock_guard lock(mu_);
  return rows_.size();
}

std::vector<ClassifierVerdict> VerdictCache::all() const {
  std::lock_guard lock(mu_);
  std::vector<ClassifierVerdict> out;
  out.reserve(rows_.size());
  for (const auto& [key, v] : rows_) out.push_back(v);
  return out;
}

FilterResult filter_comments(const Post& post, std::span<const Comment> comments,
                             Classifier& classifier, const FilterOptions& options) {
  for (const auto& c : comments) {
    if (c.post_id != post.post_id) {
      throw std::invalid_argument("filter_comments: comment " + c.comment_id + " belongs to another post");
    }
  }
  std::vector<std::optional<ClassifyResult>> slots(comments.size());
  auto run_one = [&](std::size_t i) {
    const auto& c = comments[i];
    if (options.cache) {
      if (auto hit = options.cache->find(classifier.id(), c.comment_id)) {
        slots[i] = *hit;
        return;
      }
    }
    auto result = classify(post, c, classifier);
    if (options.cache) {
      if (const auto* v = std::get_if<ClassifierVerdict>(&result)) options.cache->insert(*v);
    }
    slots[i] = std::move(result);
  };

  const std::size_t workers = std::min(std::max<std::size_t>(1, options.max_in_flight), comments.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < comments.size(); ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mu;
    {
      std::vector<std::jthread> pool;
      pool.reserve(workers);
      for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
          for (std::size_t i = next++; i < comments.size(); i = next++) {
            try {
              run_one(i);
            } catch (...) {
              std::lock_guard lock(error_mu);
              if (!first_error) first_error = std::current_exception();
            }
          }
        });
      }
    }
    if (first_error) std::rethrow_exception(first_error);
  }

  FilterResult out;
  for (std::size_t i = 0; i < comments.size(); ++i) {
    if (const auto* v = std::get_if<ClassifierVerdict>(&*slots[i])) {
      if (v->label == Label::FactCheck) out.kept.push_back(comments[i]);
      out.verdicts.push_back(*v);
    } else {
      out.failures.push_back({comments[i].comment_id, std::get<ClassifyError>(*slots[i])});
    }
  }
  return out;
}

json to_json(const FilterMetrics& m) {
  return json{{"accuracy", m.accuracy}, {"recall", m.recall}, {"precision", m.precision}, {"f1", m.f1}};
}

json to_json(const ConfusionMatrix& m) {
  return json{{"tp", m.tp}, {"fp", m.fp}, {"fn", m.fn}, {"tn", m.tn}};
}

double f1_score(double precision, double recall) {
  const double denom = precision + recall;
  return denom > 0.0 ? 2.0 * precision * recall / denom : 0.0;
}

FilterMetrics metrics_from(const ConfusionMatrix& m) {
  if (m.total() == 0) throw std::invalid_argument("metrics_from: empty confusion matrix");
  const auto d = [](std::uint64_t x) { return static_cast<double>(x); };
  FilterMetrics out;
  out.accuracy = d(m.tp + m.tn) / d(m.total());
  out.precision = m.tp + m.fp > 0 ? d(m.tp) / d(m.tp + m.fp) : 0.0;
  out.recall = m.tp + m.fn > 0 ? d(m.tp) / d(m.tp + m.fn) : 0.0;
  out.f1 = f1_score(out.precision, out.recall);
  return out;
}

ConfusionMatrix confusion_matrix(std::span<const ClassifierVerdict> verdicts,
                                 std::span<const LabeledComment> gold) {
  if (verdicts.empty() || gold.empty()) throw std::invalid_argument("evaluate_classifier: empty input");
  std::unordered_map<std::string, Label> truth;
  for (const auto& g : gold) {
    if (!truth.emplace(g.comment_id, g.gold_label).second) {
      throw std::invalid_argument("evaluate_classifier: duplicate gold id " + g.comment_id);
    }
  }
  if (verdicts.size() != truth.size()) throw std::invalid_argument("evaluate_classifier: id sets differ");
  std::unordered_set<std::string> seen;
  ConfusionMatrix m;
  for (const auto& v : verdicts) {
    const auto it = truth.find(v.comment_id);
    if (it == truth.end() || !seen.insert(v.comment_id).second) {
      throw std::invalid_argument("evaluate_classifier: id sets differ at " + v.comment_id);
    }
    const bool predicted = v.label == Label::FactCheck;
    const bool actual = it->second == Label::FactCheck;
    if (predicted && actual) ++m.tp;
    else if (predicted) ++m.fp;
    else if (actual) ++m.fn;
    else ++m.tn;
  }
  return m;
}

FilterMetrics evaluate_classifier(std::span<const ClassifierVerdict> verdicts,
                                  std::span<const LabeledComment> gold) {
  return metrics_from(confusion_matrix(verdicts, gold));
}

std::vector<LabeledComment> load_gold(const std::filesystem::path& path) {
  std::vector<LabeledComment> out;
  for (const auto& line : read_lines(path)) {
    const auto j = json::parse(line.text);
    const auto label = label_from_string(j.at("gold_label").get<std::string>());
    if (!label) throw std::invalid_argument(path.string() + ":" + std::to_string(line.line_no) + ": bad gold_label");
    out.push_back({j.at("comment_id").get<std::string>(), *label});
  }
  return out;
}

}  // namespace commenotes::filter
