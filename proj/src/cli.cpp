// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Commenotes Authors

#include "commenotes/cli.hpp"

#include <pthread.h>
#include <signal.h>

#include <atomic>
#include <functional>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "commenotes/analytics.hpp"
#include "commenotes/corpus.hpp"
#include "commenotes/evaluation.hpp"
#include "commenotes/filter.hpp"
#include "commenotes/service.hpp"
#include "commenotes/synthesis.hpp"
#include "commenotes/util/digest.hpp"

namespace commenotes::cli {
namespace fs = std::filesystem;

json to_json(const RunManifest& m) {
  auto digests = [](const std::vector<FileDigest>& files) {
    json out = json::array();
    for (const auto& f : files) out.push_back({{"path", f.path}, {"sha256", f.sha256}});
    return out;
  };
  return json{{"command", m.command},
              {"config", m.config},
              {"seed", m.seed ? json(*m.seed) : json(nullptr)},
              {"inputs", digests(m.inputs)},
              {"outputs", digests(m.outputs)},
              {"parents", digests(m.parents)},
              {"started_at", format_iso8601(m.started_at)},
              {"finished_at", format_iso8601(m.finished_at)}};
}

namespace {

Instant wall_now() { return std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now()); }

Duration duration_flag(const std::string& value, const char* flag) {
  const auto d = parse_duration(value);
  if (!d || *d <= Duration::zero()) throw UsageError(fmt::format("{}: not a positive duration: {}", flag, value));
  return *d;
}

// Stable across platforms, unlike std::hash.
std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 14695981039346656037ull;
  for (const unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

struct Context {
  fs::path data_dir = ".";
  fs::path resolve(const std::string& p) const {
    const fs::path path(p);
    return path.is_absolute() ? path : data_dir / path;
  }
};

std::string join(const std::string& dir, const char* name) { return (fs::path(dir) / name).generic_string(); }

class Manifest {
 public:
  Manifest(const Context& ctx, std::string command, std::string out_dir)
      : ctx_(ctx), out_dir_(std::move(out_dir)) {
    m_.command = std::move(command);
    m_.started_at = wall_now();
  }
  json& config() { return m_.config; }
  void seed(std::uint64_t s) { m_.seed = s; }
  void input(const std::string& rel) { m_.inputs.push_back({rel, sha256_file_hex(ctx_.resolve(rel))}); }
  void output(const std::string& rel) { m_.outputs.push_back({rel, sha256_file_hex(ctx_.resolve(rel))}); }
  /// Links the manifest that produced `rel_dir`, when there is one.
  void parent(const std::string& rel_dir) {
    const auto rel = join(rel_dir, "manifest.json");
    if (fs::exists(ctx_.resolve(rel))) m_.parents.push_back({rel, sha256_file_hex(ctx_.resolve(rel))});
  }
  void write() {
    m_.finished_at = wall_now();
    const auto path = ctx_.resolve(join(out_dir_, "manifest.json"));
    write_file_atomic(path, to_json(m_).dump(2) + "\n");
  }

 private:
  const Context& ctx_;
  std::string out_dir_;
  RunManifest m_;
};

std::string parent_dir(const std::string& rel_file) {
  auto p = fs::path(rel_file).parent_path().generic_string();
  return p.empty() ? "." : p;
}

void emit_jsonl(const Context& ctx, Manifest& manifest, const std::string& rel, const std::vector<json>& rows) {
  write_jsonl(ctx.resolve(rel), rows);
  manifest.output(rel);
}

corpus::Corpus load_corpus_dir(const Context& ctx, const std::string& dir, Manifest& manifest) {
  const auto paths = corpus::corpus_paths_in(ctx.resolve(dir));
  if (!fs::exists(paths.posts)) throw UsageError("missing posts file " + paths.posts.string());
  if (!fs::exists(paths.comments)) throw UsageError("missing comments file " + paths.comments.string());
  std::optional<fs::path> notes;
  manifest.input(join(dir, "posts.jsonl"));
  manifest.input(join(dir, "comments.jsonl"));
  if (fs::exists(paths.notes)) {
    notes = paths.notes;
    manifest.input(join(dir, "notes.jsonl"));
  }
  manifest.parent(dir);
  return corpus::load_corpus(paths.posts, paths.comments, notes, {.strict = true}).corpus;
}

analytics::VerdictStore load_verdicts(const Context& ctx, const std::string& rel, Manifest& manifest) {
  const auto path = ctx.resolve(rel);
  if (!fs::exists(path)) throw UsageError("missing verdicts file " + path.string() + " (run filter first)");
  analytics::VerdictStore store;
  for (const auto& line : read_lines(path)) {
    const auto j = json::parse(line.text, nullptr, false);
    if (j.is_discarded()) throw UsageError(fmt::format("{}:{}: malformed verdict", rel, line.line_no));
    try {
      store.insert(filter::verdict_from_json(j));
    } catch (const std::invalid_argument& e) {
      throw UsageError(fmt::format("{}:{}: {}", rel, line.line_no, e.what()));
    }
  }
  manifest.input(rel);
  manifest.parent(parent_dir(rel));
  return store;
}

std::shared_ptr<llm::ChatTransport> remote_transport() {
  auto endpoint = llm::endpoint_from_env();
  if (!endpoint) throw UsageError("remote models need COMMENOTES_LLM_BASE_URL (and usually COMMENOTES_LLM_API_KEY)");
  return llm::make_http_transport(*endpoint);
}

template <typename Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn&& fn) {
  const auto workers = std::min(std::max<std::size_t>(1, jobs), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex mu;
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(mu);
            if (!error) error = std::current_exception();
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

// --- ingest -------------------------------------------------------------------

struct IngestOptions {
  std::string posts, comments, notes, out = "corpus";
  bool strict = false;
};

int cmd_ingest(const Context& ctx, const IngestOptions& o) {
  for (const auto* f : {&o.posts, &o.comments}) {
    if (!fs::exists(ctx.resolve(*f))) throw UsageError("input file not found: " + ctx.resolve(*f).string());
  }
  Manifest manifest(ctx, "ingest", o.out);
  manifest.config() = {{"posts", o.posts}, {"comments", o.comments}, {"notes", o.notes},
                       {"out", o.out}, {"strict", o.strict}};
  manifest.input(o.posts);
  manifest.input(o.comments);
  std::optional<fs::path> notes;
  if (!o.notes.empty()) {
    if (!fs::exists(ctx.resolve(o.notes))) throw UsageError("input file not found: " + ctx.resolve(o.notes).string());
    notes = ctx.resolve(o.notes);
    manifest.input(o.notes);
  }
  auto result = corpus::load_corpus(ctx.resolve(o.posts), ctx.resolve(o.comments), notes, {.strict = o.strict});
  for (const auto& w : result.warnings) spdlog::warn("{}", w);

  fs::create_directories(ctx.resolve(o.out));
  const auto paths = corpus::corpus_paths_in(ctx.resolve(o.out));
  corpus::write_corpus(result.corpus, paths);
  corpus::write_rejects(ctx.resolve(join(o.out, "rejects.jsonl")), result.rejects);
  for (const char* name : {"posts.jsonl", "comments.jsonl", "notes.jsonl", "rejects.jsonl"}) {
    manifest.output(join(o.out, name));
  }
  manifest.write();
  fmt::print("ingested {} posts, {} comments, {} notes; {} rejects\n", result.corpus.posts().size(),
             result.corpus.comment_count(), result.corpus.notes().size(), result.rejects.size());
  return kExitOk;
}

// --- filter -------------------------------------------------------------------

struct FilterOptions {
  std::string corpus = "corpus", classifier = "heuristic", cues, model = "gpt-4o", gold, out = "filter";
  std::string scope = "all";
  std::size_t jobs = 1;
};

int cmd_filter(const Context& ctx, const FilterOptions& o) {
  Manifest manifest(ctx, "filter", o.out);
  manifest.config() = {{"corpus", o.corpus}, {"classifier", o.classifier}, {"cues", o.cues},
                       {"model", o.model},   {"gold", o.gold},             {"out", o.out},
                       {"scope", o.scope},   {"jobs", o.jobs}};
  const auto corpus = load_corpus_dir(ctx, o.corpus, manifest);
  fs::create_directories(ctx.resolve(o.out));

  std::unique_ptr<filter::Classifier> classifier;
  std::unique_ptr<filter::VerdictCache> cache;
  if (o.classifier == "heuristic") {
    auto cues = filter::CueConfig::defaults();
    if (!o.cues.empty()) {
      cues = filter::CueConfig::load(ctx.resolve(o.cues));
      manifest.input(o.cues);
    }
    classifier = std::make_unique<filter::HeuristicClassifier>(std::move(cues));
  } else {
    classifier = std::make_unique<filter::RemoteClassifier>(remote_transport(), o.model);
    cache = std::make_unique<filter::VerdictCache>(ctx.resolve(join(o.out, "verdict_cache.jsonl")));
  }

  std::vector<json> verdict_rows, failure_rows;
  std::vector<filter::ClassifierVerdict> verdicts;
  std::size_t kept = 0;
  for (const auto& post : corpus.posts()) {
    const auto scope = o.scope == "pre-note" ? corpus::pre_note_slice(corpus, post.post_id)
                                             : corpus.comments_of(post.post_id);
    const auto result = filter::filter_comments(post, scope, *classifier, {o.jobs, cache.get()});
    kept += result.kept.size();
    for (const auto& v : result.verdicts) {
      verdict_rows.push_back(filter::to_json(v));
      verdicts.push_back(v);
    }
    for (const auto& f : result.failures) {
      failure_rows.push_back({{"comment_id", f.comment_id}, {"post_id", post.post_id},
                              {"kind", f.error.kind == filter::ClassifyErrorKind::Transport ? "Transport" : "Protocol"},
                              {"message", f.error.message}, {"raw", f.error.raw}});
    }
  }
  emit_jsonl(ctx, manifest, join(o.out, "verdicts.jsonl"), verdict_rows);
  emit_jsonl(ctx, manifest, join(o.out, "failures.jsonl"), failure_rows);

  if (!o.gold.empty()) {
    if (!fs::exists(ctx.resolve(o.gold))) throw UsageError("gold file not found: " + ctx.resolve(o.gold).string());
    const auto gold = filter::load_gold(ctx.resolve(o.gold));
    manifest.input(o.gold);
    std::set<std::string> gold_ids;
    for (const auto& g : gold) gold_ids.insert(g.comment_id);
    std::vector<filter::ClassifierVerdict> scored;
    for (const auto& v : verdicts) {
      if (gold_ids.count(v.comment_id)) scored.push_back(v);
    }
    const auto matrix = filter::confusion_matrix(scored, gold);
    const json doc{{"classifier_id", classifier->id()},
                   {"confusion", filter::to_json(matrix)},
                   {"metrics", filter::to_json(filter::metrics_from(matrix))}};
    write_file_atomic(ctx.resolve(join(o.out, "metrics.json")), doc.dump(2) + "\n");
    manifest.output(join(o.out, "metrics.json"));
  }
  manifest.write();
  fmt::print("classified {} comments with {}: {} fact-checks, {} failures\n", verdicts.size(), classifier->id(),
             kept, failure_rows.size());
  if (!failure_rows.empty()) {
    spdlog::error("{} comments could not be classified; see {}", failure_rows.size(), join(o.out, "failures.jsonl"));
    return kExitRuntime;
  }
  return kExitOk;
}

// --- synthesize ---------------------------------------------------------------

struct SynthesizeOptions {
  std::string corpus = "corpus", verdicts = "filter/verdicts.jsonl", out = "synthesis";
  std::string window, generator = "stub", model, cap_stage = "after-filter";
  std::size_t first_n = 0, max_comments = 300, char_limit = 280, min_factchecks = 25, max_retries = 3, jobs = 1;
  std::uint64_t seed = 0;
};

int cmd_synthesize(const Context& ctx, const SynthesizeOptions& o) {
  if (o.window.empty() == (o.first_n == 0)) throw UsageError("exactly one of --window or --first-n is required");
  std::optional<Duration> window;
  if (!o.window.empty()) window = duration_flag(o.window, "--window");

  Manifest manifest(ctx, "synthesize", o.out);
  manifest.seed(o.seed);
  manifest.config() = {{"corpus", o.corpus},         {"verdicts", o.verdicts},    {"out", o.out},
                       {"window", o.window},         {"first_n", o.first_n},      {"max_comments", o.max_comments},
                       {"char_limit", o.char_limit}, {"min_factchecks", o.min_factchecks},
                       {"max_retries", o.max_retries}, {"seed", o.seed},         {"generator", o.generator},
                       {"model", o.model},           {"cap_stage", o.cap_stage}, {"jobs", o.jobs}};
  const auto corpus = load_corpus_dir(ctx, o.corpus, manifest);
  const auto verdicts = load_verdicts(ctx, o.verdicts, manifest);

  synthesis::SynthesisConfig base;
  base.max_comments = o.max_comments;
  base.char_limit = o.char_limit;
  base.min_factcheck_comments = o.min_factchecks;
  base.max_regenerations = o.max_retries;
  base.cap_stage = o.cap_stage == "before-filter" ? synthesis::CapStage::BeforeFilter : synthesis::CapStage::AfterFilter;
  std::unique_ptr<synthesis::Generator> generator;
  if (o.generator == "stub") {
    generator = std::make_unique<synthesis::StubGenerator>();
    base.model_id = o.model.empty() ? "stub" : o.model;
  } else {
    if (o.model.empty()) throw UsageError("--generator remote needs --model");
    generator = std::make_unique<synthesis::RemoteGenerator>(remote_transport(), o.model);
    base.model_id = o.model;
  }
  try {
    base.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  const auto posts = corpus.posts();
  std::vector<json> rows(posts.size());
  std::atomic<std::size_t> generated{0};
  parallel_for(posts.size(), o.jobs, [&](std::size_t i) {
    const auto& post = posts[i];
    // Comments at or after the human note's display are never used.
    const auto pre = corpus::pre_note_slice(corpus, post.post_id);
    const auto slice = window ? corpus::window_slice(corpus, post.post_id, *window)
                              : corpus::first_n_slice(corpus, post.post_id, o.first_n);
    const auto usable = slice.first(std::min(slice.size(), pre.size()));
    auto config = base;
    config.seed = o.seed + fnv1a64(post.post_id);
    const auto candidates = synthesis::candidate_comments(
        usable, [&](const corpus::Comment& c) { return verdicts.is_fact_check(c); }, config);
    const auto outcome = synthesis::synthesize(post, candidates, config, *generator);
    if (outcome.generated()) ++generated;
    rows[i] = synthesis::to_json(outcome, config);
  });
  fs::create_directories(ctx.resolve(o.out));
  emit_jsonl(ctx, manifest, join(o.out, "commenotes.jsonl"), rows);
  manifest.write();
  fmt::print("synthesized {} of {} posts\n", generated.load(), posts.size());
  return kExitOk;
}

// --- analyze ------------------------------------------------------------------

struct AnalyzeOptions {
  std::string corpus = "corpus", verdicts = "filter/verdicts.jsonl", out = "analysis";
  std::string horizon = "2h", window = "2h", timeline;
};

int cmd_analyze(const Context& ctx, const AnalyzeOptions& o) {
  const auto paths = corpus::corpus_paths_in(ctx.resolve(o.corpus));
  if (!fs::exists(paths.comments)) {
    throw UsageError("analyze needs a comments file: " + paths.comments.string() +
                     " does not exist (run ingest first)");
  }
  const auto horizon = duration_flag(o.horizon, "--horizon");
  const auto window = duration_flag(o.window, "--window");
  analytics::PopularityOptions pop_options;
  if (!o.timeline.empty()) pop_options.fixed_timeline = duration_flag(o.timeline, "--timeline");

  Manifest manifest(ctx, "analyze", o.out);
  manifest.config() = {{"corpus", o.corpus}, {"verdicts", o.verdicts}, {"out", o.out},
                       {"horizon", o.horizon}, {"window", o.window},  {"timeline", o.timeline}};
  const auto corpus = load_corpus_dir(ctx, o.corpus, manifest);
  const auto verdicts = load_verdicts(ctx, o.verdicts, manifest);

  std::vector<analytics::PostBins> bins;
  std::vector<analytics::PopularityResult> popularity;
  std::size_t with_fact_check = 0;
  for (const auto& post : corpus.posts()) {
    const auto pre = corpus::pre_note_slice(corpus, post.post_id);
    const auto fc = analytics::fact_checks_of(pre, verdicts);
    try {
      auto b = analytics::bin_fact_checks(post, fc, horizon);
      std::size_t total = 0;
      for (const auto& x : b) total += x.count;
      if (total > 0) ++with_fact_check;
      bins.push_back({post.post_id, std::move(b)});
    } catch (const std::invalid_argument& e) {
      throw UsageError(std::string("--horizon: ") + e.what());
    }
    popularity.push_back(analytics::popularity(post, pre, pop_options));
  }
  if (bins.empty()) throw UsageError("corpus has no posts");

  fs::create_directories(ctx.resolve(o.out));
  auto emit = [&](const char* name, auto&& writer) {
    const auto rel = join(o.out, name);
    writer(ctx.resolve(rel));
    manifest.output(rel);
  };
  emit("bins.csv", [&](const fs::path& p) { analytics::write_bins_csv(p, bins); });
  emit("curve_count.csv", [&](const fs::path& p) {
    analytics::write_curve_csv(p, analytics::cumulative_curve(bins, analytics::CurveKind::Count));
  });
  emit("curve_percentage.csv", [&](const fs::path& p) {
    analytics::write_curve_csv(p, analytics::cumulative_curve(bins, analytics::CurveKind::Percentage));
  });
  emit("popularity.csv", [&](const fs::path& p) { analytics::write_popularity_csv(p, popularity); });
  const auto authors = analytics::author_breakdown(corpus, verdicts, window);
  const auto topics = analytics::topic_breakdown(corpus, verdicts);
  emit("authors.csv", [&](const fs::path& p) { analytics::write_breakdown_csv(p, authors); });
  emit("topics.csv", [&](const fs::path& p) { analytics::write_breakdown_csv(p, topics); });

  std::vector<std::string> notices = authors.notices;
  notices.insert(notices.end(), topics.notices.begin(), topics.notices.end());
  std::size_t excluded = 0;
  for (const auto& p : popularity) {
    if (const auto* e = std::get_if<analytics::PopularityExclusion>(&p)) {
      ++excluded;
      notices.push_back(fmt::format("popularity: post {} excluded ({})", e->post_id, e->reason));
    }
  }
  const json summary{{"posts", bins.size()},
                     {"posts_with_fact_check_in_horizon", with_fact_check},
                     {"share_with_fact_check_in_horizon",
                      static_cast<double>(with_fact_check) / static_cast<double>(bins.size())},
                     {"popularity_excluded", excluded},
                     {"notices", notices}};
  emit("summary.json", [&](const fs::path& p) { write_file_atomic(p, summary.dump(2) + "\n"); });
  manifest.write();
  for (const auto& n : notices) spdlog::info("{}", n);
  fmt::print("analyzed {} posts; {} with a fact-check within {}\n", bins.size(), with_fact_check, o.horizon);
  return kExitOk;
}

// --- eval-plan ----------------------------------------------------------------

struct PlanOptions {
  std::size_t raters = 0, per_rater = 0, pool = 0;
  std::uint64_t seed = 0;
  std::string commenotes, corpus = "corpus", out = "study";
};

int cmd_eval_plan(const Context& ctx, const PlanOptions& o) {
  Manifest manifest(ctx, "eval-plan", o.out);
  manifest.seed(o.seed);
  manifest.config() = {{"raters", o.raters}, {"per_rater", o.per_rater}, {"pool", o.pool}, {"seed", o.seed},
                       {"commenotes", o.commenotes}, {"corpus", o.corpus}, {"out", o.out}};
  std::vector<std::string> pool;
  std::vector<service::NotePair> pairs;
  if (!o.commenotes.empty()) {
    const auto corpus = load_corpus_dir(ctx, o.corpus, manifest);
    const auto path = ctx.resolve(o.commenotes);
    if (!fs::exists(path)) throw UsageError("missing commenotes file " + path.string());
    manifest.input(o.commenotes);
    manifest.parent(parent_dir(o.commenotes));
    for (const auto& line : read_lines(path)) {
      const auto row = json::parse(line.text, nullptr, false);
      if (row.is_discarded()) throw UsageError(fmt::format("{}:{}: malformed row", o.commenotes, line.line_no));
      if (row.value("outcome", std::string()) != "Generated" || !row.contains("note") || !row["note"].is_object()) continue;
      const auto post_id = row.value("post_id", std::string());
      if (!corpus.has_post(post_id)) continue;
      const auto human = corpus.note_for(post_id);
      if (!human.note_text || human.note_text->empty()) continue;
      pairs.push_back({post_id, corpus.post(post_id).text, row["note"].value("text", std::string()), *human.note_text,
                       row["note"].value("model_id", std::string())});
      if (pairs.size() == o.pool) break;
    }
    if (pairs.size() < o.pool) {
      throw UsageError(fmt::format("only {} posts have both a commenote and a human note; --pool is {}", pairs.size(),
                                   o.pool));
    }
    for (const auto& p : pairs) pool.push_back(p.post_id);
  } else {
    const auto width = std::to_string(o.pool).size();
    for (std::size_t i = 1; i <= o.pool; ++i) pool.push_back(fmt::format("post-{:0{}}", i, width));
  }
  std::vector<std::string> raters;
  const auto width = std::to_string(o.raters).size();
  for (std::size_t i = 1; i <= o.raters; ++i) raters.push_back(fmt::format("rater-{:0{}}", i, width));

  evaluation::StudyPlan plan;
  try {
    plan = evaluation::plan_study(pool, o.per_rater, raters, o.seed);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const auto balance = evaluation::check_balance(plan);
  if (!balance.ok) {
    for (const auto& p : balance.problems) spdlog::error("{}", p);
    return kExitRuntime;
  }
  fs::create_directories(ctx.resolve(o.out));
  write_file_atomic(ctx.resolve(join(o.out, "plan.json")), evaluation::to_json(plan).dump(2) + "\n");
  manifest.output(join(o.out, "plan.json"));
  if (!pairs.empty()) {
    service::write_pairs(ctx.resolve(join(o.out, "pairs.json")), pairs);
    manifest.output(join(o.out, "pairs.json"));
  }
  manifest.write();
  fmt::print("planned {} raters x {} posts over {} posts ({} ratings per post)\n", o.raters, o.per_rater, o.pool,
             plan.ratings_per_post());
  return kExitOk;
}

// --- eval-report --------------------------------------------------------------

struct ReportOptions {
  std::string study = "study", study_id = "study", out;
};

int cmd_eval_report(const Context& ctx, const ReportOptions& o) {
  const auto out = o.out.empty() ? join(o.study, "report") : o.out;
  Manifest manifest(ctx, "eval-report", out);
  manifest.config() = {{"study", o.study}, {"study_id", o.study_id}, {"out", out}};
  const auto state = service::load_study_state(ctx.resolve(o.study), false);
  for (const char* name : {"plan.json", "pairs.json", "sessions.jsonl", "ratings.jsonl", "demographics.jsonl"}) {
    if (fs::exists(ctx.resolve(join(o.study, name)))) manifest.input(join(o.study, name));
  }
  if (state.torn_tail) spdlog::warn("ignoring an interrupted final write in the study logs");
  const auto report = service::study_report(state, o.study_id);
  evaluation::write_report(ctx.resolve(out), report);
  for (const char* name : {"report.json", "helpfulness.csv", "win_rate.csv", "dimensions.csv", "subgroups.csv"}) {
    manifest.output(join(out, name));
  }
  manifest.write();
  fmt::print("report over {} groups; {} raters excluded\n", report.groups.size(), report.excluded_raters.size());
  return kExitOk;
}

// --- serve --------------------------------------------------------------------

struct ServeOptions {
  std::string study = "study", study_id = "study", host = "127.0.0.1", static_dir, idle_timeout;
  int port = 8080;
};

int cmd_serve(const Context& ctx, const ServeOptions& o) {
  service::StudyService::Options options;
  options.study_id = o.study_id;
  if (!o.idle_timeout.empty()) options.idle_timeout = duration_flag(o.idle_timeout, "--idle-timeout");
  Manifest manifest(ctx, "serve", o.study);
  manifest.config() = {{"study", o.study}, {"study_id", o.study_id}, {"host", o.host}, {"port", o.port},
                       {"static", o.static_dir}, {"idle_timeout", o.idle_timeout}};
  manifest.input(join(o.study, "plan.json"));
  manifest.input(join(o.study, "pairs.json"));

  std::unique_ptr<service::StudyService> svc;
  try {
    svc = std::make_unique<service::StudyService>(ctx.resolve(o.study), options);
  } catch (const service::StoreCorruptError& e) {
    spdlog::error("refusing to start: {}", e.what());
    return kExitRuntime;
  }
  service::ServerConfig config{o.host, o.port, std::nullopt};
  if (!o.static_dir.empty()) config.static_dir = ctx.resolve(o.static_dir);
  service::HttpServer server(*svc, config);

  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  const int port = server.bind();
  fmt::print("listening on http://{}:{}\n", o.host, port);
  std::fflush(stdout);
  std::jthread listener([&] { server.listen(); });
  int sig = 0;
  sigwait(&signals, &sig);
  spdlog::info("signal {} received, shutting down", sig);
  server.stop();
  listener.join();
  for (const char* name : {"sessions.jsonl", "ratings.jsonl", "demographics.jsonl"}) {
    if (fs::exists(ctx.resolve(join(o.study, name)))) manifest.output(join(o.study, name));
  }
  manifest.write();
  return kExitOk;
}

void init_logging(const std::string& level) {
  static std::once_flag once;
  std::call_once(once, [] {
    auto logger = spdlog::stderr_color_mt("commenotes");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("%^%l%$: %v");
  });
  spdlog::set_level(spdlog::level::from_str(level));
}

}  // namespace

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

int run(int argc, const char* const* argv) {
  CLI::App app{"Fact-check comment filtering, note synthesis, analytics and rating study tools", "commenotes"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value config file; [subcommand] sections, flags override");

  Context ctx;
  std::string data_dir = ".";
  std::string log_level = "info";
  app.add_option("--data-dir", data_dir, "Base directory for every relative path")->capture_default_str();
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}))
      ->capture_default_str();

  std::function<int()> action;

  IngestOptions ingest;
  auto* ic = app.add_subcommand("ingest", "Validate raw JSONL and write a normalized corpus");
  ic->add_option("--posts", ingest.posts, "Posts JSONL")->required();
  ic->add_option("--comments", ingest.comments, "Comments JSONL")->required();
  ic->add_option("--notes", ingest.notes, "Community note records JSONL");
  ic->add_option("--out", ingest.out, "Output directory")->capture_default_str();
  ic->add_flag("--strict", ingest.strict, "Abort on the first rejected line");
  ic->callback([&] { action = [&] { return cmd_ingest(ctx, ingest); }; });

  FilterOptions filt;
  auto* fc = app.add_subcommand("filter", "Label comments as fact-checks");
  fc->add_option("--corpus", filt.corpus, "Corpus directory")->capture_default_str();
  fc->add_option("--classifier", filt.classifier, "heuristic or remote")
      ->check(CLI::IsMember({"heuristic", "remote"}))
      ->capture_default_str();
  fc->add_option("--cues", filt.cues, "Cue lexicon for the heuristic classifier");
  fc->add_option("--model", filt.model, "Model for the remote classifier")->capture_default_str();
  fc->add_option("--gold", filt.gold, "Gold labels JSONL (comment_id, gold_label)");
  fc->add_option("--scope", filt.scope, "all or pre-note")->check(CLI::IsMember({"all", "pre-note"}))->capture_default_str();
  fc->add_option("--jobs", filt.jobs, "Concurrent classifier calls")->check(CLI::PositiveNumber)->capture_default_str();
  fc->add_option("--out", filt.out, "Output directory")->capture_default_str();
  fc->callback([&] { action = [&] { return cmd_filter(ctx, filt); }; });

  SynthesizeOptions syn;
  auto* sc = app.add_subcommand("synthesize", "Synthesize one note per post from its fact-check comments");
  sc->add_option("--corpus", syn.corpus, "Corpus directory")->capture_default_str();
  sc->add_option("--verdicts", syn.verdicts, "Verdicts JSONL from filter")->capture_default_str();
  auto* win = sc->add_option("--window", syn.window, "Comments within this duration of the post, e.g. 2h");
  auto* first = sc->add_option("--first-n", syn.first_n, "The N earliest comments")->check(CLI::PositiveNumber);
  win->excludes(first);
  first->excludes(win);
  sc->add_option("--max-comments", syn.max_comments, "Comment cap")->check(CLI::PositiveNumber)->capture_default_str();
  sc->add_option("--char-limit", syn.char_limit, "Note length limit")->check(CLI::PositiveNumber)->capture_default_str();
  sc->add_option("--min-factchecks", syn.min_factchecks, "Eligibility gate")->check(CLI::PositiveNumber)->capture_default_str();
  sc->add_option("--max-retries", syn.max_retries, "Total generation calls per post")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sc->add_option("--seed", syn.seed, "Sampling seed")->required();
  sc->add_option("--generator", syn.generator, "stub or remote")->check(CLI::IsMember({"stub", "remote"}))->capture_default_str();
  sc->add_option("--model", syn.model, "Model id recorded on each note (required for remote)");
  sc->add_option("--cap-stage", syn.cap_stage, "after-filter or before-filter")
      ->check(CLI::IsMember({"after-filter", "before-filter"}))
      ->capture_default_str();
  sc->add_option("--jobs", syn.jobs, "Posts processed concurrently")->check(CLI::PositiveNumber)->capture_default_str();
  sc->add_option("--out", syn.out, "Output directory")->capture_default_str();
  sc->callback([&] { action = [&] { return cmd_synthesize(ctx, syn); }; });

  AnalyzeOptions an;
  auto* ac = app.add_subcommand("analyze", "Temporal bins, cumulative curves, popularity and breakdowns");
  ac->add_option("--corpus", an.corpus, "Corpus directory")->capture_default_str();
  ac->add_option("--verdicts", an.verdicts, "Verdicts JSONL from filter")->capture_default_str();
  ac->add_option("--horizon", an.horizon, "Binning horizon, a multiple of 15m")->capture_default_str();
  ac->add_option("--window", an.window, "Window for the author breakdown")->capture_default_str();
  ac->add_option("--timeline", an.timeline, "Fixed popularity timeline instead of the last comment");
  ac->add_option("--out", an.out, "Output directory")->capture_default_str();
  ac->callback([&] { action = [&] { return cmd_analyze(ctx, an); }; });

  PlanOptions plan;
  auto* pc = app.add_subcommand("eval-plan", "Balanced assignment of note pairs to raters");
  pc->add_option("--raters", plan.raters, "Number of raters")->required()->check(CLI::PositiveNumber);
  pc->add_option("--per-rater", plan.per_rater, "Posts per rater")->required()->check(CLI::PositiveNumber);
  pc->add_option("--pool", plan.pool, "Post pool size")->required()->check(CLI::PositiveNumber);
  pc->add_option("--seed", plan.seed, "Assignment seed")->required();
  pc->add_option("--commenotes", plan.commenotes, "commenotes.jsonl to draw note pairs from");
  pc->add_option("--corpus", plan.corpus, "Corpus directory holding the human notes")->capture_default_str();
  pc->add_option("--out", plan.out, "Study directory")->capture_default_str();
  pc->callback([&] { action = [&] { return cmd_eval_plan(ctx, plan); }; });

  ReportOptions rep;
  auto* rc = app.add_subcommand("eval-report", "Aggregate a study directory into report.json and CSVs");
  rc->add_option("--study", rep.study, "Study directory")->capture_default_str();
  rc->add_option("--study-id", rep.study_id, "Study id")->capture_default_str();
  rc->add_option("--out", rep.out, "Output directory (default <study>/report)");
  rc->callback([&] { action = [&] { return cmd_eval_report(ctx, rep); }; });

  ServeOptions srv;
  auto* vc = app.add_subcommand("serve", "Run the rating study HTTP service");
  vc->add_option("--study", srv.study, "Study directory")->capture_default_str();
  vc->add_option("--study-id", srv.study_id, "Study id served under /reports")->capture_default_str();
  vc->add_option("--host", srv.host, "Bind address")->capture_default_str();
  vc->add_option("--port", srv.port, "Port, 0 for any")->check(CLI::Range(0, 65535))->capture_default_str();
  vc->add_option("--static", srv.static_dir, "Console assets served under /app");
  vc->add_option("--idle-timeout", srv.idle_timeout, "Abandon sessions idle longer than this");
  vc->callback([&] { action = [&] { return cmd_serve(ctx, srv); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }
  init_logging(log_level);
  ctx.data_dir = data_dir;

  auto usage = [&](const std::exception& e) {
    spdlog::error("{}", e.what());
    const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    std::cerr << sub->help();
    return kExitValidation;
  };
  try {
    return action();
  } catch (const UsageError& e) {
    return usage(e);
  } catch (const corpus::CorpusError& e) {
    spdlog::error("{}", e.what());
    return kExitValidation;
  } catch (const std::invalid_argument& e) {
    spdlog::error("{}", e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitRuntime;
  }
}

}  // namespace commenotes::cli
