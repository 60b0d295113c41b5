#pragma once

// End-to-end driver. Stages run in dependency order; each stage's outputs
// are written atomically (temp file, then rename) and recorded in a
// manifest with a content key derived from its inputs and configuration,
// so a rerun with nothing changed skips every stage.
//
// Output layout:
//   <out>/stages/corpus.jsonl    canonical ingested corpus
//   <out>/stages/scored.jsonl    corpus with toxicity attached
//   <out>/stages/manifest.json   stage -> key
//   <out>/report/...             metrics, churn, classification, plot data

#include <array>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ctu/churn.hpp"
#include "ctu/classifier.hpp"
#include "ctu/error.hpp"
#include "ctu/log.hpp"
#include "ctu/metrics.hpp"
#include "ctu/report.hpp"
#include "ctu/scoring.hpp"
#include "ctu/timeline.hpp"

namespace ctu {

// Bumped whenever an output format or metric definition changes, so stale
// stage caches are not reused.
inline constexpr const char* kPipelineVersion = "ctu-pipeline/1";

enum class Stage { ingest, score, metrics, churn, classify, report };

inline constexpr std::array<Stage, 6> kAllStages = {Stage::ingest,  Stage::score,    Stage::metrics,
                                                    Stage::churn,   Stage::classify, Stage::report};

inline const char* stage_name(Stage s) {
  switch (s) {
    case Stage::ingest: return "ingest";
    case Stage::score: return "score";
    case Stage::metrics: return "metrics";
    case Stage::churn: return "churn";
    case Stage::classify: return "classify";
    case Stage::report: return "report";
  }
  return "?";
}

inline Stage parse_stage(const std::string& s) {
  for (auto st : kAllStages)
    if (s == stage_name(st)) return st;
  throw ConfigError("unknown stage '" + s + "'");
}

struct RunConfig {
  std::vector<std::filesystem::path> inputs;
  std::optional<InputFormat> format;  // by extension when unset
  std::optional<std::size_t> required_length;
  IngestOptions ingest;
  ScorerConfig scorer;
  std::filesystem::path output_dir;
  std::set<Stage> stages{kAllStages.begin(), kAllStages.end()};
  std::size_t parallelism = 1;
  bool force = false;
  std::optional<std::filesystem::path> user_scores;
  bool svg = false;
  PValueMethod p_value = PValueMethod::t_approximation;

  void validate() const {
    if (stages.empty()) throw ConfigError("no stages selected");
    if (output_dir.empty()) throw ConfigError("output directory is required");
    if (parallelism == 0) throw ConfigError("parallelism must be positive");
    if (required_length && *required_length == 0) throw ConfigError("required_length must be positive");
    if (stages.count(Stage::ingest) && inputs.empty()) throw ConfigError("ingest needs at least one input file");
    if (stages.count(Stage::score)) scorer.validate();
  }
};

// Reads a JSON run configuration. The API key itself is never part of the
// file: `scorer.api_key_env` names the environment variable holding it.
inline RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
  RunConfig c;
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
  };
  try {
    for (const auto& p : j.value("inputs", std::vector<std::string>{})) c.inputs.push_back(resolve(p));
    if (j.contains("format")) c.format = parse_input_format(j.at("format").get<std::string>());
    if (j.contains("required_length") && !j.at("required_length").is_null())
      c.required_length = j.at("required_length").get<std::size_t>();
    if (j.contains("on_bad_record")) {
      const auto v = j.at("on_bad_record").get<std::string>();
      if (v == "fail")
        c.ingest.on_bad_record = OnBadRecord::fail;
      else if (v == "skip_and_log")
        c.ingest.on_bad_record = OnBadRecord::skip_and_log;
      else
        throw ConfigError("on_bad_record must be fail or skip_and_log");
    }
    if (j.contains("timestamp_floor")) {
      const auto& f = j.at("timestamp_floor");
      std::optional<EpochSeconds> ts =
          f.is_number_integer() ? std::optional<EpochSeconds>(f.get<EpochSeconds>()) : parse_rfc3339(f.get<std::string>());
      if (!ts) throw ConfigError("timestamp_floor must be RFC 3339 or epoch seconds");
      c.ingest.timestamp_floor = *ts;
    }
    if (j.contains("output_dir")) c.output_dir = resolve(j.at("output_dir").get<std::string>());
    if (j.contains("stages")) {
      c.stages.clear();
      for (const auto& s : j.at("stages")) c.stages.insert(parse_stage(s.get<std::string>()));
    }
    c.parallelism = j.value("parallelism", c.parallelism);
    c.force = j.value("force", c.force);
    c.svg = j.value("svg", c.svg);
    if (j.value("exact_p", false)) c.p_value = PValueMethod::exact_permutation;
    if (j.contains("user_scores")) c.user_scores = resolve(j.at("user_scores").get<std::string>());

    if (j.contains("scorer")) {
      const auto& s = j.at("scorer");
      if (s.contains("mode")) c.scorer.mode = parse_scorer_mode(s.at("mode").get<std::string>());
      c.scorer.endpoint_url = s.value("endpoint", c.scorer.endpoint_url);
      c.scorer.max_qps = s.value("qps", c.scorer.max_qps);
      c.scorer.max_retries = s.value("max_retries", c.scorer.max_retries);
      c.scorer.attribute = s.value("attribute", c.scorer.attribute);
      c.scorer.max_in_flight = s.value("max_in_flight", c.scorer.max_in_flight);
      if (s.contains("cache")) c.scorer.cache_path = resolve(s.at("cache").get<std::string>());
      if (s.contains("api_key")) throw ConfigError("put the API key in an environment variable and set api_key_env");
      if (s.contains("api_key_env")) {
        const auto var = s.at("api_key_env").get<std::string>();
        if (const char* v = std::getenv(var.c_str())) c.scorer.api_key = v;
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad run configuration: ") + e.what());
  }
  return c;
}

// Collects a stage's output files under temporary names and renames them
// into place on commit(). Uncommitted temporaries are deleted.
class StageOutputs {
 public:
  StageOutputs() = default;
  StageOutputs(const StageOutputs&) = delete;
  StageOutputs& operator=(const StageOutputs&) = delete;

  ~StageOutputs() {
    for (auto& f : files_) {
      f.stream.reset();
      std::error_code ec;
      std::filesystem::remove(f.tmp, ec);
    }
  }

  std::ostream& open(const std::filesystem::path& target) {
    if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
    File f;
    f.target = target;
    f.tmp = target;
    f.tmp += ".tmp";
    f.stream = std::make_unique<std::ofstream>(f.tmp, std::ios::binary | std::ios::trunc);
    if (!*f.stream) throw IoError("cannot write '" + f.tmp.string() + "'");
    files_.push_back(std::move(f));
    return *files_.back().stream;
  }

  void write(const std::filesystem::path& target, const std::string& content) { open(target) << content; }

  void commit() {
    for (auto& f : files_) {
      f.stream->flush();
      if (!*f.stream) throw IoError("write failure on '" + f.tmp.string() + "'");
      f.stream.reset();
    }
    for (auto& f : files_) std::filesystem::rename(f.tmp, f.target);
    files_.clear();
  }

 private:
  struct File {
    std::filesystem::path target, tmp;
    std::unique_ptr<std::ofstream> stream;
  };
  std::vector<File> files_;
};

inline std::string sha256_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open '" + p.string() + "' for reading");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
  std::vector<char> buf(1 << 20);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &len);
  return sha256_hex(std::string_view(reinterpret_cast<const char*>(md), len));
}

inline Corpus load_corpus(const std::filesystem::path& p, std::size_t parallelism = 1) {
  // canonical files are always JSONL and always valid; the floor is not
  // reapplied so a custom floor survives the round trip
  IngestOptions opts;
  opts.timestamp_floor = std::numeric_limits<EpochSeconds>::min();
  opts.parallelism = parallelism;
  return ingest(p, InputFormat::jsonl, opts);
}

inline void write_text_file_atomic(const std::filesystem::path& p, const std::string& content) {
  StageOutputs out;
  out.write(p, content);
  out.commit();
}

// Writes every plot-data file of the report directory.
inline void write_report_files(StageOutputs& out, const std::filesystem::path& dir, const Corpus& corpus,
                               const std::vector<UserMetrics>& metrics, const CohortSummary& summary,
                               const std::vector<ChurnSummary>& churn, const std::optional<UserScoreTable>& user_scores,
                               std::optional<std::size_t> required_length, bool svg) {
  static const std::array<std::pair<const char*, std::optional<Group>>, 3> groups = {
      {{"all", std::nullopt}, {"ctu", Group::ctu}, {"bu", Group::bu}}};
  auto in_group = [&](const std::string& user, const std::optional<Group>& g) {
    return !g || summary.group_of(user) == g;
  };

  using Getter = std::optional<double> (*)(const UserMetrics&);
  const std::vector<std::pair<std::string, Getter>> metric_fields = {
      {"mean_toxicity", [](const UserMetrics& m) { return m.mean_toxicity; }},
      {"gini", [](const UserMetrics& m) { return m.gini; }},
      {"burstiness_all", [](const UserMetrics& m) { return m.burstiness_all; }},
      {"burstiness_toxic", [](const UserMetrics& m) { return m.burstiness_toxic; }},
      {"burstiness_benign", [](const UserMetrics& m) { return m.burstiness_benign; }},
      {"tweets_per_year", [](const UserMetrics& m) { return std::optional<double>(m.tweets_per_year); }},
  };
  using ChurnGetter = std::optional<double> (*)(const ChurnSummary&);
  const std::vector<std::pair<std::string, ChurnGetter>> churn_fields = {
      {"avg_life_weeks", [](const ChurnSummary& c) { return std::optional<double>(c.avg_life_weeks); }},
      {"avg_death_weeks", [](const ChurnSummary& c) { return c.avg_death_weeks; }},
      {"cycles", [](const ChurnSummary& c) { return std::optional<double>(static_cast<double>(c.cycles)); }},
      {"tweets_per_life", [](const ChurnSummary& c) { return std::optional<double>(c.mean_tweets_per_life); }},
      {"toxicity_per_life", [](const ChurnSummary& c) { return std::optional<double>(c.mean_toxicity_per_life); }},
  };

  std::map<std::string, std::map<std::string, std::vector<double>>> samples;  // metric -> group -> values
  for (const auto& [name, get] : metric_fields)
    for (const auto& [gname, g] : groups)
      for (const auto& m : metrics)
        if (auto v = get(m); v && in_group(m.user_id, g)) samples[name][gname].push_back(*v);
  for (const auto& [name, get] : churn_fields)
    for (const auto& [gname, g] : groups)
      for (const auto& c : churn)
        if (auto v = get(c); v && in_group(c.user_id, g)) samples[name][gname].push_back(*v);
  if (user_scores) {
    for (const auto& [gname, g] : groups)
      for (const auto& m : metrics) {
        auto it = user_scores->entries.find(m.user_id);
        if (it != user_scores->entries.end() && in_group(m.user_id, g))
          samples[user_scores->label][gname].push_back(it->second);
      }
  }

  for (const auto& [metric, by_group] : samples) {
    std::vector<SvgSeries> series;
    for (const auto& [gname, g] : groups) {
      auto it = by_group.find(gname);
      if (it == by_group.end() || it->second.empty()) continue;
      const auto e = ecdf(it->second);
      write_ecdf_tsv(e, out.open(dir / ("ecdf_" + metric + "_" + gname + ".tsv")));
      SvgSeries s{gname, {}};
      for (const auto& p : e) s.points.emplace_back(p.value, p.cumulative_fraction);
      series.push_back(std::move(s));
    }
    if (svg && !series.empty())
      out.write(dir / ("ecdf_" + metric + ".svg"), svg_line_chart("CDF of " + metric, metric, "CDF", series, true));
  }

  {
    std::vector<SvgSeries> series;
    for (const auto& [gname, g] : groups) {
      auto it = samples["burstiness_all"].find(gname);
      if (it == samples["burstiness_all"].end() || it->second.empty()) continue;
      const auto h = histogram_density(it->second);
      write_density_tsv(h, out.open(dir / ("pdf_burstiness_" + std::string(gname) + ".tsv")));
      SvgSeries s{gname, {}};
      for (const auto& b : h.bins) s.points.emplace_back(b.center, b.density);
      series.push_back(std::move(s));
    }
    if (svg && !series.empty())
      out.write(dir / "pdf_burstiness.svg", svg_line_chart("Density of burstiness", "burstiness", "density", series));
  }

  {
    auto& os = out.open(dir / "scatter_toxicity_gini.tsv");
    for (const auto& m : metrics)
      if (m.classifiable()) os << fmt::shortest(*m.mean_toxicity) << '\t' << fmt::shortest(*m.gini) << '\n';
  }

  write_yearly_table_csv(yearly_table(metrics, summary, required_length), out.open(dir / "yearly_table.csv"));
  const auto sets = active_year_sets(corpus, summary);
  write_year_sets_csv(sets.at(Group::ctu), out.open(dir / "year_sets_ctu.csv"));
  write_year_sets_csv(sets.at(Group::bu), out.open(dir / "year_sets_bu.csv"));

  {
    auto& os = out.open(dir / "user_yearly.csv");
    csv::write_row(os, {"user_id", "group", "year", "tweet_count", "mean_toxicity"});
    for (const auto& [user, tl] : corpus.timelines) {
      const auto g = summary.group_of(user);
      if (!g || !tl.fully_scored()) continue;
      for (const auto& p : user_yearly_series(tl))
        csv::write_row(os, {user, group_name(*g), std::to_string(p.year), std::to_string(p.tweet_count),
                            fmt::shortest(p.mean_toxicity)});
    }
  }
}

struct StageResult {
  Stage stage;
  bool skipped = false;
};

struct RunResult {
  std::vector<StageResult> stages;
  std::filesystem::path report_dir;
};

namespace detail {

class PipelineRun {
 public:
  explicit PipelineRun(const RunConfig& cfg)
      : cfg_(cfg),
        stage_dir_(cfg.output_dir / "stages"),
        report_dir_(cfg.output_dir / "report"),
        manifest_path_(stage_dir_ / "manifest.json") {
    if (std::filesystem::exists(manifest_path_)) {
      std::ifstream in(manifest_path_);
      try {
        manifest_ = nlohmann::json::parse(in);
      } catch (const nlohmann::json::exception&) {
        log::warn("run", "ignoring unreadable stage manifest", {{"path", manifest_path_.string()}});
        manifest_ = nlohmann::json::object();
      }
    }
  }

  RunResult execute() {
    RunResult result;
    result.report_dir = report_dir_;
    std::filesystem::create_directories(stage_dir_);
    for (Stage s : kAllStages) {
      if (!cfg_.stages.count(s)) continue;
      const auto key = key_for(s);
      const bool fresh = !cfg_.force && manifest_.value(stage_name(s), std::string()) == key && outputs_exist(s);
      if (fresh) {
        log::info(stage_name(s), "stage skipped; outputs up to date");
        result.stages.push_back({s, true});
        continue;
      }
      {
        log::StageTimer timer(stage_name(s));
        try {
          run_stage(s, timer);
        } catch (const Error& e) {
          log::emit({{"level", "error"}, {"stage", stage_name(s)}, {"msg", e.what()}});
          throw;
        }
      }
      manifest_[stage_name(s)] = key;
      write_text_file_atomic(manifest_path_, manifest_.dump(2) + "\n");
      result.stages.push_back({s, false});
    }
    return result;
  }

 private:
  // --- keys -----------------------------------------------------------------

  std::string key_for(Stage s) {
    if (auto it = keys_.find(s); it != keys_.end()) return it->second;
    nlohmann::json k;
    k["version"] = kPipelineVersion;
    k["stage"] = stage_name(s);
    switch (s) {
      case Stage::ingest: {
        std::vector<std::string> hashes;
        for (const auto& p : cfg_.inputs) hashes.push_back(sha256_file(p));
        k["inputs"] = hashes;
        k["formats"] = nlohmann::json::array();
        for (const auto& p : cfg_.inputs) k["formats"].push_back(format_for(p) == InputFormat::csv ? "csv" : "jsonl");
        k["required_length"] = cfg_.required_length ? nlohmann::json(*cfg_.required_length) : nlohmann::json();
        k["on_bad_record"] = cfg_.ingest.on_bad_record == OnBadRecord::fail ? "fail" : "skip";
        k["floor"] = cfg_.ingest.timestamp_floor;
        break;
      }
      case Stage::score: {
        k["corpus"] = upstream_key(Stage::ingest);
        k["mode"] = cfg_.scorer.mode == ScorerMode::remote ? "remote" : "offline";
        if (cfg_.scorer.mode == ScorerMode::remote) {
          k["endpoint"] = cfg_.scorer.endpoint_url;
          k["attribute"] = cfg_.scorer.attribute;
        } else {
          std::vector<std::string> words(cfg_.scorer.lexicon.begin(), cfg_.scorer.lexicon.end());
          std::sort(words.begin(), words.end());
          k["lexicon"] = words;
        }
        break;
      }
      case Stage::metrics:
      case Stage::churn:
        k["corpus"] = analysis_corpus_key();
        break;
      case Stage::classify:
        k["metrics"] = upstream_key(Stage::metrics);
        k["p_value"] = cfg_.p_value == PValueMethod::exact_permutation ? "exact" : "t";
        break;
      case Stage::report:
        k["corpus"] = analysis_corpus_key();
        k["classify"] = upstream_key(Stage::classify);
        k["churn"] = upstream_key(Stage::churn);
        k["required_length"] = cfg_.required_length ? nlohmann::json(*cfg_.required_length) : nlohmann::json();
        k["svg"] = cfg_.svg;
        k["user_scores"] = cfg_.user_scores ? sha256_file(*cfg_.user_scores) : std::string();
        break;
    }
    return keys_[s] = sha256_hex(k.dump());
  }

  // The key of a prerequisite: computed from config when the stage is part
  // of this run, otherwise taken from the manifest of an earlier run.
  std::string upstream_key(Stage s) {
    if (cfg_.stages.count(s)) return key_for(s);
    const auto k = manifest_.value(stage_name(s), std::string());
    if (k.empty() || !outputs_exist(s))
      throw ConfigError(std::string("stage '") + stage_name(s) + "' is required; include it in --stages");
    return k;
  }

  bool scoring_enabled() const {
    return cfg_.stages.count(Stage::score) || (manifest_.contains("score") && std::filesystem::exists(scored_path()));
  }

  std::string analysis_corpus_key() { return upstream_key(scoring_enabled() ? Stage::score : Stage::ingest); }

  InputFormat format_for(const std::filesystem::path& p) const { return cfg_.format.value_or(format_from_path(p)); }

  std::filesystem::path corpus_path() const { return stage_dir_ / "corpus.jsonl"; }
  std::filesystem::path scored_path() const { return stage_dir_ / "scored.jsonl"; }

  std::vector<std::filesystem::path> outputs_of(Stage s) const {
    switch (s) {
      case Stage::ingest: return {corpus_path()};
      case Stage::score: return {scored_path()};
      case Stage::metrics: return {report_dir_ / "metrics.csv"};
      case Stage::churn: return {report_dir_ / "churn.csv"};
      case Stage::classify: return {report_dir_ / "classification.csv", report_dir_ / "summary.json"};
      case Stage::report: return {report_dir_ / "yearly_table.csv", report_dir_ / "year_sets_ctu.csv",
                                  report_dir_ / "year_sets_bu.csv", report_dir_ / "user_yearly.csv"};
    }
    return {};
  }

  bool outputs_exist(Stage s) const {
    for (const auto& p : outputs_of(s))
      if (!std::filesystem::exists(p)) return false;
    return true;
  }

  // --- lazily materialized intermediates --------------------------------------

  const Corpus& ingested() {
    if (!ingested_) {
      if (!std::filesystem::exists(corpus_path())) throw ConfigError("no ingested corpus; run the ingest stage");
      ingested_ = load_corpus(corpus_path(), cfg_.parallelism);
    }
    return *ingested_;
  }

  const Corpus& analysis_corpus() {
    if (!scoring_enabled()) return ingested();
    if (!scored_) {
      if (!std::filesystem::exists(scored_path())) throw ConfigError("no scored corpus; run the score stage");
      scored_ = load_corpus(scored_path(), cfg_.parallelism);
    }
    return *scored_;
  }

  const std::vector<UserMetrics>& metrics() {
    if (!metrics_) {
      const auto path = report_dir_ / "metrics.csv";
      if (!cfg_.stages.count(Stage::metrics) && std::filesystem::exists(path)) {
        std::ifstream in(path, std::ios::binary);
        metrics_ = read_metrics_csv(in);
      } else {
        metrics_ = compute_metrics(analysis_corpus(), cfg_.parallelism);
      }
    }
    return *metrics_;
  }

  const CohortSummary& summary() {
    if (!summary_) summary_ = classify(metrics(), cfg_.p_value);
    return *summary_;
  }

  const std::vector<ChurnSummary>& churn() {
    if (!churn_) churn_ = cohort_churn(analysis_corpus(), cfg_.parallelism);
    return *churn_;
  }

  // --- stages ---------------------------------------------------------------

  void run_stage(Stage s, log::StageTimer& timer) {
    StageOutputs out;
    switch (s) {
      case Stage::ingest: {
        std::vector<std::filesystem::path> paths = cfg_.inputs;
        IngestOptions opts = cfg_.ingest;
        opts.parallelism = cfg_.parallelism;
        detail::CorpusBuilder builder(opts);
        for (const auto& p : paths) detail::ingest_into(p, format_for(p), builder);
        Corpus c = builder.finish();
        if (cfg_.required_length) c = filter_by_length(std::move(c), *cfg_.required_length);
        export_jsonl(c, out.open(corpus_path()));
        timer.set("users", c.timelines.size());
        timer.set("events", c.event_count());
        ingested_ = std::move(c);
        scored_.reset();
        break;
      }
      case Stage::score: {
        ScoreStats st;
        ingested();
        // later stages read the scored corpus, so the input can be consumed
        ScorerConfig scorer = cfg_.scorer;
        scorer.parallelism = cfg_.parallelism;
        Corpus c = score_corpus(std::move(*ingested_), scorer, &st);
        ingested_.reset();
        export_jsonl(c, out.open(scored_path()));
        timer.set("users", c.timelines.size());
        timer.set("events_scored", st.scored_events);
        scored_ = std::move(c);
        break;
      }
      case Stage::metrics: {
        metrics_ = compute_metrics(analysis_corpus(), cfg_.parallelism);
        write_metrics_csv(*metrics_, out.open(report_dir_ / "metrics.csv"));
        timer.set("users", metrics_->size());
        break;
      }
      case Stage::churn: {
        write_churn_csv(churn(), out.open(report_dir_ / "churn.csv"));
        timer.set("users", churn().size());
        break;
      }
      case Stage::classify: {
        const auto& sum = summary();
        write_classification_csv(sum, out.open(report_dir_ / "classification.csv"));
        out.write(report_dir_ / "summary.json", summary_json(sum, metrics()).dump(2) + "\n");
        timer.set("ctu", sum.ctu_ids.size());
        timer.set("bu", sum.bu_ids.size());
        timer.set("excluded", sum.excluded_ids.size());
        break;
      }
      case Stage::report: {
        std::optional<UserScoreTable> scores;
        if (cfg_.user_scores) scores = attach_user_scores(*cfg_.user_scores);
        write_report_files(out, report_dir_, analysis_corpus(), metrics(), summary(), churn(), scores,
                           cfg_.required_length, cfg_.svg);
        timer.set("users", metrics().size());
        break;
      }
    }
    out.commit();
  }

  const RunConfig& cfg_;
  std::filesystem::path stage_dir_, report_dir_, manifest_path_;
  nlohmann::json manifest_ = nlohmann::json::object();
  std::map<Stage, std::string> keys_;
  std::optional<Corpus> ingested_, scored_;
  std::optional<std::vector<UserMetrics>> metrics_;
  std::optional<CohortSummary> summary_;
  std::optional<std::vector<ChurnSummary>> churn_;
};

}  // namespace detail

inline RunResult run(const RunConfig& cfg) {
  cfg.validate();
  detail::PipelineRun pipeline(cfg);
  return pipeline.execute();
}

}  // namespace ctu
